use super::{classify, Plane, Side};
use crate::{Point, Vector};

/// Newell normal; its length is twice the polygon area.
pub fn polygon_normal(poly: &[Point]) -> Vector {
    let mut n = Vector::zeros();
    if poly.len() < 3 {
        return n;
    }
    let o = poly[0];
    for i in 1..poly.len() - 1 {
        n += (poly[i] - o).cross(&(poly[i + 1] - o));
    }
    n
}

pub fn polygon_area(poly: &[Point]) -> f64 {
    0.5 * polygon_normal(poly).norm()
}

fn lex_le(a: &Point, b: &Point) -> bool {
    (a.x, a.y, a.z) <= (b.x, b.y, b.z)
}

/// Crossing point of segment `a`-`b` with the plane. The segment is walked
/// in a canonical direction so both halves of a split agree bit for bit.
pub(crate) fn crossing(a: &Point, da: f64, b: &Point, db: f64, plane: &Plane) -> Point {
    let (p, q, dp, dq) = if lex_le(a, b) { (a, b, da, db) } else { (b, a, db, da) };
    let t = dp / (dp - dq);
    plane.project(&(p + (q - p) * t))
}

/// Part of a convex polygon on the non-positive side of `plane`.
///
/// Vertices within `tol` of the plane are projected onto it. A polygon
/// lying entirely on the plane is returned (snapped) unchanged; a polygon
/// that only touches the kept side along an edge or vertex yields an empty
/// result.
pub fn clip_polygon(poly: &[Point], plane: &Plane, tol: f64) -> Vec<Point> {
    let d: Vec<f64> = poly.iter().map(|p| plane.signed_distance(p)).collect();
    let s: Vec<Side> = d.iter().map(|&x| classify(x, tol)).collect();
    let snap = |i: usize| {
        if s[i] == Side::On {
            plane.project(&poly[i])
        } else {
            poly[i]
        }
    };
    if s.iter().all(|&x| x != Side::Positive) {
        return (0..poly.len()).map(snap).collect();
    }
    if s.iter().all(|&x| x != Side::Negative) {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let j = (i + 1) % poly.len();
        if s[i] != Side::Positive {
            out.push(snap(i));
        }
        let crosses = matches!(
            (s[i], s[j]),
            (Side::Negative, Side::Positive) | (Side::Positive, Side::Negative)
        );
        if crosses {
            out.push(crossing(&poly[i], d[i], &poly[j], d[j], plane));
        }
    }
    out
}

/// `(negative part, positive part)` of a convex polygon.
pub fn split_polygon(poly: &[Point], plane: &Plane, tol: f64) -> (Vec<Point>, Vec<Point>) {
    (
        clip_polygon(poly, plane, tol),
        clip_polygon(poly, &plane.flipped(), tol),
    )
}

fn segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}

/// Euclidean distance from `p` to a convex planar polygon.
pub fn point_polygon_distance(p: &Point, poly: &[Point]) -> f64 {
    match poly.len() {
        0 => f64::INFINITY,
        1 => (p - poly[0]).norm(),
        _ => {
            let n = polygon_normal(poly);
            let edges = || (0..poly.len()).map(|i| (poly[i], poly[(i + 1) % poly.len()]));
            if let Some(n) = n.try_normalize(0.0) {
                let inside = edges().all(|(a, b)| (b - a).cross(&(p - a)).dot(&n) >= 0.0);
                if inside {
                    return (p - poly[0]).dot(&n).abs();
                }
            }
            edges()
                .map(|(a, b)| segment_distance(p, &a, &b))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point> {
        vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn clip_square_in_half() {
        let plane = Plane::axis(0, 0.25, true);
        let (neg, pos) = split_polygon(&square(), &plane, 1e-12);
        assert!((polygon_area(&neg) - 0.25).abs() < 1e-15);
        assert!((polygon_area(&pos) - 0.75).abs() < 1e-15);
        // shared crossing points are identical
        let shared: Vec<_> = neg.iter().filter(|p| pos.contains(p)).collect();
        assert_eq!(shared.len(), 2);
    }

    #[test]
    fn touching_and_coplanar() {
        let touch = Plane::axis(0, 0.0, false); // keeps x >= 0 ... flipped: keeps x >= 0
        assert_eq!(clip_polygon(&square(), &touch, 1e-12).len(), 4);
        let edge_only = Plane::axis(0, 0.0, true); // keeps x <= 0: only the edge
        assert!(clip_polygon(&square(), &edge_only, 1e-12).is_empty());
        let coplanar = Plane::axis(2, 0.0, true);
        assert_eq!(clip_polygon(&square(), &coplanar, 1e-12).len(), 4);
    }

    #[test]
    fn distances() {
        let sq = square();
        assert!((point_polygon_distance(&Point::new(0.5, 0.5, 2.0), &sq) - 2.0).abs() < 1e-15);
        assert!((point_polygon_distance(&Point::new(2.0, 0.5, 0.0), &sq) - 1.0).abs() < 1e-15);
        assert_eq!(point_polygon_distance(&Point::new(1.0, 1.0, 0.0), &sq), 0.0);
    }
}
