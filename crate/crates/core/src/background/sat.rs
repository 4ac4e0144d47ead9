use crate::surface::Aabb;
use crate::{Point, Vector};

/// Closed triangle/box overlap by the separating axis theorem: the three
/// box normals, the triangle normal and the nine edge-cross-axis products.
/// Zero axes (from degenerate triangles) are skipped, which keeps the test
/// exact for segments and points.
pub fn triangle_box_overlap(tri: &[Point; 3], b: &Aabb) -> bool {
    let c = b.center();
    let h = b.extent() / 2.0;
    let v = tri.map(|p| p - c);
    let e = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];

    let separated = |axis: Vector| {
        if axis == Vector::zeros() {
            return false;
        }
        let p = v.map(|x| x.dot(&axis));
        let lo = p[0].min(p[1]).min(p[2]);
        let hi = p[0].max(p[1]).max(p[2]);
        let r = h.x * axis.x.abs() + h.y * axis.y.abs() + h.z * axis.z.abs();
        lo > r || hi < -r
    };

    for a in 0..3 {
        let mut n = Vector::zeros();
        n[a] = 1.0;
        if separated(n) {
            return false;
        }
    }
    if separated(e[0].cross(&e[1])) {
        return false;
    }
    for edge in &e {
        for a in 0..3 {
            let mut n = Vector::zeros();
            n[a] = 1.0;
            if separated(edge.cross(&n)) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Aabb {
        Aabb::new(Point::origin(), Point::new(1.0, 1.0, 1.0))
    }

    #[test]
    fn basic_cases() {
        let inside = [
            Point::new(0.2, 0.2, 0.5),
            Point::new(0.8, 0.2, 0.5),
            Point::new(0.2, 0.8, 0.5),
        ];
        assert!(triangle_box_overlap(&inside, &unit()));
        // large triangle slicing the box though no vertex is inside
        let big = [
            Point::new(-5.0, -5.0, 0.5),
            Point::new(10.0, -5.0, 0.5),
            Point::new(-5.0, 10.0, 0.5),
        ];
        assert!(triangle_box_overlap(&big, &unit()));
        // near the corner, separated only by the triangle's own plane
        let corner = [
            Point::new(1.6, 0.0, 0.0),
            Point::new(0.0, 1.6, 0.0),
            Point::new(0.0, 0.0, 1.6),
        ]
        .map(|p| p + Vector::repeat(1.0));
        assert!(!triangle_box_overlap(&corner, &unit()));
        // touching a corner counts (closed box)
        let touch = [
            Point::new(1.0, 1.0, 1.0),
            Point::new(2.0, 1.0, 1.0),
            Point::new(1.0, 2.0, 1.0),
        ];
        assert!(triangle_box_overlap(&touch, &unit()));
    }

    fn sample_hits(tri: &[Point; 3], b: &Aabb) -> bool {
        // dense barycentric sampling: any sample inside proves overlap
        let n = 60;
        for i in 0..=n {
            for j in 0..=n - i {
                let (u, w) = (i as f64 / n as f64, j as f64 / n as f64);
                let p = tri[0] + (tri[1] - tri[0]) * u + (tri[2] - tri[0]) * w;
                if b.contains_point(&p) {
                    return true;
                }
            }
        }
        false
    }

    proptest! {
        #[test]
        fn never_misses_a_sampled_hit(
            pts in prop::array::uniform3((-1.0..2.0f64, -1.0..2.0f64, -1.0..2.0f64))
        ) {
            let tri = pts.map(|(x, y, z)| Point::new(x, y, z));
            if sample_hits(&tri, &unit()) {
                prop_assert!(triangle_box_overlap(&tri, &unit()));
            }
        }
    }
}
