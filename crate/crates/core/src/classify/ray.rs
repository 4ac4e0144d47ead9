use super::ClassifyError;
use crate::surface::SurfaceMesh;
use crate::{Point, Vector};

/// Directions tried in turn; the first is axis-parallel, the rest are fixed
/// generic directions used when a ray grazes an edge or vertex.
const DIRECTIONS: [[f64; 3]; 8] = [
    [1.0, 0.0, 0.0],
    [0.8944, 0.3162, 0.3162],
    [0.2673, 0.8018, 0.5345],
    [-0.5774, 0.4082, 0.7123],
    [0.3015, -0.9045, 0.3015],
    [-0.6247, -0.4685, 0.6247],
    [0.4364, 0.2182, -0.8729],
    [-0.7, 0.5, -0.5],
];

pub const RAY_ATTEMPTS: usize = DIRECTIONS.len();

/// Barycentric margin under which a hit is treated as grazing.
const EDGE_MARGIN: f64 = 1e-9;

enum Cast {
    Winding(i64),
    Grazing,
}

fn cast(surface: &SurfaceMesh, p: &Point, d: &Vector, tol: f64) -> Cast {
    let mut winding = 0;
    for f in 0..surface.facet_count() {
        let [a, b, c] = surface.triangle(f);
        let e1 = b - a;
        let e2 = c - a;
        let pv = d.cross(&e2);
        let det = e1.dot(&pv);
        let n = surface.normals()[f];
        if det.abs() <= 1e-14 * e1.norm() * e2.norm() {
            // parallel: only a problem when the ray runs inside the plane
            if (p - a).dot(&n).abs() <= tol {
                return Cast::Grazing;
            }
            continue;
        }
        let inv = 1.0 / det;
        let s = p - a;
        let u = s.dot(&pv) * inv;
        let q = s.cross(&e1);
        let v = d.dot(&q) * inv;
        let w = 1.0 - u - v;
        let t = e2.dot(&q) * inv;
        if u < -EDGE_MARGIN || v < -EDGE_MARGIN || w < -EDGE_MARGIN || t < -tol {
            continue;
        }
        if t <= tol || u <= EDGE_MARGIN || v <= EDGE_MARGIN || w <= EDGE_MARGIN {
            return Cast::Grazing;
        }
        winding += if n.dot(d) > 0.0 { 1 } else { -1 };
    }
    Cast::Winding(winding)
}

/// Whether `p` lies inside the closed oriented surface, by signed crossing
/// count along a ray (exits minus entries). For an outward-oriented
/// watertight surface this is the crossing parity.
pub fn point_in_solid(surface: &SurfaceMesh, p: &Point, tol: f64) -> Result<bool, ClassifyError> {
    for dir in DIRECTIONS {
        let d = Vector::from(dir).normalize();
        if let Cast::Winding(w) = cast(surface, p, &d, tol) {
            return Ok(w > 0);
        }
    }
    Err(ClassifyError::RayAmbiguous {
        point: [p.x, p.y, p.z],
        attempts: RAY_ATTEMPTS,
    })
}
