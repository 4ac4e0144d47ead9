use super::Plane;
use crate::surface::{SurfaceMesh, SurfaceTopology};
use crate::{Point, Vector};

/// Signed dihedral angle across an edge shared by two outward facets.
/// `edge_dir` is the edge direction as walked by the first facet.
/// Positive for convex edges, negative for reflex ones, zero when flat.
pub fn dihedral_signed_angle(n1: &Vector, n2: &Vector, edge_dir: &Vector) -> f64 {
    let e = edge_dir.normalize();
    n1.cross(n2).dot(&e).atan2(n1.dot(n2))
}

pub fn is_reflex(n1: &Vector, n2: &Vector, edge_dir: &Vector, tau: f64) -> bool {
    dihedral_signed_angle(n1, n2, edge_dir) < -tau
}

/// Plane through the edge `a -> b` (walked in this direction by the facet
/// with normal `n1`) bisecting the exterior angle, so the two facets end up
/// on opposite sides. The first facet is on the non-positive side.
pub fn plane_through_reflex_edge(a: &Point, b: &Point, n1: &Vector, n2: &Vector, tol: f64) -> Option<Plane> {
    let e = (b - a).try_normalize(0.0)?;
    let d = n1 - n2;
    let m = d - e * d.dot(&e);
    let inward = n1.cross(&e);
    let m = match m.try_normalize(tol) {
        Some(m) if inward.dot(&m) > 0.0 => -m,
        Some(m) => m,
        None => -inward.try_normalize(0.0)?,
    };
    Plane::through(a, m)
}

/// The first facet of a manifold edge is the one walking it from the lower
/// to the higher vertex index.
pub(crate) fn edge_facets(topo: &SurfaceTopology, edge: usize) -> Option<(u32, u32)> {
    let e = &topo.edges()[edge];
    if !e.is_manifold() {
        return None;
    }
    let first = e.uses.iter().find(|u| u.forward)?.facet;
    let second = e.uses.iter().find(|u| !u.forward)?.facet;
    Some((first, second))
}

/// Per-edge reflex flags of a closed surface; open and non-manifold edges
/// are never reflex.
pub fn reflex_edges(mesh: &SurfaceMesh, topo: &SurfaceTopology, tau: f64) -> Vec<bool> {
    topo.edges()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            edge_facets(topo, i).is_some_and(|(f1, f2)| {
                let dir = mesh.vertices()[e.vertices[1] as usize] - mesh.vertices()[e.vertices[0] as usize];
                is_reflex(&mesh.normals()[f1 as usize], &mesh.normals()[f2 as usize], &dir, tau)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn convex_and_reflex_angles() {
        let z = Vector::z();
        let x = Vector::x();
        let y = Vector::y();
        assert!((dihedral_signed_angle(&z, &x, &y) - FRAC_PI_2).abs() < 1e-15);
        assert!((dihedral_signed_angle(&z, &x, &-y) + FRAC_PI_2).abs() < 1e-15);
        assert_eq!(dihedral_signed_angle(&z, &z, &x), 0.0);
        assert!(!is_reflex(&z, &z, &x, 1e-6));
        assert!(is_reflex(&z, &x, &-y, 1e-6));
    }

    #[test]
    fn bisector_separates_facets() {
        // facet 1 in y = 0 (x > 0), facet 2 in x = 0 (y > 0), notch at x, y > 0
        let n1 = Vector::y();
        let n2 = Vector::x();
        let a = Point::origin();
        let b = Point::new(0.0, 0.0, 1.0);
        assert!(is_reflex(&n1, &n2, &(b - a), 1e-6));
        let p = plane_through_reflex_edge(&a, &b, &n1, &n2, 1e-12).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.normal() - Vector::new(-s, s, 0.0)).norm() < 1e-15);
        assert!(p.signed_distance(&Point::new(1.0, 0.0, 0.5)) < 0.0);
        assert!(p.signed_distance(&Point::new(0.0, 1.0, 0.5)) > 0.0);
    }

    #[test]
    fn flat_edge_fallback_contains_edge() {
        let n = Vector::z();
        let a = Point::origin();
        let b = Point::new(1.0, 0.0, 0.0);
        let p = plane_through_reflex_edge(&a, &b, &n, &n, 1e-12).unwrap();
        assert!(p.signed_distance(&b).abs() < 1e-15);
        assert!(p.normal().dot(&n).abs() < 1e-15);
    }

    #[test]
    fn reflex_edges_of_solids() {
        let count = |m: &SurfaceMesh| {
            let topo = SurfaceTopology::build(m);
            reflex_edges(m, &topo, 1e-6).iter().filter(|&&r| r).count()
        };
        assert_eq!(count(&shapes::unit_cube()), 0);
        assert_eq!(count(&shapes::icosphere(2)), 0);
        assert_eq!(count(&shapes::l_prism()), 1);
        assert_eq!(count(&shapes::unit_cube().flipped()), 12);
    }
}
