//! Convex-polytope kernel: oriented planes, half-space clipping, measures
//! and reflex-edge helpers.
//!
//! All predicates take an absolute distance tolerance. Points within the
//! tolerance of a cutting plane are treated as lying on it and are
//! projected onto it.

mod polygon;
mod polytope;
pub(crate) mod reflex;

use crate::{Point, Vector};

pub use polygon::{clip_polygon, point_polygon_distance, polygon_area, polygon_normal, split_polygon};
pub use polytope::{clip_half_space, polytope_face_area, polytope_volume, Face, FaceTag, Polytope};
pub use reflex::{dihedral_signed_angle, is_reflex, plane_through_reflex_edge, reflex_edges};

/// Oriented plane `{x : normal . x = offset}`; the positive side is the one
/// the normal points into.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane {
    normal: Vector,
    offset: f64,
}

impl Plane {
    /// Normalizes `normal` (and scales `offset` with it). Returns `None` for a
    /// zero or non-finite normal.
    pub fn new(normal: Vector, offset: f64) -> Option<Self> {
        let len = normal.norm();
        if len <= 0.0 || !len.is_finite() {
            return None;
        }
        Some(Plane {
            normal: normal / len,
            offset: offset / len,
        })
    }

    pub fn through(point: &Point, normal: Vector) -> Option<Self> {
        let n = normal.try_normalize(0.0)?;
        Some(Plane {
            normal: n,
            offset: n.dot(&point.coords),
        })
    }

    /// Axis-aligned plane `x[axis] = value`, positive side towards `+axis`
    /// when `positive` is set.
    pub fn axis(axis: usize, value: f64, positive: bool) -> Self {
        let mut normal = Vector::zeros();
        let s = if positive { 1.0 } else { -1.0 };
        normal[axis] = s;
        Plane {
            normal,
            offset: s * value,
        }
    }

    pub fn normal(&self) -> Vector {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn signed_distance(&self, p: &Point) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }

    pub fn project(&self, p: &Point) -> Point {
        p - self.normal * self.signed_distance(p)
    }

    pub fn flipped(&self) -> Plane {
        Plane {
            normal: -self.normal,
            offset: -self.offset,
        }
    }
}

/// Where a point or primitive lies with respect to a plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Negative,
    On,
    Positive,
}

pub(crate) fn classify(d: f64, tol: f64) -> Side {
    if d > tol {
        Side::Positive
    } else if d < -tol {
        Side::Negative
    } else {
        Side::On
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_normalizes() {
        let p = Plane::new(Vector::new(0.0, 0.0, 2.0), 1.0).unwrap();
        assert_eq!(p.normal(), Vector::new(0.0, 0.0, 1.0));
        assert_eq!(p.offset(), 0.5);
        assert!((p.normal().norm() - 1.0).abs() < 1e-12);
        assert!(Plane::new(Vector::zeros(), 1.0).is_none());
        let q = p.flipped();
        assert_eq!(q.signed_distance(&Point::new(0.0, 0.0, 1.0)), -0.5);
        assert_eq!(p.project(&Point::new(1.0, 2.0, 3.0)), Point::new(1.0, 2.0, 0.5));
    }
}
