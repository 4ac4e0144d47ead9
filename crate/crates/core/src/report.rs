//! Assembled results and their JSON report.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::background::BackgroundMesh;
use crate::classify::{Location, LocationMap};
use crate::cutter::{BoundaryPiece, CellCut};
use crate::distributed::{Kind, TraceRecord};

/// Volumes and areas of a discretisation and the two error measures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Measures {
    pub v_interior: f64,
    pub v_exterior: f64,
    /// Volume of the background box.
    pub v_art: f64,
    pub a_boundary: f64,
    /// Enclosed volume of the input surface; absent when it is not closed.
    pub v_reference: Option<f64>,
    /// `|v_interior + v_exterior - v_art| / v_art`
    pub e_bbox: f64,
    /// `|v_interior - v_reference| / |v_reference|`
    pub e_interior: Option<f64>,
}

impl Measures {
    pub fn compute(mesh: &BackgroundMesh, map: &LocationMap, cuts: &[CellCut], v_reference: Option<f64>) -> Self {
        let [n_in, n_out, _, _] = map.counts();
        let cell = mesh.cell_volume();
        let v_interior = n_in as f64 * cell + cuts.iter().map(CellCut::interior_volume).sum::<f64>();
        let v_exterior = n_out as f64 * cell + cuts.iter().map(CellCut::exterior_volume).sum::<f64>();
        let v_art = mesh.domain().volume();
        let a_boundary = cuts.iter().map(CellCut::boundary_area).sum();
        Measures::from_volumes(v_interior, v_exterior, v_art, a_boundary, v_reference)
    }

    pub fn from_volumes(
        v_interior: f64,
        v_exterior: f64,
        v_art: f64,
        a_boundary: f64,
        v_reference: Option<f64>,
    ) -> Self {
        Measures {
            v_interior,
            v_exterior,
            v_art,
            a_boundary,
            v_reference,
            e_bbox: (v_interior + v_exterior - v_art).abs() / v_art,
            e_interior: v_reference.map(|r| (v_interior - r).abs() / r.abs()),
        }
    }
}

/// Message totals taken from a transport trace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MessageCounts {
    pub gather: usize,
    pub scatter: usize,
    pub sendrecv: usize,
    pub bytes: usize,
}

impl MessageCounts {
    pub fn from_trace(trace: &[TraceRecord]) -> Self {
        let mut m = MessageCounts::default();
        for r in trace {
            match r.kind {
                Kind::Gather => m.gather += 1,
                Kind::Scatter => m.scatter += 1,
                Kind::Sendrecv => m.sendrecv += 1,
            }
            m.bytes += r.bytes;
        }
        m
    }
}

/// The background mesh with every cell labelled, the cut cells with their
/// polytopes and boundary pieces, and the measures.
#[derive(Clone, Debug)]
pub struct EmbeddedDiscretisation {
    pub mesh: BackgroundMesh,
    pub parts: [usize; 3],
    pub map: LocationMap,
    /// Ascending by cell index.
    pub cuts: Vec<CellCut>,
    pub measures: Measures,
    /// Wall time per phase, seconds.
    pub timings: BTreeMap<String, f64>,
    pub trace: Vec<TraceRecord>,
}

impl EmbeddedDiscretisation {
    /// Indices of the uncut interior cells, ascending.
    pub fn interior_cells(&self) -> Vec<usize> {
        self.cells_with(Location::In)
    }

    pub fn exterior_cells(&self) -> Vec<usize> {
        self.cells_with(Location::Out)
    }

    fn cells_with(&self, loc: Location) -> Vec<usize> {
        let dims = self.mesh.dims();
        self.map
            .cells()
            .filter(|(_, l)| *l == loc)
            .map(|(c, _)| dims.cell_index(c))
            .collect()
    }

    pub fn boundary_pieces(&self) -> impl Iterator<Item = &BoundaryPiece> {
        self.cuts.iter().flat_map(|c| c.boundary.iter())
    }

    pub fn counts(&self) -> ClassCounts {
        let [interior, exterior, cut, undefined] = self.map.counts();
        ClassCounts {
            interior,
            exterior,
            cut,
            undefined,
        }
    }

    pub fn report(&self, mode: &str) -> Report {
        Report {
            mode: mode.to_string(),
            cells: self.mesh.dims().n,
            parts: self.parts,
            counts: self.counts(),
            measures: self.measures,
            clip_ops: self.cuts.iter().map(|c| c.clip_ops).sum(),
            timings: self.timings.clone(),
            messages: (!self.trace.is_empty()).then(|| MessageCounts::from_trace(&self.trace)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    pub interior: usize,
    pub exterior: usize,
    pub cut: usize,
    pub undefined: usize,
}

/// JSON run report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub mode: String,
    pub cells: [usize; 3],
    pub parts: [usize; 3],
    pub counts: ClassCounts,
    pub measures: Measures,
    pub clip_ops: usize,
    pub timings: BTreeMap<String, f64>,
    pub messages: Option<MessageCounts>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_measures() {
        let m = Measures::from_volumes(1.0, 2.5, 3.5, 6.0, Some(1.0));
        assert_eq!(m.e_bbox, 0.0);
        assert_eq!(m.e_interior, Some(0.0));
        let m = Measures::from_volumes(1.1, 2.5, 3.5, 6.0, None);
        assert!((m.e_bbox - 0.1 / 3.5).abs() < 1e-15);
        assert_eq!(m.e_interior, None);
        let m = Measures::from_volumes(0.9, 0.0, 1.0, 0.0, Some(-1.0));
        assert!((m.e_interior.unwrap() - 1.9).abs() < 1e-15);
    }
}
