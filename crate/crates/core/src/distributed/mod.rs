//! Two-level distributed intersection and classification.
//!
//! `S` fine ranks each own one block of the background mesh; one extra
//! coarse rank holds a mesh with one cell per block. Fine ranks cut and
//! classify the shell of their block first, reconcile interface faces with
//! their face neighbours, and send a summary of their block to the coarse
//! rank. While the coarse rank classifies the coarse mesh, fine ranks cut
//! their bulk. Blocks the surface never reaches take their label from the
//! coarse result. Only location labels cross rank boundaries.
//!
//! Ranks talk through [`Transport`]; [`sim`] provides a deterministic
//! in-process implementation.

mod protocol;
pub mod sim;
mod transport;

pub use protocol::{distributed_intersection, run_distributed, DistributedRun, ProtocolSetup, RankOutput, RankStats};
pub use sim::{run_simulated, ExecMode, SimResult, SimTransport};
pub use transport::{Event, Kind, Phase, TraceRecord, Transport};

use serde::Serialize;
use thiserror::Error;

use crate::classify::{ClassifyError, Location, LocationMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("{phase}: deadlock, blocked ranks: {snapshot}")]
    Deadlock { phase: Phase, snapshot: String },
    #[error("{phase}: interface face {index} between ranks {rank} and {peer} is both inside and outside")]
    InterfaceConflict {
        phase: Phase,
        rank: usize,
        peer: usize,
        index: usize,
    },
    #[error("{phase}: malformed payload from rank {src}")]
    Malformed { phase: Phase, src: usize },
    #[error("{phase}: transport failure: {message}")]
    Transport { phase: Phase, message: String },
    #[error("{phase}: rank {rank} did not finish")]
    Unfinished { phase: Phase, rank: usize },
}

pub(crate) fn encode(labels: &[Location]) -> Vec<u8> {
    labels.iter().map(|&l| l as u8).collect()
}

pub(crate) fn decode(bytes: &[u8], phase: Phase, src: usize) -> Result<Vec<Location>, ProtocolError> {
    bytes
        .iter()
        .map(|&b| Location::from_u8(b).ok_or(ProtocolError::Malformed { phase, src }))
        .collect()
}

/// Load-balancing weight of one cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CellWeight {
    pub cell: usize,
    pub weight: f64,
}

/// Weights for redistribution: 0 outside, 1 inside, `w_cut` for cut
/// cells. Fails on an incomplete map.
pub fn compute_redistribute_weights(map: &LocationMap, w_cut: f64) -> Result<Vec<CellWeight>, ClassifyError> {
    map.cells()
        .map(|(ijk, l)| {
            let weight = match l {
                Location::Out => 0.0,
                Location::In => 1.0,
                Location::Cut => w_cut,
                Location::Undefined => return Err(ClassifyError::Incomplete { ijk }),
            };
            Ok(CellWeight {
                cell: map.dims().cell_index(ijk),
                weight,
            })
        })
        .collect()
}

/// `cell_index weight` per line.
pub fn weights_table(weights: &[CellWeight]) -> String {
    let mut s = String::from("cell weight\n");
    for w in weights {
        s.push_str(&format!("{} {}\n", w.cell, w.weight));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::GridDims;

    #[test]
    fn weights() {
        let dims = GridDims::new([3, 1, 1]);
        let mut m = LocationMap::whole(dims);
        assert!(compute_redistribute_weights(&m, 1.0).is_err());
        m.set_cell([0, 0, 0], Location::In);
        m.set_cell([1, 0, 0], Location::Cut);
        m.set_cell([2, 0, 0], Location::Out);
        let w: Vec<f64> = compute_redistribute_weights(&m, 3.0)
            .unwrap()
            .iter()
            .map(|w| w.weight)
            .collect();
        assert_eq!(w, [1.0, 3.0, 0.0]);
        let all_out = LocationMap::whole(dims);
        let mut all_out = all_out;
        for i in 0..3 {
            all_out.set_cell([i, 0, 0], Location::Out);
        }
        assert!(compute_redistribute_weights(&all_out, 1.0)
            .unwrap()
            .iter()
            .all(|w| w.weight == 0.0));
        assert!(weights_table(&compute_redistribute_weights(&m, 1.0).unwrap()).contains("1 1\n"));
    }

    #[test]
    fn codec_rejects_junk() {
        let l = [Location::In, Location::Cut, Location::Undefined];
        assert_eq!(decode(&encode(&l), Phase::Gather, 0).unwrap(), l);
        assert!(decode(&[9], Phase::Gather, 2).is_err());
    }
}
