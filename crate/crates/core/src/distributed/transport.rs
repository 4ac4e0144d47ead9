use std::fmt;
use std::future::Future;

use serde::Serialize;

use super::ProtocolError;

/// Protocol step a message belongs to, in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Interface,
    Gather,
    Scatter,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Interface => "interface",
            Phase::Gather => "gather",
            Phase::Scatter => "scatter",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Gather,
    Scatter,
    Sendrecv,
}

/// One delivered message.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct TraceRecord {
    pub phase: Phase,
    pub kind: Kind,
    pub src: usize,
    pub dst: usize,
    pub bytes: usize,
}

/// Rank-local milestones, recorded in program order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Event {
    ShellDone,
    InterfaceDone,
    Gathered,
    BulkDone,
    CoarseDone,
    AwaitScatter,
    Scattered,
    Finished,
}

/// Message passing between `S` fine ranks (`0..S`) and one coarse rank
/// (`S`).
///
/// Sends never block; receives complete once the matching message has
/// arrived. Every method is called by one rank on its own handle.
pub trait Transport: Sync {
    fn rank(&self) -> usize;

    /// Number of fine ranks `S`.
    fn fine_ranks(&self) -> usize;

    fn coarse_rank(&self) -> usize {
        self.fine_ranks()
    }

    fn is_coarse(&self) -> bool {
        self.rank() == self.coarse_rank()
    }

    /// Fine ranks deliver `payload` to the coarse rank and get `None`. The
    /// coarse rank passes an empty payload and gets one payload per fine
    /// rank, indexed by source.
    fn gather(&self, payload: Vec<u8>) -> impl Future<Output = Result<Option<Vec<Vec<u8>>>, ProtocolError>> + Send;

    /// The coarse rank passes one payload per fine rank and gets an empty
    /// vector; fine ranks pass `None` and get their payload.
    fn scatter(&self, payloads: Option<Vec<Vec<u8>>>) -> impl Future<Output = Result<Vec<u8>, ProtocolError>> + Send;

    /// Exchanges payloads with `peer`; both sides call it once.
    fn sendrecv(&self, peer: usize, payload: Vec<u8>) -> impl Future<Output = Result<Vec<u8>, ProtocolError>> + Send;

    /// Records a milestone.
    fn note(&self, event: Event);
}
