use std::path::PathBuf;

use thiserror::Error;

use crate::background::MeshError;
use crate::classify::ClassifyError;
use crate::cutter::CutError;
use crate::distributed::ProtocolError;
use crate::surface::StlError;

/// Top-level error, one variant per subsystem so callers can map failures
/// to exit codes without string matching.
#[derive(Debug, Error)]
pub enum Error {
    #[error("surface: {0}")]
    Stl(#[from] StlError),
    #[error("background mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("cell cutter: {0}")]
    Cut(#[from] CutError),
    #[error("classification: {0}")]
    Classify(#[from] ClassifyError),
    #[error("protocol: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this failure: 2 input, 3 geometric, 4 protocol.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stl(_) | Error::Io { .. } | Error::Mesh(_) => 2,
            Error::Cut(_) | Error::Classify(_) => 3,
            Error::Protocol(_) => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
