use thiserror::Error;

use crate::raster::GridKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the extraction, tiling, metric and routing stages.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration, such as a singular geotransform.
    #[error("configuration error: {0}")]
    Config(String),

    /// A scalar parameter is outside its allowed range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("expected a {expected:?} raster, got {found:?}")]
    Kind { expected: GridKind, found: GridKind },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Input violates an operation's precondition.
    #[error("precondition violated at pixel (row {row}, col {col}): {reason}")]
    Precondition {
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("no route from node {from} to node {to}")]
    Unreachable { from: u64, to: u64 },

    #[error("unknown node id {0}")]
    UnknownNode(u64),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("tile (row0 {row0}, col0 {col0}): {source}")]
    Tile {
        row0: usize,
        col0: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn in_tile(self, row0: usize, col0: usize) -> Self {
        Error::Tile {
            row0,
            col0,
            source: Box::new(self),
        }
    }

    /// Strips any tile provenance wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Tile { source, .. } => source.root(),
            other => other,
        }
    }
}
