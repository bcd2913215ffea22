use std::path::PathBuf;

use crate::geometry::TransformField;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("logarithm undefined on the principal branch: rotation angle {angle} rad is too close to pi")]
    BranchAmbiguity { angle: f64 },

    #[error("invalid depth {0} (must be > 0)")]
    InvalidDepth(f64),

    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("solver diverged: non-finite cost after {iterations} iterations")]
    Divergence {
        iterations: usize,
        last_finite: Box<TransformField>,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate alignment: {0}")]
    DegenerateAlignment(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("label unavailable: {0}")]
    UnavailableLabel(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("frame {index}: {source}")]
    Frame {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn at_frame(self, index: usize) -> Self {
        Error::Frame {
            index,
            source: Box::new(self),
        }
    }
}
