use thiserror::Error;

/// An unknown `x_channel(phase)` that no equation in the captured window resolves.
/// Channels are 1-based, phases 0-based.
pub type Entry = (usize, usize);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("combinatorial budget exceeded: {needed} subsets > cap {cap}")]
    Budget { needed: u128, cap: u128 },

    #[error("compression is not lossless: {} unresolved entries", uncovered.len())]
    NotLossless { uncovered: Vec<Entry> },

    #[error("stream is inconsistent with the mixing signal (residual {residual:e})")]
    InconsistentStream { residual: f64 },

    #[error("stream too short: {required} samples required, {available} available")]
    InsufficientHorizon { required: usize, available: usize },

    #[error("unsupported spec: {0}")]
    UnsupportedSpec(String),

    #[error("samples do not excite every direction (min singular value {min_singular:e})")]
    InsufficientExcitation { min_singular: f64 },

    #[error("samples inconsistent with the model (residual {residual:e}, allowed {allowed:e})")]
    InconsistentSamples { residual: f64, allowed: f64 },

    #[error("sensors {unrecoverable:?} are unrecoverable; {recoverable:?} are recoverable (1-based)")]
    PartialReconstruction {
        recoverable: Vec<usize>,
        unrecoverable: Vec<usize>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
