use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("step size violates eta * (lambda + kappa^2) <= 1 at step {step}: eta = {eta}, lambda = {lambda}, kappa^2 = {kappa_sq}")]
    StepSizeTooLarge {
        step: usize,
        eta: f64,
        lambda: f64,
        kappa_sq: f64,
    },

    #[error("truncation N = {actual} leaves tail mass {tail:e} above tolerance; need N >= {required}")]
    TruncationTooShort {
        actual: usize,
        required: usize,
        tail: f64,
    },

    #[error("feature map has no positive eigenvalue to sample from")]
    DegenerateSpectrum,

    #[error("operation requires a spectral feature map")]
    NotSpectral,

    #[error("sample stream ended after {got} samples, {needed} required")]
    StreamExhausted { got: usize, needed: usize },

    #[error("model parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("sweep cell T = {horizon}, rep = {rep} (seed {seed:#018x}) failed: {source}")]
    Cell {
        horizon: usize,
        rep: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
