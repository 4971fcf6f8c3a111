use thiserror::Error;

/// Errors raised by the riskspace library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    Empty,

    #[error("length mismatch: {values} values but {weights} weights")]
    LengthMismatch { values: usize, weights: usize },

    #[error("weight {weight} at index {index} is not positive")]
    NonPositiveWeight { index: usize, weight: f64 },

    #[error("non-finite entry {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("{name} = {value} is outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("malformed step function: {0}")]
    Malformed(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("spectrum is not a step function (apply step_approx first)")]
    NotStep,

    #[error("Kusuoka measure has an atom at 1 (weight {0}); a spectral density exists only when mu({{1}}) = 0")]
    AtomAtOne(f64),

    #[error("invalid Kusuoka measure: {0}")]
    InvalidMeasure(String),

    #[error("paired sample weights sum to {0}, expected 1")]
    Unnormalized(f64),

    #[error("spectrum set is empty")]
    EmptySet,

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("construction stalled: {0}")]
    Stalled(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        domain,
    }
}
