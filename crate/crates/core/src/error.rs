use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("kernel bandwidth is \"auto\" and must be resolved from data before evaluation")]
    UnresolvedBandwidth,

    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("regularized kernel is singular to working precision (pivot {pivot} at step {step})")]
    DegenerateKernel { step: usize, pivot: f64 },

    #[error("e_i^T U e_i vanished for column {0}; factorization is degenerate")]
    DegenerateColumn(usize),

    #[error("affinity requires a thresholded coefficient matrix")]
    Unthresholded,

    #[error(
        "symmetric eigensolver did not converge at index {index} after {iterations} sweeps \
         (spectral radius {spectral_radius:.3e}, max off-diagonal {off_diagonal:.3e})"
    )]
    EigenNoConvergence {
        index: usize,
        iterations: usize,
        spectral_radius: f64,
        off_diagonal: f64,
    },

    #[error("label length mismatch: predicted={predicted}, truth={truth}")]
    LabelLengthMismatch { predicted: usize, truth: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("signal power is zero; SNR-based noise is undefined")]
    ZeroSignalPower,

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("no samples")]
    NoSamples,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{step}: {source}")]
    Step {
        step: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at(step: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Step {
            step,
            source: Box::new(source),
        }
    }
}
