use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad grouping used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The input violates a documented contract (bad PMF, wrong shape, ...).
    Validation,
    /// The input is valid but the computation cannot proceed numerically.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability at index {index} is negative ({value})")]
    NegativeProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, outside tolerance {tolerance} of 1")]
    SumOutOfTolerance { sum: f64, tolerance: f64 },
    #[error("a PMF needs at least 2 classes, got {len}")]
    DegenerateLength { len: usize },
    #[error("value at index {index} is not finite")]
    NonFinite { index: usize },
    #[error("class index {index} out of range for {len} classes")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("class names: expected {expected} distinct names, got {got}")]
    InvalidClassNames { expected: usize, got: usize },
    #[error("input is empty")]
    EmptyInput,
    #[error("alpha must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("tolerance {name} must be positive and finite, got {value}")]
    InvalidTolerance { name: &'static str, value: f64 },
    #[error("SDM sampling variance requires a unimodal PMF, found {modes} modes")]
    MultimodalInput { modes: usize },
    #[error("SDM sampling variance is undefined when the SDM equals 1")]
    DegenerateSdm,
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("label row {row} is not one-hot")]
    InvalidLabel { row: usize },
    #[error("test set prior is degenerate (a single class present)")]
    DegeneratePrior,
    #[error("row {row} has tied maximal probabilities")]
    AmbiguousArgmax { row: usize },
    #[error("regime {regime} has no standard deviation")]
    MissingSd { regime: usize },
    #[error("regime {regime} has no sampler")]
    MissingSampler { regime: usize },
    #[error("invalid regime {regime}: {reason}")]
    InvalidRegime { regime: usize, reason: String },
    #[error("class {class} has no training observations")]
    EmptyClass { class: usize },
    #[error("improper prior: {0}")]
    ImproperPrior(String),
    #[error("scatter matrix for class {class} is not positive definite")]
    SingularScatter { class: usize },
    #[error("covariance for class {class} is not positive definite")]
    SingularCovariance { class: usize },
    #[error("predictive probabilities underflowed for every class")]
    NumericalUnderflow,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::DegenerateSdm
            | Error::DegeneratePrior
            | Error::SingularScatter { .. }
            | Error::SingularCovariance { .. }
            | Error::NumericalUnderflow => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        }
    }
}
