use thiserror::Error;

/// Errors raised by the operator, propagation and analysis layers.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("non-finite potential sample {value} at x = {x}")]
    NonFinitePotential { x: f64, value: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("function is not finite at eigenvalue {eigenvalue}")]
    NonFiniteFunction { eigenvalue: f64 },

    #[error("dimension {dim} exceeds the dense spectral cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error("spectral bounds violated: {0}")]
    SpectralBounds(String),

    #[error("sample times must be sorted ascending")]
    UnsortedTimes,

    #[error("only {found} envelope points in window [{t_lo}, {t_hi}], need {required}; widen the window or extend T_max")]
    TooFewEnvelopePoints {
        found: usize,
        required: usize,
        t_lo: f64,
        t_hi: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("build parameters do not match: {0}")]
    MismatchedParameters(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
