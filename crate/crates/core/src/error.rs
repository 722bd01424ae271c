use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by the command-line driver to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad or inconsistent configuration.
    Config,
    /// A mathematical precondition does not hold (for instance N > D).
    Precondition,
    /// The numerics broke down.
    Numerical,
    /// File or serialization failure.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("seed sequences are not orthogonal (inner product {inner_product})")]
    NonOrthogonalSeed { inner_product: i64 },

    #[error("cascade size {size} exceeds the cap of {cap}")]
    SizeOverflow { size: usize, cap: usize },

    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("column {0} selected more than once")]
    DuplicateColumn(usize),

    #[error("code length N={n} exceeds the number of sequences D={d}")]
    CodeLengthExceedsSetSize { n: usize, d: usize },

    #[error("lag {lag} out of range for code length {n}")]
    LagOutOfRange { lag: i64, n: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no Golay pair construction for length {0}")]
    UnsupportedLength(usize),

    #[error("jamming slice of {slice_samples:.3} samples is shorter than one sample")]
    DegenerateSlice { slice_samples: f64 },

    #[error("receive window too small: {0}")]
    WindowTooSmall(String),

    #[error("fast-time index {index} outside the processed window [{start}, {end})")]
    OutOfWindow { index: i64, start: i64, end: i64 },

    #[error("numerical divergence: {0}")]
    NumericalDivergence(String),

    #[error("clean reference peak missing or not positive")]
    MissingReference,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NonOrthogonalSeed { .. }
            | Error::CodeLengthExceedsSetSize { .. }
            | Error::DuplicateColumn(_)
            | Error::IndexOutOfRange { .. }
            | Error::LagOutOfRange { .. }
            | Error::UnsupportedLength(_)
            | Error::DegenerateSlice { .. } => ErrorClass::Precondition,
            Error::NumericalDivergence(_) => ErrorClass::Numerical,
            Error::SizeOverflow { .. }
            | Error::GridMismatch(_)
            | Error::WindowTooSmall(_)
            | Error::OutOfWindow { .. }
            | Error::MissingReference
            | Error::InvalidConfig(_)
            | Error::Parse(_) => ErrorClass::Config,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => ErrorClass::Io,
        }
    }
}
