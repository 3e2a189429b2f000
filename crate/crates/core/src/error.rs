use thiserror::Error;

/// Failure modes shared by every layer of the kernel.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("ring mismatch: {0} vs {1}")]
    RingMismatch(String, String),
    #[error("element is not a unit (residue is zero)")]
    NotAUnit,
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("series is not of an invertible shape: {0}")]
    NotInvertibleShape(String),
    #[error("matrix is not in the big cell: trailing minor {0} is not invertible")]
    NotInBigCell(usize),
    #[error("matrix is not unipotent {0} triangular")]
    NotUnipotent(&'static str),
    #[error("series is not correctable: {0}")]
    NotCorrectableShape(String),
    #[error("coordinate window violated: {0}")]
    WindowViolation(String),
    #[error("tangent corank unstable: {0} at window N, {1} at window 2N")]
    UnstableWindow(usize, usize),
    #[error("leading minor coefficient is not a unit (minor {0})")]
    NonUnitLeading(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid square-zero step: {0}")]
    InvalidStep(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("json error: {0}")]
    Json(String),
}

impl Error {
    /// Stable identifier used in JSON reports and CLI output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::RingMismatch(..) => "RingMismatch",
            Error::NotAUnit => "NotAUnit",
            Error::PrecisionExhausted(_) => "PrecisionExhausted",
            Error::NotInvertibleShape(_) => "NotInvertibleShape",
            Error::NotInBigCell(_) => "NotInBigCell",
            Error::NotUnipotent(_) => "NotUnipotent",
            Error::NotCorrectableShape(_) => "NotCorrectableShape",
            Error::WindowViolation(_) => "WindowViolation",
            Error::UnstableWindow(..) => "UnstableWindow",
            Error::NonUnitLeading(_) => "NonUnitLeading",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::InvalidStep(_) => "InvalidStep",
            Error::Precondition(_) => "Precondition",
            Error::Parse(_) => "Parse",
            Error::Json(_) => "Json",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
