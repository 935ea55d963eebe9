use thiserror::Error;

use crate::tensor::Frame;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),

    #[error("frame mismatch: expected {expected:?} tensor, got {found:?}")]
    FrameMismatch { expected: Frame, found: Frame },

    #[error("invalid strain tensor: {0}")]
    InvalidStrain(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("depth {depth_nm} nm outside substrate [0, {max_nm}] nm")]
    OutOfDomain { depth_nm: f64, max_nm: f64 },

    #[error("empty request: {0}")]
    EmptyRequest(&'static str),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("infeasible target: {0}")]
    Infeasible(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("duplicate abscissa {0} in spectrum")]
    DuplicateAbscissa(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no single-emitter spectra in batch")]
    NoSingleEmitters,

    #[error("root bracketing failed: {0}")]
    Bracket(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
