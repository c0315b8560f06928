use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("points {x} and {y} are antipodal; the geodesic logarithm is ambiguous")]
    CutLocus { x: f64, y: f64 },

    #[error("diffeomorphism is not invertible: {0}")]
    NonInvertible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fiber grids violate reciprocity: 2*V*dp = {product} > 1")]
    GridMismatch { product: f64 },

    #[error("fiber support overflow: {0}")]
    SupportOverflow(String),

    #[error("unknown suite or experiment '{0}'")]
    UnknownSuite(String),

    #[error("config error{}: field '{field}': {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        field: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
