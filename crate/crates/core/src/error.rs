use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid exponent: {0}")]
    Exponent(String),

    #[error("critical exponent undefined: s*p(x,x) = {sp} >= N = {dim}")]
    Supercritical { sp: f64, dim: usize },

    #[error("non-finite sample value {value} at node {node}")]
    NonFinite { node: usize, value: f64 },

    #[error("bracket expansion failed after {0} doublings")]
    Bracket(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inadmissible nonlinearity: {0}")]
    Nonlinearity(String),

    #[error("constant estimation failed: {0}")]
    Estimation(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
