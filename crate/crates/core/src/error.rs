use thiserror::Error;

/// Errors raised by the laboratory's evaluators and harnesses.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid measure specification: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("operation `{op}` is not supported by family `{family}`")]
    Unsupported { op: &'static str, family: String },
    #[error("log-Laplace transform is infinite for family `{0}` away from the origin")]
    InfiniteLogLaplace(String),
    #[error("moment of order {order} is infinite for family `{family}`")]
    InfiniteMoment { order: f64, family: String },
    #[error("degenerate body: {0}")]
    DegenerateBody(String),
    #[error("level set is empty: p = {p} is below p(mu) = {p_mu}")]
    EmptyLevelSet { p: f64, p_mu: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("direction grids do not match")]
    GridMismatch,
    #[error("LP solver failure: {0}")]
    SolverFailure(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("serialization: {0}")]
    Serialization(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
