use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point outside the domain: {0}")]
    Domain(String),

    #[error("singular point: coordinate {index} vanishes and the exponent {exponent} < 2")]
    SingularPoint { index: usize, exponent: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    Mismatch { expected: usize, got: usize },

    #[error("empty input")]
    Empty,

    #[error("node count {count} exceeds the cap {cap}")]
    Resource { count: usize, cap: usize },

    #[error("pair budget exceeded: {pairs} pairs > {budget}")]
    Budget { pairs: usize, budget: usize },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("surface is not star-shaped about the center; witness point {witness:?}")]
    NotStarShaped { witness: Vec<f64> },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("field vanishes identically")]
    ZeroField,

    #[error("support overflow: dilated support leaves the domain ({0})")]
    SupportOverflow(String),

    #[error("integrability violated: {0}")]
    Integrability(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("{context}: {source}")]
    At { context: String, source: Box<Error> },
}

impl Error {
    /// Attaches the offending parameter set to an error.
    pub fn at(self, context: impl Into<String>) -> Self {
        Error::At {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with every context layer removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::At { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
