use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("malformed lasso: {0}")]
    MalformedLasso(String),
    #[error("malformed history: {0}")]
    MalformedHistory(String),
    #[error("unknown SCC id {0}")]
    UnknownScc(usize),
    #[error("pure strategy pool too large: {count} tables exceed cap {cap}")]
    PoolTooLarge { count: u128, cap: u128 },
    #[error("mixture has empty support")]
    EmptySupport,
    #[error("unsupported payoff kind for this operation: {0}")]
    UnsupportedKind(String),
    #[error("singular linear system")]
    SingularSystem,
    #[error("undefined expectation: {0}")]
    UndefinedExpectation(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point is not in the convex hull")]
    NotInHull,
    #[error("point is not dominated by the convex hull")]
    NotDominated,
    #[error("target is not achievable over the pool")]
    NotAchievable,
    #[error("no approximation found over the pool: {0}")]
    InfeasibleApproximation(String),
    #[error("action `{0}` is disabled in this belief support")]
    DisabledAction(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
