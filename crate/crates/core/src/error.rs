use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for trajectory of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("time base mismatch: (t0 {t0_a}, dt {dt_a}) vs (t0 {t0_b}, dt {dt_b})")]
    TimeBaseMismatch {
        t0_a: f64,
        dt_a: f64,
        t0_b: f64,
        dt_b: f64,
    },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("trajectory has no points")]
    EmptyTrajectory,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("CFL condition violated: dt {dt} exceeds max admissible dt {max_dt}")]
    Cfl { dt: f64, max_dt: f64 },

    #[error("query out of range: {0}")]
    OutOfRange(String),

    #[error("infeasible packing: {0}")]
    InfeasiblePacking(String),

    #[error("degenerate vertex set: {0}")]
    Degenerate(String),

    #[error("no path: goal lies outside the triangulated free space")]
    BlockedGoal,

    #[error("no path: start and goal are in disconnected regions")]
    Disconnected,

    #[error("weight vector cannot be normalized")]
    NotNormalizable,

    #[error("objective became non-finite")]
    NonFinite,

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("truncated log: {0}")]
    TruncatedLog(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
