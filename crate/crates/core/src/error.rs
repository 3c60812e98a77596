use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("triangle inequality violated: d({i},{k}) = {dik} > d({i},{j}) + d({j},{k}) = {sum}")]
    TriangleInequality {
        i: usize,
        j: usize,
        k: usize,
        dik: f64,
        sum: f64,
    },

    #[error("function has {got} values but the space has {expected} points")]
    LengthMismatch { expected: usize, got: usize },

    #[error("point {0} is out of range")]
    PointOutOfRange(usize),

    #[error("invalid modulus of continuity: {0}")]
    InvalidModulus(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("function must be non-negative (value {value} at point {point})")]
    NegativeValue { point: usize, value: f64 },

    #[error("dyadic system error: {0}")]
    Dyadic(String),

    #[error("whitney undefined for full space")]
    WhitneyFullSpace,

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("sparse construction failed: {0}")]
    Sparse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
