use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported derivative order m = {0} (closed-form kernels exist for m = 1, 2)")]
    UnsupportedOrder(usize),

    #[error("derivative order {j} exceeds spline order {m}")]
    DerivativeOrder { j: usize, m: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sampled function is not on the system grid")]
    GridMismatch,

    #[error("spline system error: {0}")]
    System(String),

    #[error("conditioning error: {0}")]
    Conditioning(String),

    #[error("degenerate smoother: influence diagonal at grid index {index} is {value} (too close to 1)")]
    DegenerateSmoother { index: usize, value: f64 },

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
