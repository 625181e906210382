use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value {value} at index {index} lies outside the bin range [{lower}, {upper}]")]
    OutOfBounds {
        value: f64,
        index: usize,
        lower: f64,
        upper: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("bin values are not non-decreasing at bin {index}")]
    MonotonicityViolation { index: usize },

    #[error("invalid bin specification: {0}")]
    InvalidBins(String),

    #[error("invalid concentration vector: {0}")]
    InvalidConcentration(String),

    #[error("value map violates bin bounds at bin {index}: {value} not in [{lower}, {upper}]")]
    ValueOutsideBin {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("vector is not on the simplex (sum = {sum}, min = {min})")]
    OffSimplex { sum: f64, min: f64 },

    #[error("density is unbounded: x[{index}] = 0 with concentration below one (log density {log_density})")]
    NonFiniteDensity { index: usize, log_density: f64 },

    #[error("no data supplied")]
    EmptyData,

    #[error("insufficient data: need at least {needed} observations, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("degenerate variance: standard error of the difference is zero")]
    DegenerateVariance,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid hurdle model: {0}")]
    InvalidModel(String),

    #[error("functional failed at draw {draw}: {source}")]
    Functional {
        draw: usize,
        #[source]
        source: Box<Error>,
    },
}
