use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid exponent p = {0}; expected p >= 1 or p = infinity")]
    InvalidExponent(f64),

    #[error("invalid measure space: {0}")]
    InvalidSpace(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("operands live on different measure spaces")]
    SpaceMismatch,

    #[error("time {time} is not a non-negative multiple of the step {step}")]
    NotGridAligned { time: f64, step: f64 },

    #[error("invalid semigroup: {0}")]
    InvalidSemigroup(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("|beta({time})| = {modulus} exceeds the declared bound {bound}")]
    WeightBoundExceeded { time: f64, modulus: f64, bound: f64 },

    #[error("empty grid")]
    EmptyGrid,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid norm specification: {0}")]
    InvalidNormSpec(String),

    #[error("function is not in the Fava space: {0}")]
    NotFavaMember(String),

    #[error("the norm contains the constant function 1; limit check is outside its hypotheses")]
    ContainsOne,

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
