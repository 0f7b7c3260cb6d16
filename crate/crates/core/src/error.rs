use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for {n} variables")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("monomial of degree {degree} exceeds maximum degree {max}")]
    DegreeTooHigh { degree: usize, max: usize },

    #[error("{what} = {value} is outside its allowed range")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("non-finite value in {0}")]
    NotFinite(&'static str),

    #[error("insufficient samples: {required} required, {available} available")]
    InsufficientSamples { required: usize, available: usize },

    #[error("example stream exhausted after {consumed} examples ({required} required)")]
    StreamExhausted { consumed: usize, required: usize },

    #[error("state space of {states} configurations exceeds the enumeration limit {limit}")]
    StateSpaceTooLarge { states: u128, limit: u128 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "filter rate {rate:.5} for symbols ({alpha},{beta}) at vertex {vertex} is below a third of the guaranteed rate {expected:.5}"
    )]
    FilterRateTooLow {
        vertex: usize,
        alpha: u8,
        beta: u8,
        rate: f64,
        expected: f64,
    },

    #[error("missing pair block ({alpha},{beta}) for vertex {vertex}")]
    MissingPair { vertex: usize, alpha: u8, beta: u8 },

    #[error("median sample count must be odd, got {0}")]
    EvenMedianCount(usize),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
