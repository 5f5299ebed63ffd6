use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error: {0}")]
    Syntax(String),

    #[error("digit {0} has nonpositive real part")]
    InvalidDigit(String),

    #[error("alphabet is empty")]
    EmptyAlphabet,

    #[error("alphabet {0} is infinite; a ceiling is required")]
    MissingCeiling(String),

    #[error("logarithm of zero")]
    LogOfZero,

    #[error("zero denominator")]
    ZeroDenominator,

    #[error("{terms} weight terms exceed the stored-mode cap of {cap}; use streamed mode")]
    MemoryCap { terms: u128, cap: u128 },

    #[error("word count {alphabet}^{k} is not representable")]
    TooManyWords { alphabet: usize, k: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
