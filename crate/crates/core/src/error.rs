//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet size {0} unsupported (need 2..=256)")]
    BadAlphabet(usize),

    #[error("symbol {symbol} out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },

    #[error("empty sequence")]
    EmptySequence,

    #[error("sequence of length {n} too short, need at least {min}")]
    InputTooShort { n: usize, min: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("negative component {value} in entropy argument")]
    NegativeComponent { value: f64 },

    #[error("count matrix entries sum to {sum}, expected {expected}")]
    BadNormalization { sum: f64, expected: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("decode failure at byte {position}: {reason}")]
    Decode { position: usize, reason: String },

    #[error("linear program infeasible: {0}")]
    Infeasible(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
