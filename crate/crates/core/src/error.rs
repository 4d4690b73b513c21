//! Error types used by `rgv_jscc`.

use thiserror::Error;

/// `rgv_jscc` `Result` type.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the library.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// Two objects that must live over the same alphabet do not.
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    /// Two sequences that must have equal length do not.
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    /// A probability vector is not a valid distribution.
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),
    /// A count vector is not a valid type.
    #[error("invalid type: {0}")]
    InvalidType(String),
    /// A channel matrix is not row-stochastic.
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    /// A code configuration violates one of its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// A symbol lies outside its alphabet.
    #[error("symbol {symbol} outside alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
    /// The set of admissible codewords for a draw is empty.
    #[error("empty feasible set for codeword {index} of source-type class {class}")]
    EmptyFeasibleSet { class: usize, index: usize },
    /// Rejection sampling hit its attempt cap and the class is too large to enumerate.
    #[error(
        "rejection budget of {attempts} attempts exceeded for codeword {index} of source-type class {class}"
    )]
    RejectionBudgetExceeded {
        class: usize,
        index: usize,
        attempts: usize,
    },
    /// An exhaustive enumeration would exceed its cap.
    #[error("enumeration of {what} too large: {size} exceeds cap {cap}")]
    EnumerationTooLarge { what: String, size: u128, cap: u128 },
    /// A codebook file could not be parsed.
    #[error("codebook format error at line {line}: {msg}")]
    CodebookFormat { line: usize, msg: String },
    /// An experiment configuration could not be parsed.
    #[error("config error: {0}")]
    Config(String),
}
