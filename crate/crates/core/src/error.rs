use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("digit {0} is outside 0-9")]
    DigitOutOfRange(u8),
    #[error("invalid card code {0:?}: expected exactly four decimal digits")]
    InvalidCardCode(String),
    #[error("pattern {0} is not a 3-of-9 digit layout")]
    InvalidPattern(String),
    #[error("expected {expected} elements, got {actual}")]
    WrongLength { expected: usize, actual: usize },
    #[error("invalid scan configuration: {0}")]
    InvalidScanConfig(String),
    #[error("flip probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("streams differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid symbol {0:?} at offset {1}: expected '0' or '5'")]
    InvalidSymbol(char, usize),
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
}
