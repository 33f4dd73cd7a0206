use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("q must be an odd prime (got {0})")]
    NotOddPrime(u32),
    #[error("q must be a prime (got {0})")]
    NotPrime(u32),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),
    #[error("value {value} is not reduced modulo {modulus}")]
    Unreduced { value: u32, modulus: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("zero is outside the channel alphabet")]
    ZeroEntry,
    #[error("the diagonal pairing map needs odd characteristic")]
    EvenCharacteristic,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("user count must be at least 2 (got {0})")]
    TooFewUsers(usize),
    #[error("invalid probability {0}")]
    InvalidProbability(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty input")]
    EmptyInput,
    #[error("law and alphabet disagree: {0}")]
    AlphabetMismatch(String),
    #[error("rates must be nonnegative")]
    NegativeRate,
    #[error("rates must be sorted in descending order")]
    Unsorted,
    #[error("rate {rate} outside the time-sharing range [{low}, {high}]")]
    RateOutOfRange { rate: f64, low: f64, high: f64 },
    #[error("generator must have full row rank")]
    RankDeficient,
    #[error("n = {n} is below the minimum {min} channel uses for this alphabet and block length")]
    TooFewChannelUses { n: usize, min: u128 },
    #[error("exhaustive decoding over {0} candidates is too large")]
    SearchTooLarge(u128),
}

pub type Result<T> = std::result::Result<T, Error>;
