use num_bigint::BigUint;
use thiserror::Error;

/// Errors raised by the arithmetic, sharing and protocol layers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{value} has no inverse modulo {modulus}")]
    NotInvertible { value: BigUint, modulus: BigUint },

    #[error("modulus must be greater than 1")]
    InvalidModulus,

    #[error("seed {0} yields a degenerate generator; advance the seed and retry")]
    DegenerateGenerator(BigUint),

    #[error("parameter search exhausted after {0} attempts")]
    SearchExhausted(usize),

    #[error("invalid group parameters: {0}")]
    InvalidParams(String),

    #[error("{0} is not a valid group element")]
    InvalidElement(BigUint),

    #[error("duplicate identity {0}")]
    DuplicateId(BigUint),

    #[error("identity must be nonzero modulo q")]
    ZeroId,

    #[error("identity {0} is not part of the subset")]
    IdNotInSubset(BigUint),

    #[error("unknown member {0}")]
    UnknownMember(BigUint),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("expected {expected} {what}, got {actual}")]
    WrongCount {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("threshold {threshold} is invalid for a roster of {roster}")]
    InvalidThreshold { threshold: usize, roster: usize },

    #[error("nonce must be nonzero")]
    ZeroNonce,

    #[error("masking exponent K must be nonzero")]
    ZeroMaskExponent,

    #[error("unmasking for member {0} produced a value outside Z_q (wrong key or corrupted share)")]
    CorruptShare(BigUint),

    #[error("polynomial yields a zero share; resampling budget exhausted")]
    ZeroShare,

    #[error("no scripted hash output for element {elem} and message {message:?}")]
    ScriptMiss { elem: BigUint, message: String },

    #[error("signers disagree on the session challenge")]
    ChallengeDisagreement,

    #[error("missing {0}")]
    Missing(String),

    #[error("unknown ledger record {0}")]
    UnknownRecord(u64),

    #[error("transcript tampered at line {0}")]
    Tampered(usize),

    #[error("transcript version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("replay diverged: {0}")]
    ReplayMismatch(String),

    #[error("malformed record: {0}")]
    Malformed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Malformed(err.to_string())
    }
}
