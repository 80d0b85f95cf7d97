//! Error type shared by the whole engine.
//!
//! Mathematical obstructions (a class that refuses to die, a witness the
//! theory promises but a solve cannot find) are ordinary values or dedicated
//! variants, never panics: callers branch on them.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("degree {degree} out of cap {cap}")]
    DegreeOutOfCap { degree: usize, cap: usize },

    #[error("elements belong to different presentations")]
    MixedPresentation,

    #[error("scalars belong to different rings")]
    MixedRing,

    #[error("invalid prime {0}: need an odd prime")]
    InvalidPrime(u32),

    #[error("invalid scalar: {0}")]
    InvalidScalar(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("element of degree {degree} is not a cycle: {detail}")]
    NotACycle { degree: usize, detail: String },

    #[error("derivation does not square to zero on generator `{generator}`")]
    InvalidDerivation { generator: String },

    #[error(
        "differential is not a coderivation for the declared diagonal (generator `{generator}`)"
    )]
    NotACoderivation { generator: String },

    #[error("presentation carries nonzero homotopy witnesses; a strict structure is required")]
    NotStrict,

    #[error("chain in degree {degree} is not a cycle mod p")]
    NotAModPCycle { degree: usize },

    #[error("hypothesis fails: {0}")]
    HypothesisFails(String),

    #[error("iteration bound {bound} exceeded in {context}")]
    IterationBoundExceeded { bound: u32, context: String },

    #[error("theory violation: a solve guaranteed by the hypotheses failed ({0})")]
    TheoryViolation(String),

    #[error("solve failed: {0}")]
    SolveFailed(String),

    #[error("obstructed: nonzero obstruction class ({0})")]
    Obstructed(String),

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("degree {degree} out of guaranteed range {bound}: {context}")]
    OutOfRange {
        degree: usize,
        bound: usize,
        context: String,
    },

    #[error("unsupported ring for this operation: {0}")]
    UnsupportedRing(String),

    #[error("wrong algebra flavor: {0}")]
    WrongFlavor(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
