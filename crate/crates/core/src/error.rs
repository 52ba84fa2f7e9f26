use alloc::string::String;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("attribute `{0}` is not linked to any item")]
    UnlinkedAttribute(String),
    #[error("invalid triple: {0}")]
    InvalidTriple(String),
    #[error("k must be at least 2, got {0}")]
    InvalidFoldCount(usize),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },
    #[error("model `{0}` requires a knowledge graph")]
    MissingGraph(&'static str),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("explanation links item `{item}` which is not in the profile of user `{user}`")]
    IntegrityViolation { user: String, item: String },
    #[error("need at least {needed} non-zero paired differences, got {got}")]
    TooFewPairs { needed: usize, got: usize },
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("trial: {0}")]
    Trial(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
