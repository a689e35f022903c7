use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SmbError {
    /// Two derivations whose middle endpoints cannot be glued.
    #[error("invalid composition: {0}")]
    InvalidComposition(String),
    #[error("limit over an empty index set has no witness")]
    EmptyIndex,
    #[error("index set is inhabited")]
    NonEmptyIndex,
    /// A derivation shape that no valid derivation of the claimed fact can have.
    #[error("malformed witness: {0}")]
    MalformedWitness(String),
    /// A strict-decrease witness supplied to a recursion failed its audit.
    #[error("descent violation at {path}: {reason}")]
    DescentViolation { path: String, reason: String },
    #[error("recursion watchdog tripped after {0} steps")]
    Watchdog(u64),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("{0}")]
    Parse(#[from] crate::expr::ParseError),
    #[error("malformed input: {0}")]
    Deserialize(String),
}

pub type Result<T, E = SmbError> = std::result::Result<T, E>;
