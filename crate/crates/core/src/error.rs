use thiserror::Error;

/// Errors produced anywhere in the engine, from BDD construction through
/// parsing, compilation and inference.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid weight {0}: must be a finite probability in [0, 1]")]
    InvalidWeight(f64),

    #[error("operands belong to different managers")]
    ManagerMismatch,

    #[error("invalid probability vector: {0}")]
    InvalidVector(String),

    #[error("invalid range: uniform over {0} values")]
    InvalidRange(u64),

    #[error("value {value} does not fit in {width} bits")]
    Overflow { value: u64, width: usize },

    #[error("evidence has probability zero")]
    UnsatisfiableEvidence,

    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("unknown identifier `{name}` at {line}:{col}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        col: usize,
    },

    #[error("compile error at {line}:{col}: {message}")]
    Compile {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("interrupted")]
    Interrupted,

    #[error("enumeration needs up to {paths} paths, above the cap of {cap}")]
    EnumerationTooLarge { paths: f64, cap: u64 },
}

impl Error {
    /// Short machine-readable name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidWeight(_) => "invalid_weight",
            Error::ManagerMismatch => "manager_mismatch",
            Error::InvalidVector(_) => "invalid_vector",
            Error::InvalidRange(_) => "invalid_range",
            Error::Overflow { .. } => "overflow",
            Error::UnsatisfiableEvidence => "unsatisfiable_evidence",
            Error::Syntax { .. } => "parse_error",
            Error::UnknownIdentifier { .. } => "unknown_identifier",
            Error::Compile { .. } => "compile_error",
            Error::Interrupted => "interrupted",
            Error::EnumerationTooLarge { .. } => "enumeration_too_large",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
