use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("1 is not a simple eigenvalue of the symbol at zero: no unique matching direction")]
    NotSimple,
    #[error("eigen condition violated at degree {degree}")]
    EigenViolated { degree: u32 },
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("not a member: {0}")]
    NotMember(String),
    #[error("structural incompatibility: {0}")]
    Incompatible(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, column, message: message.into() }
    }
}
