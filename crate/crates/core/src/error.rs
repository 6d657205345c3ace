use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is not anti-hermitian")]
    NotAntiHermitian,
    #[error("parameter vector has length {got}, circuit expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("qubit count mismatch: expected {expected}, got {got}")]
    QubitCountMismatch { expected: usize, got: usize },
    #[error("{0} qubits is beyond the supported maximum of {1}")]
    TooManyQubits(usize, usize),
    #[error("unknown circuit block id {0}")]
    UnknownBlock(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("basis size cap of {cap} exceeded (reached {reached})")]
    CapExceeded { cap: usize, reached: usize },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
