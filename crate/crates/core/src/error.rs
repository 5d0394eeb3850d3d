use std::fmt;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared by all modules.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes do not conform; carries both offending shapes.
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    /// A parameter violates an operation's precondition.
    InvalidParameter(String),
    /// Training produced a non-finite loss; carries the epoch index.
    TrainingDiverged { epoch: usize },
    /// An estimate's denominator collapsed (e.g. zero empirical variance).
    NumericDegeneracy(String),
    /// A persisted file could not be parsed; line numbers are 1-based.
    Parse { line: usize, message: String },
    /// Filesystem failure wrapped with the offending path.
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { op, left, right } => write!(
                f,
                "shape mismatch in {op}: {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::TrainingDiverged { epoch } => {
                write!(f, "training diverged at epoch {epoch}")
            }
            Error::NumericDegeneracy(msg) => write!(f, "numeric degeneracy: {msg}"),
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::Io { path, message } => write!(f, "io error on {path}: {message}"),
        }
    }
}

impl std::error::Error for Error {}
