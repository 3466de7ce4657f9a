use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("duplicate constraint label `{0}`")]
    DuplicateLabel(String),

    #[error("invalid bounds for `{id}`: [{lower}, {upper}]")]
    InvalidBounds { id: String, lower: f64, upper: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("constraint `{label}` cannot be encoded: {reason}")]
    UnsupportedEncoding { label: String, reason: String },

    #[error("constraint `{label}` can never be satisfied (slack range {range})")]
    InfeasibleConstraint { label: String, range: f64 },

    #[error("variable `{0}` is not binary; binarize or use the hybrid solver")]
    MustBinarize(String),

    #[error("problem has {size} binary variables, exhaustive limit is {limit}")]
    SizeExceeded { size: usize, limit: usize },

    #[error("invalid anneal schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("infeasible specification: {0}")]
    InfeasibleSpec(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable class, used in single-line JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownVariable(_) => "unknown_variable",
            Error::DuplicateVariable(_) => "duplicate_variable",
            Error::DuplicateLabel(_) => "duplicate_label",
            Error::InvalidBounds { .. } => "invalid_bounds",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::UnsupportedEncoding { .. } => "unsupported_encoding",
            Error::InfeasibleConstraint { .. } => "infeasible_constraint",
            Error::MustBinarize(_) => "must_binarize",
            Error::SizeExceeded { .. } => "size_exceeded",
            Error::InvalidSchedule(_) => "invalid_schedule",
            Error::InvalidParams(_) => "invalid_params",
            Error::InfeasibleSpec(_) => "infeasible_spec",
            Error::Unsupported(_) => "unsupported",
            Error::Io(_) => "io",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
