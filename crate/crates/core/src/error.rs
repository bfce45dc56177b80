use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported filter: {0} vanishing moments (supported: 1..=20)")]
    UnsupportedFilter(usize),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("level error: {0}")]
    Level(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Quadrature or root finding did not reach its tolerance.
    #[error("numerical failure in {context}: residual {residual:.3e}")]
    Numerical { context: String, residual: f64 },

    #[error("degenerate constraint: {0}")]
    DegenerateConstraint(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error at `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn numerical(context: impl Into<String>, residual: f64) -> Self {
        Error::Numerical {
            context: context.into(),
            residual,
        }
    }

    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Prefixes the context of a numerical failure; other variants pass through.
    pub(crate) fn within(self, outer: impl std::fmt::Display) -> Self {
        match self {
            Error::Numerical { context, residual } => Error::Numerical {
                context: format!("{outer}: {context}"),
                residual,
            },
            other => other,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnsupportedFilter(_)
            | Error::Argument(_)
            | Error::Level(_)
            | Error::Schema { .. }
            | Error::DegenerateConstraint(_)
            | Error::NoSolution(_) => 2,
            Error::Shape(_) | Error::DegenerateSignal(_) | Error::Parse { .. } | Error::Io(_) => 3,
            Error::Numerical { .. } => 4,
        }
    }
}
