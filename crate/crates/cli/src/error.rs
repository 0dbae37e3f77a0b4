use std::path::PathBuf;

use thiserror::Error;

/// Process exit status for each failure class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const SCHEMA: i32 = 3;
    pub const VALIDATION: i32 = 4;
    pub const COLLINEARITY: i32 = 5;
    pub const NUMERIC: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    /// The shape of an input file is wrong: missing header or column, unknown
    /// config key, malformed JSON.
    #[error("schema error: {0}")]
    Schema(String),

    /// A value has the right place but an unacceptable content.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] bellshrink::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use bellshrink::Error as E;
        match self {
            Self::Schema(_) => exit::SCHEMA,
            Self::Validation(_) => exit::VALIDATION,
            Self::Io { .. } => exit::OTHER,
            Self::Core(e) => match e {
                E::InvalidInput(_) | E::Domain(_) => exit::VALIDATION,
                E::Collinearity(_) => exit::COLLINEARITY,
                E::NotPositiveDefinite { .. }
                | E::NumericFailure(_)
                | E::RowFailure { .. }
                | E::Degenerate(_)
                | E::Overflow { .. }
                | E::CellFailure(_) => exit::NUMERIC,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
