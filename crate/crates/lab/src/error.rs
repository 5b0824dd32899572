use std::path::PathBuf;

use thiserror::Error;

/// Process exit code for a configuration or input error.
pub const EXIT_CONFIG: i32 = 2;
/// Process exit code for a numerical failure.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Core(#[from] cascade_core::Error),
}

pub type LabResult<T> = Result<T, LabError>;

impl LabError {
    pub fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        LabError::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for anything the user can fix in the inputs, 3 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        use cascade_core::Error as E;
        match self {
            LabError::Core(e) => match e {
                E::EmptyGraph
                | E::SelfLoop(_)
                | E::VertexOutOfRange { .. }
                | E::DuplicateEdge(..)
                | E::DimensionMismatch { .. }
                | E::InvalidParameter(_)
                | E::DegenerateCriticalValue { .. }
                | E::NoBistability { .. }
                | E::NotSimple { .. }
                | E::ComplexEigenvalue { .. } => EXIT_CONFIG,
                _ => EXIT_NUMERICAL,
            },
            LabError::Pool(_) => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        }
    }
}
