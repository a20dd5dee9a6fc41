use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, FouError>;

#[derive(Debug, Error)]
pub enum FouError {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "circulant embedding failed: eigenvalue {min_eigenvalue:e} below tolerance -{tolerance:e}"
    )]
    CirculantEmbeddingFailed { min_eigenvalue: f64, tolerance: f64 },

    #[error("cholesky factorization failed at pivot {index}: {pivot:e}")]
    CholeskyFailed { index: usize, pivot: f64 },

    #[error("Euler scheme unstable: theta * delta = {theta_delta} >= 1")]
    SchemeUnstable { theta_delta: f64 },

    #[error("degenerate path: integrated square {integrated_square:e} is zero")]
    DegeneratePath { integrated_square: f64 },

    #[error("config error in {}{}: {message}", path.display(), location(*line, *column))]
    Config {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn location(line: usize, column: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" (line {line}, column {column})")
    }
}

impl FouError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        FouError::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FouError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            FouError::CirculantEmbeddingFailed { .. }
                | FouError::CholeskyFailed { .. }
                | FouError::SchemeUnstable { .. }
                | FouError::DegeneratePath { .. }
        )
    }
}
