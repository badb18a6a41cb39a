use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("input error in {path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error(
        "CFL violation: c_max = {c_max}, dt = {dt}, spacing = {spacing} \
         (c_max*dt/spacing = {number:.4} > 0.5)"
    )]
    Cfl {
        c_max: f64,
        dt: f64,
        spacing: f64,
        number: f64,
    },

    #[error("wave solver became unstable at time index {time_index}")]
    Unstable { time_index: usize },

    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error(
        "objective diverged at iteration {iteration} ({value:e} > 1e12 x initial {initial:e}); \
         try a smaller step size mu"
    )]
    Divergence {
        iteration: usize,
        value: f64,
        initial: f64,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn input(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Input {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Wraps the error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
