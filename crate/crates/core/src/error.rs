use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: unknown phoneme label `{label}`")]
    UnknownLabel { label: String, line: usize },

    #[error("inventory: {0}")]
    Inventory(String),

    #[error("range: {0}")]
    Range(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("numeric: {0}")]
    Numeric(String),

    #[error("data: {0}")]
    Data(String),

    #[error("labels: {0}")]
    Label(String),

    #[error("spec: {0}")]
    Spec(String),

    #[error("config: {0}")]
    Config(String),

    #[error("smo did not converge after {iterations} iterations (max violation {violation:.3e}, tolerance {tolerance:.1e})")]
    Convergence {
        iterations: usize,
        violation: f64,
        tolerance: f64,
    },

    #[error("render: {0}")]
    Render(String),

    #[error("format: {0}")]
    Format(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Attaches a context string (file name, grid cell, command).
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// `true` for failures caused by bad input or configuration rather than
    /// a defect in the toolkit itself.
    pub fn is_user_error(&self) -> bool {
        match self {
            Error::Context { source, .. } => source.is_user_error(),
            Error::Numeric(_) | Error::Convergence { .. } => false,
            _ => true,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
