//! Error types shared across the toolkit.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    /// Incompatible tensor shapes; carries both offending shapes.
    #[error("dimension mismatch in {op}: {left} vs {right}")]
    Dimension {
        op: &'static str,
        left: String,
        right: String,
    },

    /// Bad input data (empty signal, misaligned ids, malformed file, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// Configuration errors, e.g. an empty sampler cell or an unknown key.
    #[error("configuration error: {0}")]
    Config(String),

    /// Non-finite gradient reaching the optimizer.
    #[error("optimizer error on parameter '{name}': {reason}")]
    Optimizer { name: String, reason: String },

    /// Numeric failure: training divergence or an undefined statistic.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Binary/file format violations (bad magic, version, truncation).
    #[error("format error in {path}: {reason}")]
    Format { path: String, reason: String },
}

impl CoreError {
    pub fn dimension(op: &'static str, left: impl Into<String>, right: impl Into<String>) -> Self {
        CoreError::Dimension {
            op,
            left: left.into(),
            right: right.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CoreError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<String>, reason: impl Into<String>) -> Self {
        CoreError::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
