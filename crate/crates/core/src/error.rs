use std::io;

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or mismatched shapes supplied by the caller.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke an operation's precondition (wrong action length,
    /// missing index sets, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Training produced a non-finite loss, gradient or reward.
    #[error("training diverged: {0}")]
    NonFinite(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
