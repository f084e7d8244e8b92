use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition (shape, length, range).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Every MPPI sample scored non-finite, so no weights could be formed.
    #[error("all {0} samples produced non-finite scores")]
    AllScoresNonFinite(usize),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

/// Shorthand used throughout for precondition checks.
pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Contract(msg()))
    }
}
