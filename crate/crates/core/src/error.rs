use thiserror::Error;

/// Errors produced by the netgame library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("minimum eigenvalue undefined for asymmetric network (max asymmetry {0:e})")]
    AsymmetricNetwork(f64),

    #[error("did not converge: {0}")]
    NotConverged(String),

    #[error("step too large: {0}")]
    StepTooLarge(String),

    #[error("not a KKT point: {0}")]
    NotKktPoint(String),

    #[error("regularity violation: {0}")]
    Regularity(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}
