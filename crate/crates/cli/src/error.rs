use thiserror::Error;

use ctilab::cnn::CnnError;
use ctilab::dataset::DatasetError;
use ctilab::eval::EvalError;
use ctilab::schedsim::SimError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Bad or missing input: files, manifests, scenarios, incompatible models.
    #[error("{0:#}")]
    Data(anyhow::Error),
    #[error("internal error: {0:#}")]
    Internal(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(anyhow::anyhow!(msg.into()))
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.into())
            }
        })*
    };
}

data_error!(DatasetError, EvalError, SimError, std::io::Error, serde_json::Error, toml::ser::Error);

impl From<CnnError> for CliError {
    fn from(e: CnnError) -> Self {
        match e {
            CnnError::NonFinite => CliError::Internal(e.into()),
            other => CliError::Data(other.into()),
        }
    }
}

/// Attaches a path or action to an error while keeping its exit class.
pub trait Context<T> {
    fn with_context(self, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T, E: Into<CliError>> Context<T> for Result<T, E> {
    fn with_context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|e| match e.into() {
            CliError::Data(inner) => CliError::Data(inner.context(what())),
            CliError::Internal(inner) => CliError::Internal(inner.context(what())),
            usage => usage,
        })
    }
}
