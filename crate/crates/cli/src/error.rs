use std::fmt;

use latent_guard::encoder::EncoderError;
use latent_guard::eval::{EvalError, HarnessError};
use latent_guard::filter::FilterError;
use latent_guard::index::IndexError;
use latent_guard::sampler::SamplerError;

/// Failure classes, one per non-zero exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input files.
    Input(anyhow::Error),
    /// Data failed a checksum or content invariant.
    Integrity(anyhow::Error),
    /// The engine produced a result that violates its own contract.
    Internal(anyhow::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            Self::Input(_) => 2,
            Self::Integrity(_) => 3,
            Self::Internal(_) => 4,
        }
    }

    pub fn input(msg: impl fmt::Display) -> Self {
        Self::Input(anyhow::anyhow!("{msg}"))
    }

    pub fn internal(msg: impl fmt::Display) -> Self {
        Self::Internal(anyhow::anyhow!("{msg}"))
    }

    /// Prefixes the message with `context`, keeping the class.
    pub fn context(self, context: impl fmt::Display) -> Self {
        let wrap = |e: anyhow::Error| e.context(context.to_string());
        match self {
            Self::Input(e) => Self::Input(wrap(e)),
            Self::Integrity(e) => Self::Integrity(wrap(e)),
            Self::Internal(e) => Self::Internal(wrap(e)),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(e) | Self::Integrity(e) | Self::Internal(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        if e.is_integrity_error() {
            Self::Integrity(e.into())
        } else {
            Self::Input(e.into())
        }
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        match e {
            FilterError::Index(e) => e.into(),
            e => Self::Input(e.into()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Index(e) => e.into(),
            HarnessError::Filter(e) => e.into(),
            e => Self::Input(e.into()),
        }
    }
}

macro_rules! input_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::Input(e.into())
            }
        }
    )*};
}

input_errors!(
    SamplerError,
    EvalError,
    EncoderError,
    std::io::Error,
    serde_json::Error,
    toml::de::Error
);
