use std::fmt;

use seqtag::corpus::CorpusError;
use seqtag::crf::CrfError;
use seqtag::eval::EvalError;
use seqtag::features::FeatureError;
use seqtag::model_io::ModelIoError;

/// Failures surfaced to the shell: exit 1 for input and configuration
/// problems, exit 2 when gold and predictions do not line up.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Mismatch(String),
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self::Input(message.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Input(_) => 1,
            Self::Mismatch(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(msg) | Self::Mismatch(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self::Input(err.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(err: CorpusError) -> Self {
        Self::Input(err.to_string())
    }
}

impl From<CrfError> for CliError {
    fn from(err: CrfError) -> Self {
        Self::Input(err.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(err: FeatureError) -> Self {
        Self::Input(err.to_string())
    }
}

impl From<ModelIoError> for CliError {
    fn from(err: ModelIoError) -> Self {
        Self::Input(err.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(err: EvalError) -> Self {
        match err {
            EvalError::TokenizationMismatch(_) => Self::Mismatch(err.to_string()),
            other => Self::Input(other.to_string()),
        }
    }
}
