use std::fmt;
use std::path::Path;

use clinorm_core::augment::AugmentError;
use clinorm_core::corpus::CorpusError;
use clinorm_core::eval::EvalError;
use clinorm_core::terminology::TermError;
use clinorm_llm::LlmError;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_SERVICE: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::data(format!("{}: {e}", path.display()))
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::data(e.to_string())
            }
        }
    )*};
}

data_error!(CorpusError, TermError, AugmentError, EvalError);

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::Prompt(_) | LlmError::Output(_) => CliError::data(e.to_string()),
            _ => CliError {
                code: EXIT_SERVICE,
                message: e.to_string(),
            },
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
