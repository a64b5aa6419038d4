use std::io;

use thiserror::Error;

use crate::env::EnvError;
use crate::linalg::LinalgError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error at line {line}: {message}")]
    Data { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(line: usize, msg: impl Into<String>) -> Self {
        Error::Data {
            line,
            message: msg.into(),
        }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data { .. } => 3,
            Error::Io(_) => 4,
        }
    }
}

impl From<EnvError> for Error {
    fn from(e: EnvError) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<LinalgError> for Error {
    fn from(e: LinalgError) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
