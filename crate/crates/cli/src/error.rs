use emhd_core::Error;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resolution abort: {0}")]
    Resolution(String),
    #[error("numerical abort: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Resolution(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Io(_) => CliError::Io(msg),
            Error::UnderResolved(_) => CliError::Resolution(msg),
            Error::NonFinite | Error::Quadrature { .. } => CliError::Numeric(msg),
            _ => CliError::Config(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
