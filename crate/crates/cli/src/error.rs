use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("CSI file: {0}")]
    Csib(#[from] crate::csib::CsibError),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] phasecal::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for usage/config problems, 2 for bad or unreadable data, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        use phasecal::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Csib(_) | CliError::Data(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidConfig(_) | E::Precondition(_) => 1,
                E::Io(_) | E::Parse(_) | E::ShapeMismatch { .. } | E::EmptyInput(_) => 2,
                _ => 3,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
