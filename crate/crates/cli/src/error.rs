use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<critflow::Error> for CliError {
    fn from(e: critflow::Error) -> Self {
        use critflow::Error as E;
        match e {
            E::Config(_) | E::Domain(_) | E::Range(_) | E::Precondition(_) | E::Resolution(_) => {
                CliError::Config(e.to_string())
            }
            E::Numerical(_) | E::Search(_) | E::Structural(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Numerical(format!("cannot serialise output: {e}"))
    }
}
