use thiserror::Error;

/// Failures mapped onto the exit-code contract: 1 numerical, 2 input.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => 1,
            CliError::Input(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<freerg_core::Error> for CliError {
    fn from(e: freerg_core::Error) -> Self {
        use freerg_core::Error::*;
        let numeric = match &e {
            AtGridPoint { source, .. } => !matches!(**source, Domain(_) | OffAxis { .. }),
            InversionFailure { .. }
            | BranchEscape { .. }
            | Subordination { .. }
            | VanishingCauchy { .. }
            | UndefinedRatio { .. } => true,
            _ => false,
        };
        if numeric {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}
