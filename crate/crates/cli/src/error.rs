use thiserror::Error;

/// Failure classes of the command line, each with a fixed exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable input, malformed JSON or bad arguments.
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("relation failure: {0}")]
    RelationFailure(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::RelationFailure(_) => 3,
        }
    }
}

impl From<nlab_core::error::Error> for CliError {
    fn from(e: nlab_core::error::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Parse("x".into()).exit_code(), 1);
        assert_eq!(CliError::Io(std::io::Error::other("x")).exit_code(), 1);
        assert_eq!(CliError::Validation("x".into()).exit_code(), 2);
        assert_eq!(CliError::RelationFailure("x".into()).exit_code(), 3);
        let core = nlab_core::error::Error::Incomplete { residual: 0.5 };
        assert_eq!(CliError::from(core).exit_code(), 2);
    }
}
