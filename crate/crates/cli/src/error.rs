use thiserror::Error;

/// Failure of a subcommand, mapped onto the process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("audit failed: {0}")]
    AuditFailed(String),

    #[error("{0}")]
    Core(#[from] qtf_core::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use qtf_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::AuditFailed(_) => 4,
            CliError::Core(E::NonFinite { .. }) => 3,
            CliError::Core(E::Io(_)) | CliError::Io(_) => 1,
            CliError::Core(_) => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(qtf_core::Error::NonFinite { step: 7 }).exit_code(), 3);
        assert_eq!(CliError::Core(qtf_core::Error::Precondition("x".into())).exit_code(), 2);
        assert_eq!(CliError::AuditFailed("x".into()).exit_code(), 4);
    }
}
