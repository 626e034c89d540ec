use qobserver_core::{CoreError, DesignError, ObserverClaim};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration; exit code 2.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A design stage failed; exit code 1.
    #[error("design failed at {0}")]
    Design(#[from] DesignError),
    /// Simulation or verification failed before producing a report; exit
    /// code 1.
    #[error("{stage} failed: {source}")]
    Numerics {
        stage: &'static str,
        #[source]
        source: CoreError,
    },
    /// Verification ran but at least one claim was violated; exit code 1.
    #[error("verification failed: violated {}", .0.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "))]
    ClaimsViolated(Vec<ObserverClaim>),
    /// Golden values not reproduced; exit code 3.
    #[error("golden mismatch: {}", .0.join(", "))]
    GoldenMismatch(Vec<String>),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::GoldenMismatch(_) => 3,
            CliError::Design(_)
            | CliError::Numerics { .. }
            | CliError::ClaimsViolated(_)
            | CliError::Io { .. } => 1,
        }
    }
}
