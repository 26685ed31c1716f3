use thiserror::Error;

use dmp_ledger::LedgerError;

#[derive(Debug, Error)]
pub enum OrchestratorError {
    /// A dataset or record file could not be loaded.
    #[error("load failed: {0}")]
    Load(#[source] dmp_core::Error),

    /// A pipeline stage failed; no model was deployed.
    #[error("training failed at stage '{stage}': {source}")]
    Train {
        stage: String,
        #[source]
        source: dmp_core::Error,
    },

    /// A record could not be mapped onto the deployed model's inputs.
    #[error("record does not match the deployed model: {0}")]
    Transform(#[source] dmp_core::Error),

    /// The ledger rejected a transaction.
    #[error("ledger rejected the request: {0}")]
    Policy(#[source] LedgerError),

    #[error(transparent)]
    Ledger(LedgerError),

    #[error("workflow error: {0}")]
    Workflow(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<LedgerError> for OrchestratorError {
    fn from(e: LedgerError) -> Self {
        match e {
            LedgerError::Denied { .. } | LedgerError::Revoked(_) | LedgerError::Authentication(_) => {
                OrchestratorError::Policy(e)
            }
            other => OrchestratorError::Ledger(other),
        }
    }
}

impl OrchestratorError {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            OrchestratorError::Load(_) => 2,
            OrchestratorError::Train { .. } => 3,
            OrchestratorError::Policy(_) => 4,
            OrchestratorError::Transform(_) => 5,
            OrchestratorError::Config(_) => 6,
            _ => 1,
        }
    }
}

pub type Result<T, E = OrchestratorError> = std::result::Result<T, E>;
