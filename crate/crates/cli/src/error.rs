use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] phaseline_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io { .. } => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) => 3,
        }
    }

    /// Error payload naming the failing module and operation.
    pub fn to_json(&self, command: &str) -> serde_json::Value {
        let (kind, module, operation) = match self {
            CliError::Validation(_) => ("InvalidInput", "cli-harness", command),
            CliError::Io { .. } => ("Io", "cli-harness", command),
            CliError::Core(e) => {
                let (module, operation) = e.origin();
                (e.kind(), module, operation)
            }
        };
        json!({
            "error": {
                "kind": kind,
                "module": module,
                "operation": operation,
                "command": command,
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
    }
}
