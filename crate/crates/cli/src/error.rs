use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config at {path}: {message}")]
    Config { path: String, message: String },

    #[error("{operation} failed: {source}")]
    Solver {
        operation: String,
        #[source]
        source: bsbloch::Error,
    },

    #[error("acceptance suite: {failed} criteria failed")]
    Verification { failed: usize },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn solver(operation: impl Into<String>, source: bsbloch::Error) -> Self {
        CliError::Solver {
            operation: operation.into(),
            source,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Solver { .. } | CliError::Verification { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }
}
