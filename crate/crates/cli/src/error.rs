use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Parse { path: String, message: String },

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Muskat(#[from] muskat::MuskatError),

    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// 2 for invalid input, 1 for everything that failed while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Config { .. } | CliError::Argument(_) => 2,
            CliError::Io { .. } | CliError::Muskat(_) | CliError::Failed(_) => 1,
        }
    }
}
