use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("malformed dataset: {0}")]
    Format(String),

    #[error(transparent)]
    Model(#[from] biphoton::Error),
}

impl LabError {
    /// Process exit code: 2 for bad input, 3 for numeric or fit failures.
    pub fn exit_code(&self) -> i32 {
        use biphoton::Error as E;
        match self {
            LabError::Config(_) | LabError::Io { .. } | LabError::Format(_) => 2,
            LabError::Model(
                E::NonFinite { .. }
                | E::InvalidParameter { .. }
                | E::TooFewPoints { .. }
                | E::Domain { .. }
                | E::EmptyGrid,
            ) => 2,
            LabError::Model(_) => 3,
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
