use std::path::PathBuf;

use odcal_core::{
    MetricError, ModelError, NetworkError, PathError, ScenarioError, SimError, SoError,
};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    So(#[from] SoError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const VALIDATION: i32 = 2;
    pub const GRIDLOCK: i32 = 3;
    pub const PARTIAL: i32 = 4;
}

impl Error {
    pub fn is_gridlock(&self) -> bool {
        matches!(
            self,
            Error::Sim(SimError::Gridlock { .. })
                | Error::So(SoError::Sim(SimError::Gridlock { .. }))
                | Error::Scenario(ScenarioError::Gridlock { .. })
                | Error::Scenario(ScenarioError::Sim(SimError::Gridlock { .. }))
        )
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_gridlock() {
            exit::GRIDLOCK
        } else {
            exit::VALIDATION
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv { path: path.into(), source }
    }
}
