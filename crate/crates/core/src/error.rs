use std::path::PathBuf;

use crate::risk::RiskId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    ConfigFile { path: PathBuf, message: String },

    #[error("missing observable `{0}` for risk estimator")]
    MissingObservable(String),

    #[error("unknown risk `{0}`")]
    UnknownRisk(RiskId),

    #[error("skill `{0}` is already registered")]
    DuplicateSkill(String),

    #[error("no prevention skill registered for active risk `{0}`")]
    Unpreventable(RiskId),

    #[error("library has no base skill")]
    NoBaseSkill,

    #[error("initial procedure for `{risk}` did not trigger the risk within {budget} steps")]
    Procedure { risk: RiskId, budget: usize },

    #[error("non-finite value during training at episode {episode}: {what}")]
    NonFinite { episode: usize, what: String },

    #[error("episode {episode}: {source}")]
    Episode {
        episode: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("particle index {index} out of range ({count} particles)")]
    ParticleIndex { index: usize, count: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::ConfigFile { .. }
            | Error::MissingObservable(_)
            | Error::UnknownRisk(_)
            | Error::DuplicateSkill(_)
            | Error::NoBaseSkill
            | Error::ParticleIndex { .. } => 2,
            Error::MissingArtifact(_) | Error::Checkpoint(_) => 3,
            Error::NonFinite { .. } | Error::Numeric(_) => 4,
            Error::Episode { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
