use thiserror::Error;

use coolplant_core::{ConfigError, SimError};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid constraint on `{id}`: {message}")]
    Constraint { id: String, message: String },
    #[error("`{0}` is missing from the evaluated values")]
    MissingId(String),
    #[error("action has {got} components, expected {expected}")]
    Arity { expected: usize, got: usize },
    #[error("action component {index} is not finite")]
    NonFiniteAction { index: usize },
    #[error("episode has terminated; call reset first")]
    Terminated,
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("incompatible id `{id}`: {message}")]
    IncompatibleId { id: String, message: String },
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("noise: {0}")]
    Noise(String),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}
