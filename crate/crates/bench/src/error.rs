use thiserror::Error;

use coolplant_core::{CalibrationError, ConfigError, SimError};
use coolplant_its::EnvError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("policy `{0}`: {1}")]
    Policy(String, String),
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error("invalid benchmark: {0}")]
    Benchmark(String),
}

pub fn io_error(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.display().to_string(),
        source,
    }
}
