use thiserror::Error;

/// Failures of the analytical component models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("compressor power denominator D*q + C = {denominator:e} is singular at q = {q}")]
    SingularDenominator { q: f64, denominator: f64 },
    #[error("chiller quadratic has no real root (discriminant {discriminant:e})")]
    NoRealRoot { discriminant: f64 },
    #[error("positive-branch evaporator load {q} kW is negative")]
    NegativeLoad { q: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("multi-pump interaction factor {factor} is not positive")]
    NonPositiveInteraction { factor: f64 },
    #[error("expected {expected} entries, got {got}")]
    ArityMismatch { expected: usize, got: usize },
}

/// Failures while fitting model coefficients to telemetry.
#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("telemetry has {rows} usable rows, need at least {required}")]
    InsufficientData { rows: usize, required: usize },
    #[error("design matrix is rank deficient (condition {condition:e})")]
    RankDeficient { condition: f64 },
    #[error("nonlinear fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("telemetry is missing column `{0}`")]
    MissingColumn(String),
    #[error("telemetry row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("unknown calibration model `{0}`")]
    UnknownModel(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Failures while loading or sampling boundary conditions.
#[derive(Debug, Error)]
pub enum WeatherError {
    #[error("weather row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("weather row {row}: wet bulb {wet_bulb} K exceeds dry bulb {dry_bulb} K")]
    Psychrometric {
        row: usize,
        dry_bulb: f64,
        wet_bulb: f64,
    },
    #[error("weather series is empty")]
    Empty,
    #[error("weather file is missing column `{0}`")]
    MissingColumn(String),
    #[error("weather timestamps must be strictly increasing (row {row})")]
    Unordered { row: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Failures of the configuration documents.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed configuration: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Weather(#[from] WeatherError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Failures of network construction and time integration.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("node `{node}` temperature {temperature} K left the sanity band at t = {clock} s")]
    Instability {
        node: String,
        temperature: f64,
        clock: f64,
    },
    #[error("time step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("simulator used before reset")]
    NotReset,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Weather(#[from] WeatherError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
