//! Semi-analytical chilled-water plant simulator.
//!
//! Component models are closed-form (Gordon-Ng chiller, exponential tower
//! effectiveness, affinity-law pumps and fans) and are coupled through a
//! lumped-parameter model of the chilled and condenser water loops.

pub mod calibration;
pub mod components;
pub mod config;
pub mod error;
pub mod facility;
pub mod ids;
pub mod network;
pub mod units;
pub mod weather;

pub use config::PlantConfig;
pub use error::{CalibrationError, ConfigError, ModelError, SimError, WeatherError};
pub use facility::{ControlMap, FacilitySim, MeasurementMap};
