//! Harness around the task suite: episode runs, steady-state fidelity
//! sweeps, policy benchmarks and calibration, all writing delimited tables.

pub mod benchmark;
pub mod cem;
pub mod episode;
pub mod error;
pub mod policy;
pub mod sweep;
pub mod table;

pub use error::BenchError;
