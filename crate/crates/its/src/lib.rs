//! Industrial task suite: a reinforcement-learning environment over the
//! chilled-water plant simulator.
//!
//! An [`Environment`] couples a [`coolplant_core::FacilitySim`] with a
//! [`TaskDef`] (controls, reward, constraints), optional noise on initial
//! conditions, controls and measurements, and scripted [`Scenario`]s.
//! Actions are normalized to [-1, 1]; observations are padded to a fixed
//! chiller frame with a mask.

pub mod constraint;
pub mod env;
pub mod error;
pub mod noise;
pub mod scenario;
pub mod spaces;
pub mod task;

pub use constraint::{evaluate_constraints, Constraint, Status};
pub use env::{EnvDocument, EnvOptions, Environment, StepKind, TaskRef, TimeStepRecord};
pub use error::EnvError;
pub use noise::{NoiseKind, NoiseSpec};
pub use scenario::{Scenario, StepRange, Trajectory};
pub use spaces::{convert_action, convert_measurements, normalize_controls, Observation};
pub use task::{compose_task, make_task, reward, Objective, RewardParams, Task, TaskDef, CATALOG};
