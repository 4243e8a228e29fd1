//! Stateless analytical models of the plant equipment.

pub mod chiller;
pub mod pid;
pub mod pump;
pub mod tower;

pub use chiller::{compressor_power, load_roots, solve_chiller, ChillerParams, ChillerSolution};
pub use pid::{pid_step, PidGains, PidState};
pub use pump::{
    fan_flow_power, inverse_pump_setpoint, multi_pump_flow, pump_flow_power, PumpFanParams,
};
pub use tower::{inverse_fan_setpoint, multi_tower_leaving_temp, tower_leaving_temp, TowerParams};
