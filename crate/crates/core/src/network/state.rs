use serde::{Deserialize, Serialize};

use crate::components::PidState;
use crate::config::{PlantConfig, INITIAL_CHILLED_TEMP, INITIAL_CONDENSER_TEMP};
use crate::error::SimError;
use crate::ids;
use crate::units::{fahrenheit_to_kelvin, psi_to_pa};
use crate::weather::WeatherPoint;

use super::solver;
use super::topology::{Loop, NetworkTopology};

/// Supervisory setpoints in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantControls {
    pub chillers_enabled: usize,
    pub chilled_pumps: usize,
    pub condenser_pumps: usize,
    /// K
    pub chiller_leaving_temp: f64,
    /// K
    pub tower_return_temp: f64,
    /// kg/s
    pub condenser_flow: f64,
    /// Pa
    pub diff_pressure: f64,
    pub heat_exchangers: usize,
}

impl Default for PlantControls {
    /// The default column of the action table.
    fn default() -> Self {
        let d = |id: &str| ids::control_spec(id).unwrap().default;
        Self {
            chillers_enabled: d(ids::CHILLERS_ENABLED) as usize,
            chilled_pumps: d(ids::CHILLED_PUMPS_ENABLED) as usize,
            condenser_pumps: d(ids::CONDENSER_PUMPS_ENABLED) as usize,
            chiller_leaving_temp: fahrenheit_to_kelvin(d(ids::CHILLER_LEAVING_TEMP)),
            tower_return_temp: fahrenheit_to_kelvin(d(ids::TOWER_RETURN_TEMP)),
            condenser_flow: d(ids::CONDENSER_FLOW),
            diff_pressure: psi_to_pa(d(ids::DIFF_PRESSURE)),
            heat_exchangers: d(ids::FREE_COOLING_HEX) as usize,
        }
    }
}

/// Outdoor air and building heat gain held over one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub weather: WeatherPoint,
    /// kW
    pub load: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    /// K
    pub temperature: f64,
    /// kg/s through the node.
    pub mass_flow: f64,
    /// Pa above the pump inlet of the node's loop.
    pub diff_pressure: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ChillerState {
    /// Isolation valve opening in [0, 1]; doubles as the duty fraction while
    /// the chiller is being staged on or off.
    pub valve: f64,
    /// kg/s
    pub evaporator_flow: f64,
    /// kg/s
    pub condenser_flow: f64,
    /// Evaporator load, kW.
    pub load: f64,
    /// Heat rejected to condenser water, kW.
    pub condenser_heat: f64,
    /// kW
    pub compressor_power: f64,
    /// K
    pub t_chilled_out: f64,
    /// K
    pub t_condenser_out: f64,
}

/// Heat bookkeeping of one loop over one advance, kJ.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LoopBalance {
    pub added: f64,
    pub removed: f64,
    pub stored: f64,
    /// Round-off level of the stored heat: a throughput smaller than this is
    /// indistinguishable from the rounding of the storage term.
    pub floor: f64,
}

impl LoopBalance {
    pub fn residual(&self) -> f64 {
        (self.added - self.removed - self.stored).abs()
    }

    pub fn gross(&self) -> f64 {
        self.added + self.removed
    }

    /// Residual as a fraction of the gross throughput, or of the round-off
    /// floor when the throughput is smaller.
    pub fn relative(&self) -> f64 {
        let scale = self.gross().max(self.floor);
        if scale > 0.0 {
            self.residual() / scale
        } else {
            0.0
        }
    }

    pub(crate) fn accumulate(&mut self, other: &LoopBalance) {
        self.added += other.added;
        self.removed += other.removed;
        self.stored += other.stored;
        self.floor = self.floor.max(other.floor);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBalance {
    pub chilled: LoopBalance,
    pub condenser: LoopBalance,
    /// Largest relative residual of any single substep.
    pub worst_substep: f64,
}

/// Complete transient state of the plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    /// s
    pub clock: f64,
    pub nodes: Vec<NodeState>,
    /// kg/s along each topology edge, in edge order.
    pub edge_flows: Vec<f64>,
    pub chillers: Vec<ChillerState>,
    pub chiller_pid: PidState,
    pub chilled_pump_pid: PidState,
    /// Per-chiller load demanded by the leaving-temperature loop, kW.
    pub chiller_demand: f64,
    /// Hz, per running pump.
    pub chilled_pump_freq: f64,
    pub condenser_pump_freq: f64,
    /// Hz, per fan.
    pub fan_freq: f64,
    /// kg/s
    pub chilled_flow: f64,
    pub condenser_flow: f64,
    /// kW
    pub chilled_pump_power: f64,
    pub condenser_pump_power: f64,
    pub fan_power: f64,
    pub hex_heat: f64,
    pub tower_heat: f64,
    pub building_load: f64,
    /// Chilled-water pressure rise across the distribution, Pa.
    pub distribution_pressure: f64,
    pub balance: EnergyBalance,
}

impl SimState {
    pub fn temperature(&self, topology: &NetworkTopology, node: &str) -> Option<f64> {
        topology.node_index(node).map(|i| self.nodes[i].temperature)
    }

    pub fn compressor_power(&self) -> f64 {
        self.chillers.iter().map(|c| c.compressor_power).sum()
    }

    /// Total electrical draw, kW.
    pub fn total_power(&self) -> f64 {
        self.compressor_power() + self.chilled_pump_power + self.condenser_pump_power + self.fan_power
    }

    pub fn running_chillers(&self) -> usize {
        self.chillers.iter().filter(|c| c.valve > 0.0).count()
    }

    pub fn loop_mass(&self, topology: &NetworkTopology, circuit: Loop) -> f64 {
        topology.loop_mass(circuit)
    }

    /// Inflow minus outflow at each node, kg/s. Zero up to rounding when the
    /// flow field is continuous.
    pub fn flow_imbalance(&self, topology: &NetworkTopology) -> Vec<f64> {
        let mut net = vec![0.0; self.nodes.len()];
        for (e, m) in topology.edges.iter().zip(&self.edge_flows) {
            net[e.to] += m;
            net[e.from] -= m;
        }
        net
    }
}

pub(crate) fn initial_state(
    config: &PlantConfig,
    topology: &NetworkTopology,
) -> Result<SimState, SimError> {
    let t_chw = config.parameters[INITIAL_CHILLED_TEMP].value;
    let t_cw = config.parameters[INITIAL_CONDENSER_TEMP].value;
    let controls = PlantControls::default();
    let nodes = topology
        .nodes
        .iter()
        .map(|n| NodeState {
            temperature: match n.circuit {
                Loop::Chilled => t_chw,
                Loop::Condenser => t_cw,
            },
            mass_flow: 0.0,
            diff_pressure: 0.0,
        })
        .collect();
    let enabled = controls.chillers_enabled.min(topology.chillers);
    let chillers = (0..topology.chillers)
        .map(|i| ChillerState {
            valve: if i < enabled { 1.0 } else { 0.0 },
            t_chilled_out: t_chw,
            t_condenser_out: t_cw,
            ..ChillerState::default()
        })
        .collect();

    // Start the loops at their feed-forward operating points so the first
    // steps are not dominated by controller transients.
    let weather = config.weather_at(config.simulation.start_time)?;
    let load = config.load_at(&weather, config.simulation.start_time);
    let gains = solver::gains(config);
    let demand = if enabled > 0 {
        (load / enabled as f64).clamp(0.0, solver::rated_load(config)?)
    } else {
        0.0
    };
    let pump_freq = solver::chilled_pump_feedforward(config, topology, &controls);
    Ok(SimState {
        clock: 0.0,
        nodes,
        edge_flows: vec![0.0; topology.edges.len()],
        chillers,
        chiller_pid: PidState::holding(demand, &gains.chiller),
        chilled_pump_pid: PidState::holding(pump_freq, &gains.chilled_pump),
        chiller_demand: demand,
        chilled_pump_freq: pump_freq,
        condenser_pump_freq: 0.0,
        fan_freq: 0.0,
        chilled_flow: 0.0,
        condenser_flow: 0.0,
        chilled_pump_power: 0.0,
        condenser_pump_power: 0.0,
        fan_power: 0.0,
        hex_heat: 0.0,
        tower_heat: 0.0,
        building_load: load,
        distribution_pressure: 0.0,
        balance: EnergyBalance::default(),
    })
}
