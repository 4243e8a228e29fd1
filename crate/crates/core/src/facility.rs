//! Simulator contract used by the task suite: reset with a configuration,
//! step with supervisory setpoints, read back measurements.
//!
//! Values cross this boundary in the units of the id registry (°F, psi,
//! kg/s, kW); conversion to SI happens here.

use std::collections::BTreeMap;

use crate::config::PlantConfig;
use crate::error::{ConfigError, SimError};
use crate::ids;
use crate::network::{advance, build_network, Boundary, NetworkTopology, PlantControls, SimState};
use crate::units::{fahrenheit_to_kelvin, kelvin_to_fahrenheit, pa_to_psi, psi_to_pa};

/// Observable id → value.
pub type MeasurementMap = BTreeMap<String, f64>;
/// Action id → value.
pub type ControlMap = BTreeMap<String, f64>;

/// Wire-unit view of a set of SI controls.
pub fn controls_to_map(c: &PlantControls) -> ControlMap {
    let mut m = ControlMap::new();
    m.insert(ids::CHILLERS_ENABLED.into(), c.chillers_enabled as f64);
    m.insert(ids::CHILLED_PUMPS_ENABLED.into(), c.chilled_pumps as f64);
    m.insert(ids::CONDENSER_PUMPS_ENABLED.into(), c.condenser_pumps as f64);
    m.insert(ids::CHILLER_LEAVING_TEMP.into(), kelvin_to_fahrenheit(c.chiller_leaving_temp));
    m.insert(ids::TOWER_RETURN_TEMP.into(), kelvin_to_fahrenheit(c.tower_return_temp));
    m.insert(ids::CONDENSER_FLOW.into(), c.condenser_flow);
    m.insert(ids::DIFF_PRESSURE.into(), pa_to_psi(c.diff_pressure));
    m.insert(ids::FREE_COOLING_HEX.into(), c.heat_exchangers as f64);
    m
}

/// Applies `map` on top of `base`, clamping every value into its action
/// range (and integer counts into the installed equipment). Returns the new
/// controls and the ids that had to be clamped.
pub fn apply_controls(
    base: &PlantControls,
    map: &ControlMap,
    config: &PlantConfig,
) -> Result<(PlantControls, Vec<String>), SimError> {
    let mut wire = controls_to_map(base);
    let mut clamped = Vec::new();
    let e = &config.equipment;
    for (id, value) in map {
        let spec = ids::control_spec(id)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown control `{id}`")))?;
        if !value.is_finite() {
            return Err(ConfigError::Invalid(format!("control `{id}` is not finite")).into());
        }
        let installed = match id.as_str() {
            ids::CHILLERS_ENABLED => e.chillers,
            ids::CHILLED_PUMPS_ENABLED => e.chilled_pumps,
            ids::CONDENSER_PUMPS_ENABLED => e.condenser_pumps,
            ids::FREE_COOLING_HEX => e.heat_exchangers,
            _ => usize::MAX,
        };
        let hi = spec.max.min(installed as f64);
        let mut v = value.clamp(spec.min, hi);
        if spec.integer {
            // f64::round rounds half away from zero.
            v = v.round();
        }
        if v != *value {
            clamped.push(id.clone());
        }
        wire.insert(id.clone(), v);
    }
    let count = |id: &str| wire[id] as usize;
    let controls = PlantControls {
        chillers_enabled: count(ids::CHILLERS_ENABLED),
        chilled_pumps: count(ids::CHILLED_PUMPS_ENABLED),
        condenser_pumps: count(ids::CONDENSER_PUMPS_ENABLED),
        chiller_leaving_temp: fahrenheit_to_kelvin(wire[ids::CHILLER_LEAVING_TEMP]),
        tower_return_temp: fahrenheit_to_kelvin(wire[ids::TOWER_RETURN_TEMP]),
        condenser_flow: wire[ids::CONDENSER_FLOW],
        diff_pressure: psi_to_pa(wire[ids::DIFF_PRESSURE]),
        heat_exchangers: count(ids::FREE_COOLING_HEX),
    };
    Ok((controls, clamped))
}

/// One plant instance. Owned by a single episode at a time.
#[derive(Debug, Clone)]
pub struct FacilitySim {
    config: PlantConfig,
    topology: NetworkTopology,
    state: SimState,
    controls: PlantControls,
    boundary: Boundary,
    clamped: Vec<String>,
}

impl FacilitySim {
    /// Builds the plant and performs the first reset.
    pub fn new(config: PlantConfig) -> Result<Self, SimError> {
        let (topology, state) = build_network(&config)?;
        let boundary = boundary_at(&config, 0.0)?;
        let mut sim = Self {
            config,
            topology,
            state,
            controls: PlantControls::default(),
            boundary,
            clamped: Vec::new(),
        };
        sim.reset_inner()?;
        Ok(sim)
    }

    /// Fresh state for `config` at the default setpoints.
    pub fn reset(&mut self, config: PlantConfig) -> Result<MeasurementMap, SimError> {
        let (topology, state) = build_network(&config)?;
        self.config = config;
        self.topology = topology;
        self.state = state;
        self.reset_inner()?;
        Ok(self.measurements())
    }

    fn reset_inner(&mut self) -> Result<(), SimError> {
        let (controls, _) = apply_controls(&PlantControls::default(), &ControlMap::new(), &self.config)?;
        self.controls = controls;
        self.clamped.clear();
        for _ in 0..self.config.simulation.warmup_steps {
            self.advance_once()?;
        }
        self.state.clock = 0.0;
        self.boundary = boundary_at(&self.config, 0.0)?;
        self.state = crate::network::probe(
            &self.topology,
            &self.config,
            &self.state,
            &self.controls,
            &self.boundary,
        )?;
        Ok(())
    }

    fn advance_once(&mut self) -> Result<(), SimError> {
        self.boundary = boundary_at(&self.config, self.state.clock)?;
        self.state = advance(
            &self.topology,
            &self.config,
            &self.state,
            &self.controls,
            &self.boundary,
            self.config.simulation.step_seconds,
        )?;
        Ok(())
    }

    /// Applies `controls` (missing ids keep their previous value) and runs
    /// one environment step.
    pub fn step(&mut self, controls: &ControlMap) -> Result<MeasurementMap, SimError> {
        let (next, clamped) = apply_controls(&self.controls, controls, &self.config)?;
        self.controls = next;
        self.clamped = clamped;
        self.advance_once()?;
        Ok(self.measurements())
    }

    /// The full observation table for the current state.
    pub fn measurements(&self) -> MeasurementMap {
        let s = &self.state;
        let w = &self.boundary.weather;
        let node_f = |name: &str| kelvin_to_fahrenheit(s.temperature(&self.topology, name).unwrap_or(f64::NAN));
        let mut m = MeasurementMap::new();
        m.insert(ids::BUILDING_LOAD.into(), s.building_load);
        m.insert(ids::DRY_BULB.into(), kelvin_to_fahrenheit(w.t_dry_bulb));
        m.insert(ids::WET_BULB.into(), kelvin_to_fahrenheit(w.t_wet_bulb));
        m.insert(ids::REL_HUMIDITY.into(), w.rel_humidity);
        m.insert(ids::TOWER_FAN_POWER.into(), s.fan_power);
        m.insert(ids::CONDENSER_PUMP_POWER.into(), s.condenser_pump_power);
        m.insert(ids::CHILLED_PUMP_POWER.into(), s.chilled_pump_power);
        m.insert(ids::CHILLER_BANK_LEAVING_TEMP.into(), node_f("chw_bank"));
        m.insert(ids::CHILLED_WATER_SUPPLY_TEMP.into(), node_f("chw_supply"));
        m.insert(ids::CHILLED_WATER_RETURN_TEMP.into(), node_f("chw_return"));
        m.insert(ids::CHILLERS_ENABLED.into(), self.controls.chillers_enabled as f64);
        for (i, c) in s.chillers.iter().enumerate() {
            m.insert(ids::chiller_id(i, ids::CONDENSER_LEAVING_TEMP), kelvin_to_fahrenheit(c.t_condenser_out));
            m.insert(ids::chiller_id(i, ids::CHILLED_WATER_FLOW), c.evaporator_flow);
            m.insert(ids::chiller_id(i, ids::COMPRESSOR_POWER), c.compressor_power);
        }
        m
    }

    pub fn config(&self) -> &PlantConfig {
        &self.config
    }

    /// Changes a configuration parameter for subsequent steps.
    pub fn set_parameter(&mut self, id: &str, value: f64) -> Result<(), SimError> {
        self.config.set_parameter(id, value)?;
        Ok(())
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn controls(&self) -> &PlantControls {
        &self.controls
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    /// Ids clamped into range on the last step.
    pub fn clamped(&self) -> &[String] {
        &self.clamped
    }

    /// Total electrical power, kW.
    pub fn total_power(&self) -> f64 {
        self.state.total_power()
    }
}

/// Weather and building load at simulation clock `clock`.
pub fn boundary_at(config: &PlantConfig, clock: f64) -> Result<Boundary, SimError> {
    let t = config.simulation.start_time + clock;
    let weather = config.weather_at(t)?;
    Ok(Boundary {
        weather,
        load: config.load_at(&weather, t),
    })
}
