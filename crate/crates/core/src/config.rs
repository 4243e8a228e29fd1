//! Plant configuration document.
//!
//! The on-disk form is TOML. Coefficients may be given inline or by a path
//! to a calibration file, resolved relative to the configuration file.
//! Everything is SI (K, kg/s, kW, Hz, Pa, m, m³).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::components::{ChillerParams, PumpFanParams, TowerParams};
use crate::error::ConfigError;
use crate::weather::{load_weather_file, LoadProfile, WeatherPoint, WeatherSeries};

/// Largest plant the action table can address.
pub const MAX_CHILLERS: usize = 3;
pub const MAX_PUMPS: usize = 3;
pub const MAX_HEAT_EXCHANGERS: usize = 3;
pub const MAX_TOWERS: usize = 8;

/// Names of the well-mixed volumes of the two loops.
pub const CHILLED_NODES: [&str; 5] = [
    "chw_return",
    "chw_pump",
    "chw_discharge",
    "chw_bank",
    "chw_supply",
];
pub const CONDENSER_NODES: [&str; 4] = ["cw_basin", "cw_pump", "cw_discharge", "cw_return"];

/// Names of the pipe segments carrying friction and volume.
pub const PIPES: [&str; 5] = [
    "distribution",
    "supply_main",
    "evaporator_branch",
    "condenser_branch",
    "tower_riser",
];

/// Required tunable parameters.
pub const DRY_BULB: &str = "dry_bulb";
pub const REL_HUMIDITY: &str = "rel_humidity";
pub const DRY_BULB_OFFSET: &str = "dry_bulb_offset";
pub const LOAD_SCALE: &str = "load_scale";
pub const INITIAL_CHILLED_TEMP: &str = "initial_chilled_temp";
pub const INITIAL_CONDENSER_TEMP: &str = "initial_condenser_temp";
pub const PARAMETERS: [&str; 6] = [
    DRY_BULB,
    REL_HUMIDITY,
    DRY_BULB_OFFSET,
    LOAD_SCALE,
    INITIAL_CHILLED_TEMP,
    INITIAL_CONDENSER_TEMP,
];

/// Gordon-Ng constants without the flow-dependent capacitance rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChillerCoefficients {
    pub a_coef: f64,
    pub b_coef: f64,
    pub c_coef: f64,
    pub d_coef: f64,
}

impl ChillerCoefficients {
    pub fn with_capacitance(&self, cap_chilled: f64, cap_condenser: f64) -> ChillerParams {
        ChillerParams {
            a_coef: self.a_coef,
            b_coef: self.b_coef,
            c_coef: self.c_coef,
            d_coef: self.d_coef,
            cap_chilled,
            cap_condenser,
        }
    }
}

/// The fitted coefficient set for a plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub chiller: ChillerCoefficients,
    pub tower: TowerParams,
    /// Condenser pumps (c11, c12, a1, a2) and tower fans (c13, c14).
    pub condenser: PumpFanParams,
    /// Chilled-water pumps; the fan gains are unused.
    pub chilled: PumpFanParams,
}

impl Calibration {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&read(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.chiller.with_capacitance(1.0, 1.0).validate()?;
        self.tower.validate()?;
        // Zero running chillers is a legal state, so the interaction factor
        // must stay positive down to it.
        self.condenser.validate(MAX_PUMPS, 0)?;
        self.chilled.validate(MAX_PUMPS, 0)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CalibrationSource {
    File(PathBuf),
    Inline(Calibration),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Equipment {
    pub chillers: usize,
    pub towers: usize,
    #[serde(default = "one")]
    pub fans_per_tower: usize,
    pub chilled_pumps: usize,
    pub condenser_pumps: usize,
    pub heat_exchangers: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ratings {
    /// Compressor power at full capacity, kW per chiller.
    pub chiller_rated_power: f64,
    /// Freeze protection: evaporator water never leaves colder than this, K.
    pub chiller_min_leaving_temp: f64,
    /// Lowest frequency a running pump is driven at, Hz.
    pub pump_min_freq: f64,
    pub pump_max_freq: f64,
    pub fan_max_freq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pipe {
    /// m
    pub length: f64,
    /// m
    pub diameter: f64,
    /// Darcy friction factor.
    pub friction: f64,
}

impl Pipe {
    pub fn area(&self) -> f64 {
        0.25 * std::f64::consts::PI * self.diameter * self.diameter
    }

    pub fn volume(&self) -> f64 {
        self.area() * self.length
    }

    /// Quadratic loss coefficient: Δp = k·ṁ², Pa per (kg/s)².
    pub fn loss_coefficient(&self) -> f64 {
        let a = self.area();
        self.friction * self.length / self.diameter
            / (2.0 * crate::units::WATER_DENSITY * a * a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hydraulics {
    /// Junction volume per node, m³; pipe volumes are added to the node
    /// they discharge into.
    pub volumes: BTreeMap<String, f64>,
    pub pipes: BTreeMap<String, Pipe>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatExchanger {
    /// Effectiveness of a single free-cooling unit.
    pub effectiveness: f64,
}

impl HeatExchanger {
    /// Effectiveness of `n` identical units in series on the same streams.
    pub fn bank_effectiveness(&self, n: usize) -> f64 {
        1.0 - (1.0 - self.effectiveness).powi(n as i32)
    }
}

/// PID gains; saturation bounds come from the equipment ratings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopGains {
    pub kp: f64,
    pub ki: f64,
    #[serde(default)]
    pub kd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Control {
    /// Chiller bank: leaving-temperature error (K) to per-chiller load (kW).
    pub chiller: LoopGains,
    /// Chilled pumps: differential-pressure error (psi) to frequency (Hz).
    pub chilled_pump: LoopGains,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeatherSource {
    /// Uses the `dry_bulb` and `rel_humidity` parameters.
    Constant,
    Series { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameter {
    pub value: f64,
    pub min: f64,
    pub max: f64,
}

impl Parameter {
    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Simulation {
    /// Simulated seconds per environment step.
    pub step_seconds: f64,
    /// Upper bound on the integration substep, s.
    pub max_substep: f64,
    /// Time of day at reset, s after midnight.
    #[serde(default)]
    pub start_time: f64,
    /// Steady-state test: max per-node change per step, K.
    pub steady_tolerance: f64,
    pub steady_max_steps: usize,
    pub temp_min: f64,
    pub temp_max: f64,
    /// Environment steps run at default controls inside reset.
    #[serde(default)]
    pub warmup_steps: usize,
}

/// Document form, before file references are resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantDocument {
    equipment: Equipment,
    calibration: CalibrationSource,
    ratings: Ratings,
    hydraulics: Hydraulics,
    heat_exchanger: HeatExchanger,
    control: Control,
    load: LoadProfile,
    weather: WeatherSource,
    parameters: BTreeMap<String, Parameter>,
    simulation: Simulation,
}

/// A fully resolved plant description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    pub equipment: Equipment,
    pub calibration: Calibration,
    pub ratings: Ratings,
    pub hydraulics: Hydraulics,
    pub heat_exchanger: HeatExchanger,
    pub control: Control,
    pub load: LoadProfile,
    pub weather: Option<WeatherSeries>,
    pub parameters: BTreeMap<String, Parameter>,
    pub simulation: Simulation,
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn resolve(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

impl PlantConfig {
    /// Parses a document; relative file references resolve against `base`.
    pub fn from_toml_str(text: &str, base: Option<&Path>) -> Result<Self, ConfigError> {
        let doc: PlantDocument = toml::from_str(text)?;
        let calibration = match doc.calibration {
            CalibrationSource::Inline(c) => c,
            CalibrationSource::File(p) => Calibration::from_file(&resolve(base, &p))?,
        };
        let weather = match doc.weather {
            WeatherSource::Constant => None,
            WeatherSource::Series { path } => Some(load_weather_file(&resolve(base, &path))?),
        };
        let config = Self {
            equipment: doc.equipment,
            calibration,
            ratings: doc.ratings,
            hydraulics: doc.hydraulics,
            heat_exchanger: doc.heat_exchanger,
            control: doc.control,
            load: doc.load,
            weather,
            parameters: doc.parameters,
            simulation: doc.simulation,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&read(path)?, path.parent())
    }

    /// Serializes the resolved configuration (calibration and weather
    /// inline), e.g. for hashing or echoing into outputs.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        let e = &self.equipment;
        if !(1..=MAX_CHILLERS).contains(&e.chillers) {
            return invalid(format!("chillers must be in 1..={MAX_CHILLERS}, got {}", e.chillers));
        }
        if !(1..=MAX_TOWERS).contains(&e.towers) {
            return invalid(format!("towers must be in 1..={MAX_TOWERS}, got {}", e.towers));
        }
        if e.fans_per_tower == 0 {
            return invalid("fans_per_tower must be at least 1".into());
        }
        for (name, n, max) in [
            ("chilled_pumps", e.chilled_pumps, MAX_PUMPS),
            ("condenser_pumps", e.condenser_pumps, MAX_PUMPS),
            ("heat_exchangers", e.heat_exchangers, MAX_HEAT_EXCHANGERS),
        ] {
            if !(1..=max).contains(&n) {
                return invalid(format!("{name} must be in 1..={max}, got {n}"));
            }
        }
        self.calibration.validate()?;

        let r = &self.ratings;
        for (name, v) in [
            ("chiller_rated_power", r.chiller_rated_power),
            ("pump_max_freq", r.pump_max_freq),
            ("fan_max_freq", r.fan_max_freq),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        let c = self.calibration.chiller;
        let idle = c.a_coef / c.c_coef;
        if !(r.chiller_rated_power > idle) {
            return invalid(format!(
                "chiller_rated_power {} kW must exceed the idle power {idle} kW",
                r.chiller_rated_power
            ));
        }
        if !(r.pump_min_freq > 0.0 && r.pump_min_freq < r.pump_max_freq) {
            return invalid(format!(
                "pump_min_freq {} must be in (0, pump_max_freq)",
                r.pump_min_freq
            ));
        }
        if !(r.chiller_min_leaving_temp > 273.15) {
            return invalid("chiller_min_leaving_temp must be above freezing".into());
        }

        for node in CHILLED_NODES.iter().chain(&CONDENSER_NODES) {
            match self.hydraulics.volumes.get(*node) {
                Some(v) if *v > 0.0 => {}
                Some(v) => return invalid(format!("volume of `{node}` must be positive, got {v}")),
                None => return invalid(format!("missing volume for node `{node}`")),
            }
        }
        for name in self.hydraulics.volumes.keys() {
            if !CHILLED_NODES.contains(&name.as_str()) && !CONDENSER_NODES.contains(&name.as_str())
            {
                return invalid(format!("unknown node `{name}`"));
            }
        }
        for pipe in PIPES {
            match self.hydraulics.pipes.get(pipe) {
                Some(p) if p.length > 0.0 && p.diameter > 0.0 && p.friction >= 0.0 => {}
                Some(_) => return invalid(format!("pipe `{pipe}` needs positive geometry")),
                None => return invalid(format!("missing pipe `{pipe}`")),
            }
        }
        for name in self.hydraulics.pipes.keys() {
            if !PIPES.contains(&name.as_str()) {
                return invalid(format!("unknown pipe `{name}`"));
            }
        }

        let hx = self.heat_exchanger.effectiveness;
        if !(hx >= 0.0 && hx < 1.0) {
            return invalid(format!("heat exchanger effectiveness must be in [0, 1), got {hx}"));
        }
        for (name, g) in [
            ("chiller", self.control.chiller),
            ("chilled_pump", self.control.chilled_pump),
        ] {
            if !(g.kp >= 0.0 && g.ki >= 0.0 && g.kd >= 0.0) {
                return invalid(format!("{name} gains must be nonnegative"));
            }
        }
        self.load.validate().map_err(ConfigError::Invalid)?;

        for id in PARAMETERS {
            if !self.parameters.contains_key(id) {
                return invalid(format!("missing parameter `{id}`"));
            }
        }
        for (id, p) in &self.parameters {
            if !PARAMETERS.contains(&id.as_str()) {
                return invalid(format!("unknown parameter `{id}`"));
            }
            if !(p.min <= p.max) || !p.contains(p.value) {
                return invalid(format!(
                    "parameter `{id}` = {} outside its limits [{}, {}]",
                    p.value, p.min, p.max
                ));
            }
        }
        let rh = self.parameters[REL_HUMIDITY];
        if rh.min < 0.0 || rh.max > 1.0 {
            return invalid("rel_humidity limits must lie in [0, 1]".into());
        }
        if self.parameters[LOAD_SCALE].min < 0.0 {
            return invalid("load_scale must be nonnegative".into());
        }

        let s = &self.simulation;
        if !(s.step_seconds > 0.0) || !(s.max_substep > 0.0) {
            return invalid("step_seconds and max_substep must be positive".into());
        }
        if !(s.steady_tolerance > 0.0) || s.steady_max_steps == 0 {
            return invalid("steady-state tolerance and step cap must be positive".into());
        }
        if !(s.temp_min < s.temp_max) {
            return invalid("temp_min must be below temp_max".into());
        }
        Ok(())
    }

    pub fn parameter(&self, id: &str) -> Option<f64> {
        self.parameters.get(id).map(|p| p.value)
    }

    /// Sets a parameter, refusing values outside its declared limits.
    pub fn set_parameter(&mut self, id: &str, value: f64) -> Result<(), ConfigError> {
        let p = self
            .parameters
            .get_mut(id)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown parameter `{id}`")))?;
        if !p.contains(value) {
            return Err(ConfigError::Invalid(format!(
                "parameter `{id}` = {value} outside its limits [{}, {}]",
                p.min, p.max
            )));
        }
        p.value = value;
        Ok(())
    }

    /// Outdoor air at simulation time `t`.
    pub fn weather_at(&self, t: f64) -> Result<WeatherPoint, ConfigError> {
        let offset = self.parameters[DRY_BULB_OFFSET].value;
        let base = match &self.weather {
            None => WeatherPoint::from_dry_bulb(
                self.parameters[DRY_BULB].value,
                self.parameters[REL_HUMIDITY].value,
            ),
            Some(series) => crate::weather::sample(series, t)?,
        };
        if offset == 0.0 {
            Ok(base)
        } else {
            Ok(WeatherPoint::from_dry_bulb(
                base.t_dry_bulb + offset,
                base.rel_humidity,
            ))
        }
    }

    /// Building load (kW) at time `t` under `weather`.
    pub fn load_at(&self, weather: &WeatherPoint, t: f64) -> f64 {
        self.parameters[LOAD_SCALE].value * crate::weather::load_at(&self.load, weather, t)
    }

    /// Total water volume of each node including the pipes discharging into
    /// it, m³.
    pub fn node_volume(&self, node: &str) -> f64 {
        let pipes = &self.hydraulics.pipes;
        let extra = match node {
            "chw_return" => pipes["distribution"].volume(),
            "chw_bank" => pipes["evaporator_branch"].volume() * self.equipment.chillers as f64,
            "chw_supply" => pipes["supply_main"].volume(),
            "cw_return" => pipes["condenser_branch"].volume() * self.equipment.chillers as f64,
            "cw_basin" => pipes["tower_riser"].volume(),
            _ => 0.0,
        };
        self.hydraulics.volumes[node] + extra
    }
}
