//! Steady-state sweeps over a boundary parameter, a control or an
//! equipment count, compared across control variants.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use coolplant_core::config::{MAX_CHILLERS, MAX_HEAT_EXCHANGERS, MAX_PUMPS, MAX_TOWERS};
use coolplant_core::facility::{apply_controls, boundary_at};
use coolplant_core::ids::{self, ControlSpec};
use coolplant_core::network::{build_network, solve_steady, PlantControls};
use coolplant_core::units::kelvin_to_fahrenheit;
use coolplant_core::{ControlMap, PlantConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{io_error, BenchError};
use crate::table::{num, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub label: String,
    #[serde(default)]
    pub controls: ControlMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Plant configuration, relative to the spec file.
    pub plant: PathBuf,
    /// A configuration parameter, a control id, or `equipment.<count>`.
    pub axis: String,
    pub range: [f64; 2],
    pub points: usize,
    #[serde(default)]
    pub variants: Vec<Variant>,
    /// Parameter overrides applied at every point.
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

impl SweepSpec {
    /// Reads a spec and resolves its plant path against the file location.
    pub fn from_file(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        let mut spec: SweepSpec = toml::from_str(&text)?;
        if spec.plant.is_relative() {
            if let Some(dir) = path.parent() {
                spec.plant = dir.join(&spec.plant);
            }
        }
        Ok(spec)
    }

    pub fn values(&self) -> Vec<f64> {
        let [a, b] = self.range;
        let n = self.points;
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    fn variants(&self) -> Vec<Variant> {
        if self.variants.is_empty() {
            vec![Variant {
                label: "default".into(),
                controls: ControlMap::new(),
            }]
        } else {
            self.variants.clone()
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Axis<'a> {
    Parameter(&'a str),
    Control(&'static ControlSpec),
    Equipment(&'a str, usize),
}

fn axis<'a>(spec: &'a SweepSpec, config: &PlantConfig) -> Result<Axis<'a>, BenchError> {
    let bad = |m: String| BenchError::Sweep(m);
    let a = if let Some(field) = spec.axis.strip_prefix("equipment.") {
        let max = match field {
            "chillers" => MAX_CHILLERS,
            "towers" => MAX_TOWERS,
            "chilled_pumps" | "condenser_pumps" => MAX_PUMPS,
            "heat_exchangers" => MAX_HEAT_EXCHANGERS,
            _ => return Err(bad(format!("unknown equipment count `{field}`"))),
        };
        Axis::Equipment(field, max)
    } else if let Some(c) = ids::control_spec(&spec.axis) {
        Axis::Control(c)
    } else if config.parameters.contains_key(&spec.axis) {
        Axis::Parameter(&spec.axis)
    } else {
        return Err(bad(format!("`{}` is not a parameter, control or equipment count", spec.axis)));
    };
    Ok(a)
}

/// Checks point count, range limits and integrality.
pub fn validate(spec: &SweepSpec, config: &PlantConfig) -> Result<(), BenchError> {
    let bad = |m: String| Err(BenchError::Sweep(m));
    if spec.points < 2 {
        return bad("a sweep needs at least two points".into());
    }
    if spec.range.iter().any(|v| !v.is_finite()) {
        return bad("range must be finite".into());
    }
    let (lo, hi, integer) = match axis(spec, config)? {
        Axis::Parameter(id) => {
            let p = config.parameters[id];
            (p.min, p.max, false)
        }
        Axis::Control(c) => (c.min, c.max, c.integer),
        Axis::Equipment(_, max) => (0.0, max as f64, true),
    };
    for v in spec.values() {
        if v < lo || v > hi {
            return bad(format!("{} = {v} lies outside [{lo}, {hi}]", spec.axis));
        }
        if integer && (v - v.round()).abs() > 1e-9 {
            return bad(format!("{} takes integer values, the grid has {v}", spec.axis));
        }
    }
    for (id, v) in &spec.parameters {
        let mut c = config.clone();
        c.set_parameter(id, *v)?;
    }
    for variant in spec.variants() {
        for id in variant.controls.keys() {
            if ids::control_spec(id).is_none() {
                return bad(format!("variant `{}` sets unknown control `{id}`", variant.label));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub variant: String,
    pub converged: bool,
    pub iterations: usize,
    /// kW
    pub total_power: f64,
    pub compressor_power: f64,
    pub chilled_pump_power: f64,
    pub condenser_pump_power: f64,
    pub fan_power: f64,
    /// °F
    pub supply_temp: f64,
    pub return_temp: f64,
    pub building_load: f64,
    pub dry_bulb: f64,
    pub wet_bulb: f64,
}

pub const COLUMNS: [&str; 14] = [
    "value",
    "variant",
    "converged",
    "iterations",
    "total_power_kw",
    "compressor_power_kw",
    "chilled_pump_power_kw",
    "condenser_pump_power_kw",
    "fan_power_kw",
    "supply_temp_f",
    "return_temp_f",
    "building_load_kw",
    "dry_bulb_f",
    "wet_bulb_f",
];

fn point(base: &PlantConfig, spec: &SweepSpec, value: f64, variant: &Variant) -> Result<SweepRow, BenchError> {
    let mut cfg = base.clone();
    for (id, v) in &spec.parameters {
        cfg.set_parameter(id, *v)?;
    }
    let mut controls = variant.controls.clone();
    match axis(spec, base)? {
        Axis::Parameter(id) => cfg.set_parameter(id, value)?,
        Axis::Control(c) => {
            controls.insert(c.id.to_string(), value);
        }
        Axis::Equipment(field, _) => {
            let n = value.round() as usize;
            let e = &mut cfg.equipment;
            match field {
                "chillers" => e.chillers = n,
                "towers" => e.towers = n,
                "chilled_pumps" => e.chilled_pumps = n,
                "condenser_pumps" => e.condenser_pumps = n,
                _ => e.heat_exchangers = n,
            }
            cfg.validate()?;
        }
    }
    let (topology, state) = build_network(&cfg)?;
    let boundary = boundary_at(&cfg, 0.0)?;
    let (pc, _) = apply_controls(&PlantControls::default(), &controls, &cfg)?;
    let out = solve_steady(&topology, &cfg, &state, &pc, &boundary)?;
    let s = &out.state;
    let temp = |node: &str| kelvin_to_fahrenheit(s.temperature(&topology, node).unwrap_or(f64::NAN));
    Ok(SweepRow {
        value,
        variant: variant.label.clone(),
        converged: out.converged,
        iterations: out.iterations,
        total_power: s.total_power(),
        compressor_power: s.compressor_power(),
        chilled_pump_power: s.chilled_pump_power,
        condenser_pump_power: s.condenser_pump_power,
        fan_power: s.fan_power,
        supply_temp: temp("chw_supply"),
        return_temp: temp("chw_return"),
        building_load: s.building_load,
        dry_bulb: kelvin_to_fahrenheit(boundary.weather.t_dry_bulb),
        wet_bulb: kelvin_to_fahrenheit(boundary.weather.t_wet_bulb),
    })
}

/// Solves every (point, variant) to steady state, in parallel. Rows are
/// ordered by point, then variant. Unconverged points are kept and flagged.
pub fn fidelity_sweep(spec: &SweepSpec, config: &PlantConfig) -> Result<Vec<SweepRow>, BenchError> {
    validate(spec, config)?;
    let variants = spec.variants();
    let jobs: Vec<(f64, &Variant)> = spec
        .values()
        .into_iter()
        .flat_map(|v| variants.iter().map(move |var| (v, var)))
        .collect();
    jobs.par_iter().map(|(v, var)| point(config, spec, *v, var)).collect()
}

pub fn to_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&COLUMNS);
    for r in rows {
        t.push(vec![
            num(r.value),
            r.variant.clone(),
            r.converged.to_string(),
            r.iterations.to_string(),
            num(r.total_power),
            num(r.compressor_power),
            num(r.chilled_pump_power),
            num(r.condenser_pump_power),
            num(r.fan_power),
            num(r.supply_temp),
            num(r.return_temp),
            num(r.building_load),
            num(r.dry_bulb),
            num(r.wet_bulb),
        ]);
    }
    t
}

/// Rows of one variant, in sweep order.
pub fn series<'a>(rows: &'a [SweepRow], variant: &str) -> Vec<&'a SweepRow> {
    rows.iter().filter(|r| r.variant == variant).collect()
}

/// Number of strict sign changes in a sequence, ignoring exact zeros.
pub fn sign_changes(xs: &[f64]) -> usize {
    let signs: Vec<f64> = xs.iter().filter(|x| **x != 0.0).map(|x| x.signum()).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Declarative description of how to plot a sweep table.
pub fn plot_manifest(spec: &SweepSpec, data_file: &str) -> serde_json::Value {
    serde_json::json!({
        "data": data_file,
        "kind": "line",
        "x": "value",
        "x_label": spec.axis,
        "series": "variant",
        "panels": [
            { "y": "total_power_kw", "label": "total power [kW]" },
            { "y": "compressor_power_kw", "label": "compressor power [kW]" },
            { "y": "supply_temp_f", "label": "chilled-water supply temperature [°F]" }
        ]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_sign_changes() {
        assert_eq!(sign_changes(&[-1.0, -2.0, 0.0, 3.0, 1.0]), 1);
        assert_eq!(sign_changes(&[-1.0, 1.0, -1.0]), 2);
        assert_eq!(sign_changes(&[1.0, 2.0]), 0);
    }
}
