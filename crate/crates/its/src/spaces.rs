//! Conversions between the agent's normalized vectors and the simulator's
//! id maps.

use std::collections::BTreeMap;

use coolplant_core::ids::{self, ControlSpec};
use coolplant_core::{ControlMap, MeasurementMap, PlantConfig};
use serde::{Deserialize, Serialize};

use crate::constraint::Status;
use crate::error::EnvError;

/// What the agent sees after each reset or step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Plant observables; per-chiller groups padded to the frame size.
    pub values: BTreeMap<String, f64>,
    /// One entry per chiller slot: true for installed chillers.
    pub mask: Vec<bool>,
    /// Status of every constraint of the task, by constrained id.
    pub violations: BTreeMap<String, Status>,
    /// Task-specific fields (targets, margins, remaining steps).
    pub task: BTreeMap<String, f64>,
    /// Facility configuration and action-space echo.
    pub config: BTreeMap<String, f64>,
}

/// Looks up the table entries for `controls`, in canonical table order.
pub fn control_specs(controls: &[String]) -> Result<Vec<&'static ControlSpec>, EnvError> {
    for id in controls {
        if ids::control_spec(id).is_none() {
            return Err(EnvError::IncompatibleId {
                id: id.clone(),
                message: "not a control id".into(),
            });
        }
    }
    Ok(ids::CONTROLS
        .iter()
        .filter(|c| controls.iter().any(|id| id == c.id))
        .collect())
}

/// Affine map from [-1, 1] onto each control's range. Components outside
/// [-1, 1] are clamped; integer controls round half away from zero.
pub fn convert_action(action: &[f64], specs: &[&ControlSpec]) -> Result<ControlMap, EnvError> {
    if action.len() != specs.len() {
        return Err(EnvError::Arity {
            expected: specs.len(),
            got: action.len(),
        });
    }
    let mut map = ControlMap::new();
    for (index, (a, spec)) in action.iter().zip(specs).enumerate() {
        if !a.is_finite() {
            return Err(EnvError::NonFiniteAction { index });
        }
        let u = (a.clamp(-1.0, 1.0) + 1.0) / 2.0;
        let mut v = spec.min + u * (spec.max - spec.min);
        if spec.integer {
            v = v.round();
        }
        map.insert(spec.id.to_string(), v.clamp(spec.min, spec.max));
    }
    Ok(map)
}

/// Inverse of [`convert_action`] for values inside the ranges.
pub fn normalize_controls(controls: &ControlMap, specs: &[&ControlSpec]) -> Result<Vec<f64>, EnvError> {
    specs
        .iter()
        .map(|s| {
            let v = controls
                .get(s.id)
                .ok_or_else(|| EnvError::MissingId(s.id.to_string()))?;
            Ok((2.0 * (v - s.min) / (s.max - s.min) - 1.0).clamp(-1.0, 1.0))
        })
        .collect()
}

/// Pads per-chiller groups to `max_chillers` with zeros and builds the
/// slot mask.
pub fn convert_measurements(
    measurements: &MeasurementMap,
    installed: usize,
    max_chillers: usize,
) -> (BTreeMap<String, f64>, Vec<bool>) {
    let mut values = measurements.clone();
    for i in installed..max_chillers {
        for q in ids::PER_CHILLER {
            values.insert(ids::chiller_id(i, q), 0.0);
        }
    }
    let mask = (0..max_chillers).map(|i| i < installed).collect();
    (values, mask)
}

/// Equipment counts, parameter values and the action ranges.
pub fn config_echo(config: &PlantConfig, specs: &[&ControlSpec], max_chillers: usize) -> BTreeMap<String, f64> {
    let e = &config.equipment;
    let mut echo = BTreeMap::new();
    for (k, v) in [
        ("chillers", e.chillers),
        ("towers", e.towers),
        ("fans_per_tower", e.fans_per_tower),
        ("chilled_pumps", e.chilled_pumps),
        ("condenser_pumps", e.condenser_pumps),
        ("heat_exchangers", e.heat_exchangers),
    ] {
        echo.insert(format!("equipment.{k}"), v as f64);
    }
    echo.insert("frame.max_chillers".into(), max_chillers as f64);
    for (id, p) in &config.parameters {
        echo.insert(format!("parameter.{id}"), p.value);
    }
    for s in specs {
        echo.insert(format!("action.{}.min", s.id), s.min);
        echo.insert(format!("action.{}.max", s.id), s.max);
    }
    echo
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chillers() -> Vec<&'static ControlSpec> {
        control_specs(&[ids::CHILLERS_ENABLED.to_string()]).unwrap()
    }

    #[test]
    fn endpoints_and_rounding() {
        let s = chillers();
        let at = |a: f64| convert_action(&[a], &s).unwrap()[ids::CHILLERS_ENABLED];
        assert_eq!(at(-1.0), 0.0);
        assert_eq!(at(1.0), 3.0);
        assert_eq!(at(0.0), 2.0);
        assert_eq!(at(-5.0), 0.0);
    }

    #[test]
    fn arity_and_finiteness() {
        let s = chillers();
        assert!(matches!(convert_action(&[], &s), Err(EnvError::Arity { .. })));
        assert!(matches!(
            convert_action(&[f64::NAN], &s),
            Err(EnvError::NonFiniteAction { index: 0 })
        ));
    }

    #[test]
    fn canonical_order_and_roundtrip() {
        let ids_in = vec![ids::DIFF_PRESSURE.to_string(), ids::CHILLERS_ENABLED.to_string()];
        let s = control_specs(&ids_in).unwrap();
        assert_eq!(s[0].id, ids::CHILLERS_ENABLED);
        let mut m = ControlMap::new();
        m.insert(ids::CHILLERS_ENABLED.into(), 1.0);
        m.insert(ids::DIFF_PRESSURE.into(), 12.5);
        let a = normalize_controls(&m, &s).unwrap();
        let back = convert_action(&a, &s).unwrap();
        assert_eq!(back[ids::CHILLERS_ENABLED], 1.0);
        assert!((back[ids::DIFF_PRESSURE] - 12.5).abs() < 1e-12);
    }

    #[test]
    fn padding_mask() {
        let mut m = MeasurementMap::new();
        m.insert(ids::chiller_id(0, ids::COMPRESSOR_POWER), 5.0);
        let (v, mask) = convert_measurements(&m, 1, 3);
        assert_eq!(mask, vec![true, false, false]);
        assert_eq!(v[&ids::chiller_id(2, ids::COMPRESSOR_POWER)], 0.0);
        assert_eq!(v[&ids::chiller_id(0, ids::COMPRESSOR_POWER)], 5.0);
    }
}
