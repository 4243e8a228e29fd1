use std::path::Path;

use coolplant_core::config::PlantConfig;
use coolplant_core::facility::{ControlMap, FacilitySim};
use coolplant_core::ids;

fn config() -> PlantConfig {
    PlantConfig::from_file(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/plant.toml"))).unwrap()
}

fn map(pairs: &[(&str, f64)]) -> ControlMap {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn reset_reports_default_chiller_count() {
    let mut sim = FacilitySim::new(config()).unwrap();
    let m = sim.reset(config()).unwrap();
    assert_eq!(m[ids::CHILLERS_ENABLED], 1.0);
    assert_eq!(sim.controls().chillers_enabled, 1);
}

#[test]
fn reset_is_deterministic() {
    let mut a = FacilitySim::new(config()).unwrap();
    let mut b = FacilitySim::new(config()).unwrap();
    assert_eq!(a.reset(config()).unwrap(), b.reset(config()).unwrap());
    let step = map(&[(ids::CHILLERS_ENABLED, 2.0)]);
    assert_eq!(a.step(&step).unwrap(), b.step(&step).unwrap());
}

#[test]
fn measurement_set_matches_chiller_count() {
    for n in 1..=3 {
        let mut cfg = config();
        cfg.equipment.chillers = n;
        let mut sim = FacilitySim::new(cfg).unwrap();
        let expected: Vec<String> = ids::observable_ids(n);
        let got: Vec<String> = sim.measurements().keys().cloned().collect();
        assert_eq!(got, expected);
        let after: Vec<String> = sim.step(&ControlMap::new()).unwrap().keys().cloned().collect();
        assert_eq!(after, expected);
        for i in 0..n {
            assert!(sim.measurements().contains_key(&ids::chiller_id(i, ids::COMPRESSOR_POWER)));
        }
    }
}

#[test]
fn power_terms_add_up() {
    let mut sim = FacilitySim::new(config()).unwrap();
    for n in [0.0, 1.0, 3.0] {
        let m = sim.step(&map(&[(ids::CHILLERS_ENABLED, n)])).unwrap();
        let compressors: f64 = (0..3).map(|i| m[&ids::chiller_id(i, ids::COMPRESSOR_POWER)]).sum();
        let aux: f64 = ids::AUXILIARY_POWER.iter().map(|id| m[*id]).sum();
        assert!((compressors + aux - sim.total_power()).abs() < 1e-9);
        for id in ids::AUXILIARY_POWER {
            assert!(m[id] >= 0.0);
        }
    }
}

#[test]
fn disabled_chillers_report_zero() {
    let mut sim = FacilitySim::new(config()).unwrap();
    let m = sim.step(&ControlMap::new()).unwrap();
    for i in 1..3 {
        assert_eq!(m[&ids::chiller_id(i, ids::COMPRESSOR_POWER)], 0.0);
        assert_eq!(m[&ids::chiller_id(i, ids::CHILLED_WATER_FLOW)], 0.0);
    }
}

#[test]
fn out_of_range_controls_are_clamped_and_flagged() {
    let mut sim = FacilitySim::new(config()).unwrap();
    sim.step(&map(&[(ids::CHILLER_LEAVING_TEMP, 10.0), (ids::CHILLERS_ENABLED, 1.4)])).unwrap();
    assert_eq!(sim.clamped(), [ids::CHILLER_LEAVING_TEMP.to_string(), ids::CHILLERS_ENABLED.to_string()]);
    assert_eq!(sim.controls().chillers_enabled, 1);
    let wire = coolplant_core::facility::controls_to_map(sim.controls());
    assert!((wire[ids::CHILLER_LEAVING_TEMP] - 40.0).abs() < 1e-9);
    // Half rounds away from zero.
    sim.step(&map(&[(ids::CHILLERS_ENABLED, 1.5)])).unwrap();
    assert_eq!(sim.controls().chillers_enabled, 2);
    assert!(sim.step(&map(&[("bogus", 1.0)])).is_err());
    assert!(sim.step(&map(&[(ids::DIFF_PRESSURE, f64::NAN)])).is_err());
}

#[test]
fn holding_controls_at_equilibrium_changes_nothing() {
    let mut sim = FacilitySim::new(config()).unwrap();
    for _ in 0..60 {
        sim.step(&ControlMap::new()).unwrap();
    }
    let a = sim.measurements();
    let b = sim.step(&ControlMap::new()).unwrap();
    for (k, v) in &a {
        assert!((v - b[k]).abs() <= 1e-3 * v.abs().max(1.0), "{k}: {v} vs {}", b[k]);
    }
}

/// The chiller curve itself does not depend on water temperatures; a warmer
/// setpoint saves power because warmer return water lets the free-cooling
/// exchanger carry part of the load, and because the loop first has to warm.
#[test]
fn warmer_setpoint_saves_compressor_power() {
    let settle = |sp: f64| {
        let mut sim = FacilitySim::new(config()).unwrap();
        for _ in 0..60 {
            sim.step(&map(&[(ids::CHILLER_LEAVING_TEMP, sp)])).unwrap();
        }
        sim
    };
    let (cold, warm) = (settle(56.0), settle(66.0));
    assert!(warm.state().compressor_power() < cold.state().compressor_power());

    let mut held = settle(48.0);
    let mut raised = held.clone();
    // The loop controller overshoots later while it catches the warmer loop,
    // so only the immediate response is one-signed.
    for _ in 0..2 {
        held.step(&ControlMap::new()).unwrap();
        raised.step(&map(&[(ids::CHILLER_LEAVING_TEMP, 52.0)])).unwrap();
        assert!(raised.state().compressor_power() < held.state().compressor_power());
    }
}

#[test]
fn leaving_temperature_tracks_setpoint() {
    for sp in [44.0, 52.0] {
        let mut sim = FacilitySim::new(config()).unwrap();
        let step = map(&[(ids::CHILLER_LEAVING_TEMP, sp)]);
        let mut errors = Vec::new();
        for _ in 0..30 {
            let m = sim.step(&step).unwrap();
            errors.push((m[ids::CHILLER_BANK_LEAVING_TEMP] - sp).abs());
        }
        let settle = errors.iter().position(|e| *e <= 0.5).expect("never within 0.5 °F");
        for w in errors[1..=settle.max(1)].windows(2) {
            assert!(w[1] <= w[0], "sp {sp}: {errors:?}");
        }
        assert!(errors[settle..].iter().all(|e| *e <= 0.5), "sp {sp}: {errors:?}");
    }
}

#[test]
fn parameters_change_the_boundary() {
    let mut sim = FacilitySim::new(config()).unwrap();
    sim.set_parameter("dry_bulb", 305.0).unwrap();
    let m = sim.step(&ControlMap::new()).unwrap();
    assert!((m[ids::DRY_BULB] - coolplant_core::units::kelvin_to_fahrenheit(305.0)).abs() < 1e-9);
    assert!(sim.set_parameter("dry_bulb", 400.0).is_err());
    assert!(sim.set_parameter("nope", 1.0).is_err());
}
