use std::path::{Path, PathBuf};

use proptest::prelude::*;

use coolplant_core::config::PlantConfig;
use coolplant_core::facility::boundary_at;
use coolplant_core::weather::*;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn shipped_weather_file_loads() {
    let series = load_weather_file(&root().join("configs/weather/summer_day.csv")).unwrap();
    assert_eq!(series.len(), 25);
    for (_, p) in series.samples() {
        assert!(p.check().is_ok());
    }
    assert_eq!(series.span(), (0.0, 86400.0));
}

#[test]
fn series_config_drives_the_boundary() {
    let text = std::fs::read_to_string(root().join("configs/plant.toml"))
        .unwrap()
        .replace("kind = \"constant\"", "kind = \"series\"\npath = \"weather/summer_day.csv\"");
    let cfg = PlantConfig::from_toml_str(&text, Some(&root().join("configs"))).unwrap();
    let noon = boundary_at(&cfg, 0.0).unwrap();
    let afternoon = boundary_at(&cfg, 3.0 * 3600.0).unwrap();
    assert!(afternoon.weather.t_dry_bulb > noon.weather.t_dry_bulb);
    assert!(afternoon.load > noon.load);
    assert!(noon.load > 0.0);
}

#[test]
fn bad_config_is_rejected() {
    let text = std::fs::read_to_string(root().join("configs/plant.toml")).unwrap();
    for (from, to) in [
        ("chillers = 3", "chillers = 4"),
        ("towers = 2", "towers = 0"),
        ("dry_bulb = { value = 295.15", "dry_bulb = { value = 400.0"),
        ("calibration/default.toml", "calibration/missing.toml"),
    ] {
        let broken = text.replace(from, to);
        assert!(PlantConfig::from_toml_str(&broken, Some(&root().join("configs"))).is_err(), "{to}");
    }
}

#[test]
fn echo_is_stable() {
    let cfg = PlantConfig::from_file(&root().join("configs/plant.toml")).unwrap();
    assert_eq!(cfg.to_toml(), cfg.clone().to_toml());
    assert!(!cfg.to_toml().is_empty());
}

fn point() -> impl Strategy<Value = WeatherPoint> {
    (250.0..320.0f64, 0.05..1.0f64).prop_map(|(t, rh)| WeatherPoint::from_dry_bulb(t, rh))
}

proptest! {
    #[test]
    fn interpolation_keeps_wet_bulb_below_dry_bulb(a in point(), b in point(), t in 0.0..1.0f64) {
        let series = WeatherSeries::new(vec![(0.0, a), (1.0, b)]).unwrap();
        let p = sample(&series, t).unwrap();
        prop_assert!(p.t_wet_bulb <= p.t_dry_bulb);
        prop_assert!(p.check().is_ok());
    }

    #[test]
    fn load_is_never_negative(
        schedule in proptest::collection::vec(0.0..2000.0f64, 1..24),
        gain in 0.0..100.0f64,
        reference in 270.0..310.0f64,
        w in point(),
        t in -1e6..1e6f64,
    ) {
        let profile = LoadProfile { schedule, dry_bulb_gain: gain, reference_temp: reference };
        prop_assert!(load_at(&profile, &w, t) >= 0.0);
    }
}
