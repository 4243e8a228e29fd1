use std::path::Path;

use proptest::prelude::*;

use coolplant_core::config::PlantConfig;
use coolplant_core::facility::{apply_controls, boundary_at, ControlMap, FacilitySim};
use coolplant_core::ids;
use coolplant_core::network::*;
use coolplant_core::SimError;

fn config() -> PlantConfig {
    PlantConfig::from_file(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/plant.toml"))).unwrap()
}

fn controls(n: usize) -> PlantControls {
    PlantControls {
        chillers_enabled: n,
        ..PlantControls::default()
    }
}

fn steady(cfg: &PlantConfig, c: &PlantControls) -> SteadyOutcome {
    let (topo, st) = build_network(cfg).unwrap();
    let b = boundary_at(cfg, 0.0).unwrap();
    solve_steady(&topo, cfg, &st, c, &b).unwrap()
}

fn supply(cfg: &PlantConfig, out: &SteadyOutcome) -> f64 {
    let (topo, _) = build_network(cfg).unwrap();
    out.state.temperature(&topo, "chw_supply").unwrap()
}

#[test]
fn topology_has_parallel_branches() {
    let cfg = config();
    let (topo, state) = build_network(&cfg).unwrap();
    assert_eq!(topo.chillers, 3);
    let evaps: Vec<_> = (0..3)
        .map(|i| topo.edges_with(Attachment::Evaporator(i)).next().unwrap().clone())
        .collect();
    assert!(evaps.iter().all(|e| e.from == evaps[0].from && e.to == evaps[0].to));
    assert_eq!(state.chillers.len(), 3);
    assert_eq!(state.nodes.len(), topo.nodes.len());
    assert!(topo.validate().is_ok());
}

#[test]
fn minimal_plant_builds() {
    let mut cfg = config();
    cfg.equipment.chillers = 1;
    cfg.equipment.towers = 1;
    cfg.equipment.chilled_pumps = 1;
    cfg.equipment.condenser_pumps = 1;
    cfg.equipment.heat_exchangers = 1;
    let (topo, _) = build_network(&cfg).unwrap();
    assert_eq!(topo.edges.len(), 11);
}

#[test]
fn broken_topologies_are_rejected() {
    let (topo, _) = build_network(&config()).unwrap();
    let chw = topo.node_index("chw_supply").unwrap();
    let cw = topo.node_index("cw_basin").unwrap();

    let mut cross = topo.clone();
    cross.edges[0].to = cw;
    assert!(matches!(cross.validate(), Err(SimError::InvalidTopology(_))));

    let mut open = topo.clone();
    open.edges.retain(|e| e.attachment != Attachment::AirHandler);
    assert!(matches!(open.validate(), Err(SimError::InvalidTopology(_))));

    let mut doubled = topo.clone();
    let extra = doubled.edges_with(Attachment::TowerBank).next().unwrap().clone();
    doubled.edges.push(extra);
    assert!(matches!(doubled.validate(), Err(SimError::InvalidTopology(_))));

    let mut stray = topo.clone();
    stray.edges.push(Edge { from: chw, to: chw, attachment: Attachment::Evaporator(7), loss: 0.0 });
    assert!(matches!(stray.validate(), Err(SimError::InvalidTopology(_))));
}

#[test]
fn zero_load_zero_power_is_a_fixed_point() {
    let mut cfg = config();
    cfg.set_parameter("load_scale", 0.0).unwrap();
    cfg.set_parameter("initial_chilled_temp", 290.0).unwrap();
    cfg.set_parameter("initial_condenser_temp", 290.0).unwrap();
    cfg.set_parameter("dry_bulb", 290.0).unwrap();
    cfg.set_parameter("rel_humidity", 1.0).unwrap();
    let (topo, st) = build_network(&cfg).unwrap();
    let b = boundary_at(&cfg, 0.0).unwrap();
    let c = controls(0);
    let mut s = st;
    // Start with the default chiller already staged off.
    for ch in &mut s.chillers {
        ch.valve = 0.0;
    }
    for _ in 0..5 {
        s = advance(&topo, &cfg, &s, &c, &b, 300.0).unwrap();
        for n in &s.nodes {
            assert!((n.temperature - 290.0).abs() < 1e-9, "{}", n.temperature);
        }
    }
    let out = solve_steady(&topo, &cfg, &s, &c, &b).unwrap();
    assert!(out.converged);
    assert_eq!(out.iterations, 1);
}

#[test]
fn no_chillers_passes_water_through() {
    let cfg = config();
    let out = steady(&cfg, &controls(0));
    assert!(out.converged);
    let s = &out.state;
    assert_eq!(s.compressor_power(), 0.0);
    for c in &s.chillers {
        assert_eq!(c.evaporator_flow, 0.0);
    }
    assert!(s.chilled_flow > 0.0);
    let (topo, _) = build_network(&cfg).unwrap();
    // Bank and discharge only differ by the (zero) chiller duty.
    let d = s.temperature(&topo, "chw_discharge").unwrap();
    let bank = s.temperature(&topo, "chw_bank").unwrap();
    assert!((d - bank).abs() < 1e-3);
}

#[test]
fn advance_is_deterministic() {
    let cfg = config();
    let (topo, st) = build_network(&cfg).unwrap();
    let b = boundary_at(&cfg, 0.0).unwrap();
    let a1 = advance(&topo, &cfg, &st, &controls(2), &b, 300.0).unwrap();
    let a2 = advance(&topo, &cfg, &st, &controls(2), &b, 300.0).unwrap();
    assert_eq!(a1, a2);
    assert_eq!(format!("{a1:?}"), format!("{a2:?}"));
}

#[test]
fn non_positive_step_is_rejected() {
    let cfg = config();
    let (topo, st) = build_network(&cfg).unwrap();
    let b = boundary_at(&cfg, 0.0).unwrap();
    assert!(advance(&topo, &cfg, &st, &controls(1), &b, 0.0).is_err());
    assert!(advance(&topo, &cfg, &st, &controls(1), &b, f64::NAN).is_err());
}

#[test]
fn instability_band_is_enforced() {
    let mut cfg = config();
    cfg.simulation.temp_max = 284.0;
    let (topo, st) = build_network(&cfg).unwrap();
    let b = boundary_at(&cfg, 0.0).unwrap();
    let err = advance(&topo, &cfg, &st, &controls(0), &b, 300.0).unwrap_err();
    assert!(matches!(err, SimError::Instability { .. }));
}

#[test]
fn steady_state_forgets_initial_temperatures() {
    let mut a = config();
    let mut b = config();
    a.set_parameter("initial_chilled_temp", 280.0).unwrap();
    a.set_parameter("initial_condenser_temp", 290.0).unwrap();
    b.set_parameter("initial_chilled_temp", 295.0).unwrap();
    b.set_parameter("initial_condenser_temp", 305.0).unwrap();
    for n in [0, 1, 2] {
        let (sa, sb) = (steady(&a, &controls(n)), steady(&b, &controls(n)));
        assert!(sa.converged && sb.converged);
        for (x, y) in sa.state.nodes.iter().zip(&sb.state.nodes) {
            assert!((x.temperature - y.temperature).abs() < 1e-3, "n={n}: {} vs {}", x.temperature, y.temperature);
        }
    }
}

#[test]
fn supply_nonincreasing_in_chiller_count() {
    for scale in [1.0, 2.0] {
        let mut cfg = config();
        cfg.set_parameter("load_scale", scale).unwrap();
        let temps: Vec<f64> = (0..=3).map(|n| supply(&cfg, &steady(&cfg, &controls(n)))).collect();
        for w in temps.windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "scale {scale}: {temps:?}");
        }
        if scale == 2.0 {
            // Every step up in capacity matters when the bank is saturated.
            assert!(temps[1] < temps[0] && temps[2] < temps[1], "{temps:?}");
        }
    }
}

#[test]
fn supply_nonincreasing_in_tower_count() {
    let mut prev = f64::INFINITY;
    for towers in 1..=8 {
        let mut cfg = config();
        cfg.equipment.towers = towers;
        cfg.set_parameter("dry_bulb", 313.15).unwrap();
        let t = supply(&cfg, &steady(&cfg, &controls(1)));
        assert!(t < prev, "towers {towers}: {t} after {prev}");
        prev = t;
    }
}

#[test]
fn compressor_power_rises_with_dry_bulb() {
    let mut prev = 0.0;
    for k in 0..=15 {
        let mut cfg = config();
        cfg.set_parameter("dry_bulb", 283.15 + 2.0 * k as f64).unwrap();
        let w = steady(&cfg, &controls(1)).state.compressor_power();
        assert!(w >= prev, "step {k}: {w} < {prev}");
        prev = w;
    }
}

#[test]
fn dry_bulb_step_raises_compressor_power() {
    let cfg = config();
    let c = controls(1);
    let (topo, st) = build_network(&cfg).unwrap();
    let b0 = boundary_at(&cfg, 0.0).unwrap();
    let settled = solve_steady(&topo, &cfg, &st, &c, &b0).unwrap().state;
    let mut hot = cfg.clone();
    hot.set_parameter("dry_bulb", 300.15).unwrap();
    let b1 = boundary_at(&hot, 0.0).unwrap();
    let mut s = settled.clone();
    let mut powers = vec![settled.compressor_power()];
    for _ in 0..6 {
        s = advance(&topo, &hot, &s, &c, &b1, 300.0).unwrap();
        powers.push(s.compressor_power());
    }
    assert!(powers.last().unwrap() > &powers[0], "{powers:?}");
}

fn check_conservation(s: &SimState, topo: &NetworkTopology, mass: (f64, f64)) -> Result<(), TestCaseError> {
    let scale = s.chilled_flow.max(s.condenser_flow).max(1.0);
    for imbalance in s.flow_imbalance(topo) {
        prop_assert!(imbalance.abs() <= 1e-12 * scale, "imbalance {imbalance}");
    }
    prop_assert_eq!(topo.loop_mass(Loop::Chilled), mass.0);
    prop_assert_eq!(topo.loop_mass(Loop::Condenser), mass.1);
    prop_assert!(s.balance.worst_substep < 1e-3);
    for b in [s.balance.chilled, s.balance.condenser] {
        prop_assert!(b.relative() < 1e-3);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_transients_conserve(
        actions in proptest::collection::vec(proptest::collection::vec(0.0..1.0f64, 8), 5),
        dry_bulb in 275.0..315.0f64,
        load_scale in 0.0..2.0f64,
    ) {
        let mut cfg = config();
        cfg.set_parameter("dry_bulb", dry_bulb).unwrap();
        cfg.set_parameter("load_scale", load_scale).unwrap();
        let mut sim = FacilitySim::new(cfg).unwrap();
        let topo = sim.topology().clone();
        let mass = (topo.loop_mass(Loop::Chilled), topo.loop_mass(Loop::Condenser));
        for a in actions {
            let map: ControlMap = ids::CONTROLS
                .iter()
                .zip(&a)
                .map(|(spec, u)| (spec.id.to_string(), spec.min + u * (spec.max - spec.min)))
                .collect();
            sim.step(&map).unwrap();
            check_conservation(sim.state(), &topo, mass)?;
        }
    }
}

#[test]
fn controls_are_clamped_to_installed_equipment() {
    let mut cfg = config();
    cfg.equipment.chillers = 2;
    let map: ControlMap = [(ids::CHILLERS_ENABLED.to_string(), 3.0)].into_iter().collect();
    let (c, clamped) = apply_controls(&PlantControls::default(), &map, &cfg).unwrap();
    assert_eq!(c.chillers_enabled, 2);
    assert_eq!(clamped, vec![ids::CHILLERS_ENABLED.to_string()]);
}
