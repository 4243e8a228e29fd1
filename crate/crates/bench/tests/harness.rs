use std::path::{Path, PathBuf};

use coolplant_bench::benchmark::{benchmark, BenchmarkSpec};
use coolplant_bench::cem::{self, CemParams};
use coolplant_bench::policy::PolicySpec;
use coolplant_bench::sweep::{self, SweepSpec};
use coolplant_bench::BenchError;
use coolplant_core::PlantConfig;
use coolplant_its::{make_task, EnvOptions, Environment};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn plant() -> PlantConfig {
    PlantConfig::from_file(&root().join("configs/plant.toml")).unwrap()
}

fn spec(policies: Vec<PolicySpec>, seeds: Vec<u64>) -> BenchmarkSpec {
    BenchmarkSpec {
        tasks: vec!["easy/constrained-chillers".into()],
        policies,
        seeds,
        episodes: 2,
        actors: 2,
    }
}

#[test]
fn default_cem_fits_the_episode_budget() {
    assert!(CemParams::default().budget() <= 500);
}

#[test]
fn cem_is_deterministic_per_seed() {
    let params = CemParams { iterations: 3, ..CemParams::default() };
    let run = |seed| {
        let mut env = Environment::new(plant(), make_task("easy/chiller-temperature").unwrap(), EnvOptions::default()).unwrap();
        cem::train(&mut env, &params, seed).unwrap()
    };
    let a = run(4);
    assert_eq!(a, run(4));
    assert_eq!(a.returns.len(), params.budget());
    assert_eq!(a.evaluations.len(), 3);
    assert_eq!(a.evaluations.last().unwrap().0, params.budget());
}

#[test]
fn cem_rejects_bad_elite_count() {
    let mut env = Environment::new(plant(), make_task("easy/chiller-temperature").unwrap(), EnvOptions::default()).unwrap();
    let params = CemParams { elites: 20, ..CemParams::default() };
    assert!(matches!(cem::train(&mut env, &params, 0), Err(BenchError::Policy(..))));
}

#[test]
fn benchmark_ranks_policies_and_summarizes_seeds() {
    let worse: PolicySpec = "constant:chillers_enabled=2".parse().unwrap();
    let report = benchmark(&plant(), &spec(vec![PolicySpec::Optimal, worse], vec![0, 1, 2])).unwrap();
    assert!(report.failures().is_empty());
    let rows = report.final_rows();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.seeds == 3 && r.episode == 2 && r.std == 0.0));
    let optimal = rows.iter().find(|r| r.policy == "optimal").unwrap();
    let other = rows.iter().find(|r| r.policy != "optimal").unwrap();
    assert!(optimal.mean > other.mean);
    let table = report.summary_table();
    assert_eq!(table.rows.len(), 4);
}

#[test]
fn benchmark_rejects_degenerate_specs() {
    assert!(benchmark(&plant(), &spec(vec![PolicySpec::Optimal], vec![])).is_err());
    assert!(benchmark(&plant(), &spec(vec![], vec![0])).is_err());
    let mut s = spec(vec![PolicySpec::Optimal], vec![0]);
    s.tasks = vec!["easy/nope".into()];
    assert!(benchmark(&plant(), &s).is_err());
}

#[test]
fn benchmark_records_cell_failures() {
    // The medium condenser task documents no baseline.
    let mut s = spec(vec![PolicySpec::Baseline], vec![0]);
    s.tasks = vec!["medium/chillers-and-condenser-temp".into()];
    let report = benchmark(&plant(), &s).unwrap();
    assert_eq!(report.failures().len(), 1);
}

#[test]
fn sweep_validation() {
    let cfg = plant();
    let mut s = SweepSpec::from_file(&root().join("configs/sweeps/compressor_vs_dry_bulb.toml")).unwrap();
    assert!(sweep::validate(&s, &cfg).is_ok());
    s.range = [200.0, 400.0];
    assert!(sweep::validate(&s, &cfg).is_err());
    s.range = [283.15, 315.15];
    s.points = 1;
    assert!(sweep::validate(&s, &cfg).is_err());
    let mut s = SweepSpec::from_file(&root().join("configs/sweeps/supply_vs_chillers.toml")).unwrap();
    s.points = 4;
    assert!(sweep::validate(&s, &cfg).is_err(), "non-integer chiller counts");
    s.points = 3;
    s.axis = "no_such_axis".into();
    assert!(sweep::validate(&s, &cfg).is_err());
}

#[test]
fn sweep_rows_are_ordered_and_tabulated() {
    let s = SweepSpec::from_file(&root().join("configs/sweeps/chiller_crossover.toml")).unwrap();
    let rows = sweep::fidelity_sweep(&s, &PlantConfig::from_file(&s.plant).unwrap()).unwrap();
    assert_eq!(rows.len(), 2 * s.points);
    assert_eq!(rows[0].variant, "1 chiller");
    assert_eq!(rows[1].variant, "2 chillers");
    assert_eq!(rows[0].value, rows[1].value);
    let table = sweep::to_table(&rows);
    assert_eq!(table.columns, sweep::COLUMNS);
    assert_eq!(table.rows.len(), rows.len());
    assert_eq!(sweep::series(&rows, "2 chillers").len(), s.points);
}
