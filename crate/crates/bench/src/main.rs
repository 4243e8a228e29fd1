use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use coolplant_bench::benchmark::{self, BenchmarkSpec};
use coolplant_bench::cem;
use coolplant_bench::episode::{run_episode, write_trajectories, Trajectory};
use coolplant_bench::policy::{scripted, ConstantAction, Policy, PolicySpec};
use coolplant_bench::sweep::{self, SweepSpec};
use coolplant_bench::table::{hash, num, Table};
use coolplant_core::calibration::{calibrate, synthesize, Bank, FitOptions, Model, SynthesisRanges, Telemetry};
use coolplant_core::config::Calibration;
use coolplant_core::PlantConfig;
use coolplant_its::{EnvDocument, Environment};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Parser)]
#[command(name = "coolplant", version, about = "Chilled-water plant task suite harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes of one policy and write the trajectories.
    Run {
        /// Environment configuration document.
        #[arg(long)]
        env: PathBuf,
        /// baseline | optimal | random | cem | constant:id=value,...
        #[arg(long, default_value = "baseline")]
        policy: String,
        /// Overrides the document's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a steady-state sweep and write the data table.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run policies across catalog tasks and seeds.
    Benchmark {
        #[arg(long, default_value = "configs/plant.toml")]
        plant: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        tasks: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        policies: Vec<String>,
        /// Seed list.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
        /// Episodes per scripted cell.
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long, default_value_t = 4)]
        actors: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one component model to telemetry and write the updated
    /// coefficient set.
    Calibrate {
        #[arg(long)]
        telemetry: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long, value_enum, default_value_t = BankArg::Condenser)]
        bank: BankArg,
        /// Coefficient set to update.
        #[arg(long, default_value = "configs/calibration/default.toml")]
        calibration: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate telemetry from a coefficient set.
    Synthesize {
        #[arg(long)]
        model: String,
        #[arg(long, value_enum, default_value_t = BankArg::Condenser)]
        bank: BankArg,
        #[arg(long, default_value = "configs/calibration/default.toml")]
        calibration: PathBuf,
        #[arg(long, default_value_t = 200)]
        rows: usize,
        /// Relative standard deviation of multiplicative output noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a plant, environment, sweep or calibration document.
    ValidateConfig {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Auto)]
        kind: Kind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BankArg {
    Condenser,
    Chilled,
}

impl From<BankArg> for Bank {
    fn from(b: BankArg) -> Self {
        match b {
            BankArg::Condenser => Bank::Condenser,
            BankArg::Chilled => Bank::Chilled,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Kind {
    Auto,
    Plant,
    Env,
    Sweep,
    Calibration,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn run(env_path: &Path, policy: &str, seed: Option<u64>, episodes: usize, out: &Path) -> Result<()> {
    if episodes == 0 {
        bail!("--episodes must be positive");
    }
    let (mut doc, plant_path) = EnvDocument::from_file(env_path)?;
    if let Some(s) = seed {
        doc.options.seed = s;
    }
    let seed = doc.options.seed;
    let plant = PlantConfig::from_file(&plant_path)?;
    let config_hash = hash(&[&plant.to_toml(), &toml::to_string(&doc)?]);
    let mut env = Environment::new(plant, doc.task_def()?, doc.options.clone())?;
    let spec: PolicySpec = policy.parse()?;
    let mut policy_impl: Box<dyn Policy> = match &spec {
        PolicySpec::Cem(params) => {
            let trained = cem::train(&mut env, params, seed)?;
            eprintln!(
                "cem: {} training episodes, greedy return {:.6}",
                trained.returns.len(),
                trained.final_return()
            );
            env.reseed(seed);
            Box::new(ConstantAction(trained.mean))
        }
        _ => scripted(&spec, &env, seed)?,
    };
    let trajectories: Vec<Trajectory> = (0..episodes)
        .map(|_| run_episode(&mut env, policy_impl.as_mut()))
        .collect::<Result<_, _>>()?;

    out_dir(out)?;
    let mut returns = Table::new(&["episode", "steps", "return", "terminated_early"])
        .meta("kind", "run")
        .meta("task", &env.task().id)
        .meta("policy", &spec)
        .meta("config_hash", &config_hash)
        .meta("seed", seed);
    for (i, t) in trajectories.iter().enumerate() {
        let steps = t.records.len() - 1;
        returns.push(vec![
            i.to_string(),
            steps.to_string(),
            num(t.total),
            (steps < env.episode_length()).to_string(),
        ]);
        println!("episode {i}: {steps} steps, return {:.6}", t.total);
    }
    returns.write(&out.join("returns.csv"))?;
    write_trajectories(&out.join("trajectory.jsonl"), &returns.meta, &trajectories)?;
    Ok(())
}

fn run_sweep(spec_path: &Path, out: &Path) -> Result<()> {
    let spec = SweepSpec::from_file(spec_path)?;
    let plant = PlantConfig::from_file(&spec.plant)?;
    let rows = sweep::fidelity_sweep(&spec, &plant)?;
    let stem = spec_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into());
    out_dir(out)?;
    let table = sweep::to_table(&rows)
        .meta("kind", "sweep")
        .meta("axis", &spec.axis)
        .meta("config_hash", hash(&[&plant.to_toml(), &read(spec_path)?]))
        .meta("seed", 0);
    let file = format!("{stem}.csv");
    table.write(&out.join(&file))?;
    write_json(&out.join(format!("{stem}.plot.json")), &sweep::plot_manifest(&spec, &file))?;
    let unconverged = rows.iter().filter(|r| !r.converged).count();
    println!("{} points, {unconverged} unconverged, written to {}", rows.len(), out.join(&file).display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_benchmark(
    plant_path: &Path,
    tasks: Vec<String>,
    policies: &[String],
    seeds: Vec<u64>,
    episodes: usize,
    actors: usize,
    out: &Path,
) -> Result<bool> {
    let plant = PlantConfig::from_file(plant_path)?;
    let spec = BenchmarkSpec {
        tasks,
        policies: policies.iter().map(|p| p.parse()).collect::<Result<_, _>>()?,
        seeds,
        episodes,
        actors,
    };
    let report = benchmark::benchmark(&plant, &spec)?;
    let seeds: Vec<String> = spec.seeds.iter().map(u64::to_string).collect();
    let config_hash = hash(&[&plant.to_toml(), &spec.tasks.join(";"), &policies.join(";")]);
    out_dir(out)?;
    let tag = |t: Table| {
        t.meta("kind", "benchmark")
            .meta("config_hash", &config_hash)
            .meta("seed", seeds.join(";"))
    };
    tag(report.returns_table()).write(&out.join("returns.csv"))?;
    tag(report.summary_table()).write(&out.join("summary.csv"))?;
    write_json(&out.join("summary.plot.json"), &benchmark::plot_manifest("summary.csv"))?;
    for r in report.final_rows() {
        println!(
            "{:<48} {:<32} episodes {:>4}  return {:.4} ± {:.4}",
            r.task, r.policy, r.episode, r.mean, r.std
        );
    }
    let failures = report.failures();
    for c in &failures {
        eprintln!("failed: {} / {} / seed {}: {}", c.task, c.policy, c.seed, c.series.as_ref().unwrap_err());
    }
    Ok(failures.is_empty())
}

fn run_calibrate(telemetry: &Path, model: &str, bank: Bank, base: &Path, out: &Path) -> Result<()> {
    let model: Model = model.parse()?;
    let data = Telemetry::from_reader(read(telemetry)?.as_bytes())?;
    let mut calibration = Calibration::from_file(base)?;
    let report = calibrate(model, &data, &FitOptions::default())?;
    report.apply(&mut calibration, bank);
    calibration.validate()?;
    out_dir(out)?;
    let text = toml::to_string(&calibration)?;
    std::fs::write(out.join("calibration.toml"), text)?;
    let mut t = Table::new(&["model", "coefficient", "value", "rows", "iterations", "rmse", "mean_output"])
        .meta("kind", "calibration")
        .meta("config_hash", hash(&[&read(base)?, &read(telemetry)?]))
        .meta("seed", 0);
    for (name, v) in &report.coefficients {
        t.push(vec![
            model.name().into(),
            name.clone(),
            num(*v),
            report.rows.to_string(),
            report.iterations.to_string(),
            num(report.rmse),
            num(report.mean_output),
        ]);
        println!("{} {name} = {v}", model.name());
    }
    println!("rmse {:.3e} over {} rows (mean output {:.4})", report.rmse, report.rows, report.mean_output);
    t.write(&out.join("calibration_report.csv"))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_synthesize(model: &str, bank: Bank, base: &Path, rows: usize, noise: f64, seed: u64, out: &Path) -> Result<()> {
    let model: Model = model.parse()?;
    let calibration = Calibration::from_file(base)?;
    let normal = Normal::new(0.0, noise).context("noise must be finite and non-negative")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = synthesize(model, &calibration, bank, rows, &SynthesisRanges::default(), || {
        normal.sample(&mut rng)
    })?;
    if let Some(dir) = out.parent() {
        out_dir(dir)?;
    }
    std::fs::write(out, data.to_csv()).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn validate_config(path: &Path, kind: Kind) -> Result<()> {
    let text = read(path)?;
    let try_plant = || -> Result<String> {
        let p = PlantConfig::from_file(path)?;
        Ok(format!("plant: {} chillers, {} towers", p.equipment.chillers, p.equipment.towers))
    };
    let try_env = || -> Result<String> {
        let env = Environment::from_file(path)?;
        Ok(format!("environment: task {}, episode length {}", env.task().id, env.episode_length()))
    };
    let try_sweep = || -> Result<String> {
        let spec = SweepSpec::from_file(path)?;
        let plant = PlantConfig::from_file(&spec.plant)?;
        sweep::validate(&spec, &plant)?;
        Ok(format!("sweep: {} over {} points", spec.axis, spec.points))
    };
    let try_calibration = || -> Result<String> {
        Calibration::from_toml_str(&text)?.validate()?;
        Ok("calibration".into())
    };
    let summary = match kind {
        Kind::Plant => try_plant()?,
        Kind::Env => try_env()?,
        Kind::Sweep => try_sweep()?,
        Kind::Calibration => try_calibration()?,
        Kind::Auto => {
            // Pick the parser by the document's distinguishing key.
            let doc: toml::Table = toml::from_str(&text)?;
            if doc.contains_key("axis") {
                try_sweep()?
            } else if doc.contains_key("task") {
                try_env()?
            } else if doc.contains_key("equipment") {
                try_plant()?
            } else if doc.contains_key("chiller") {
                try_calibration()?
            } else {
                bail!("cannot tell what kind of document this is; pass --kind");
            }
        }
    };
    println!("ok: {summary} (sha256 {})", hash(&[&text]));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            env,
            policy,
            seed,
            episodes,
            out,
        } => run(&env, &policy, seed, episodes, &out).map(|_| true),
        Command::Sweep { spec, out } => run_sweep(&spec, &out).map(|_| true),
        Command::Benchmark {
            plant,
            tasks,
            policies,
            seeds,
            episodes,
            actors,
            out,
        } => run_benchmark(&plant, tasks, &policies, seeds, episodes, actors, &out),
        Command::Calibrate {
            telemetry,
            model,
            bank,
            calibration,
            out,
        } => run_calibrate(&telemetry, &model, bank.into(), &calibration, &out).map(|_| true),
        Command::Synthesize {
            model,
            bank,
            calibration,
            rows,
            noise,
            seed,
            out,
        } => run_synthesize(&model, bank.into(), &calibration, rows, noise, seed, &out).map(|_| true),
        Command::ValidateConfig { path, kind } => validate_config(&path, kind).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
