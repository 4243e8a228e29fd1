//! Runs policies across tasks and seeds and aggregates episode returns.

use coolplant_core::PlantConfig;
use coolplant_its::{make_task, EnvOptions, Environment};
use rayon::prelude::*;

use crate::cem;
use crate::episode::run_episode;
use crate::error::BenchError;
use crate::policy::{scripted, PolicySpec};
use crate::table::{num, Table};

#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub tasks: Vec<String>,
    pub policies: Vec<PolicySpec>,
    pub seeds: Vec<u64>,
    /// Episodes per scripted cell; learners use their own budget.
    pub episodes: usize,
    /// Worker threads.
    pub actors: usize,
}

/// Returns of one (task, policy, seed) cell, indexed by episodes consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub task: String,
    pub policy: String,
    pub seed: u64,
    pub series: Result<Vec<(usize, f64)>, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub task: String,
    pub policy: String,
    pub episode: usize,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub cells: Vec<Cell>,
}

fn run_cell(
    plant: &PlantConfig,
    task: &str,
    policy: &PolicySpec,
    seed: u64,
    episodes: usize,
) -> Result<Vec<(usize, f64)>, BenchError> {
    let options = EnvOptions {
        seed,
        ..Default::default()
    };
    let mut env = Environment::new(plant.clone(), make_task(task)?, options)?;
    match policy {
        PolicySpec::Cem(params) => Ok(cem::train(&mut env, params, seed)?.evaluations),
        _ => {
            let mut p = scripted(policy, &env, seed)?;
            (1..=episodes)
                .map(|i| Ok((i, run_episode(&mut env, p.as_mut())?.total)))
                .collect()
        }
    }
}

pub fn benchmark(plant: &PlantConfig, spec: &BenchmarkSpec) -> Result<BenchmarkReport, BenchError> {
    if spec.seeds.is_empty() {
        return Err(BenchError::Benchmark("at least one seed is required".into()));
    }
    if spec.tasks.is_empty() || spec.policies.is_empty() {
        return Err(BenchError::Benchmark("no tasks or no policies given".into()));
    }
    if spec.episodes == 0 || spec.actors == 0 {
        return Err(BenchError::Benchmark("episodes and actors must be positive".into()));
    }
    for t in &spec.tasks {
        make_task(t)?;
    }
    let jobs: Vec<(&String, &PolicySpec, u64)> = spec
        .tasks
        .iter()
        .flat_map(|t| {
            spec.policies
                .iter()
                .flat_map(move |p| spec.seeds.iter().map(move |s| (t, p, *s)))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.actors)
        .build()
        .map_err(|e| BenchError::Benchmark(e.to_string()))?;
    let cells = pool.install(|| {
        jobs.par_iter()
            .map(|(task, policy, seed)| Cell {
                task: task.to_string(),
                policy: policy.to_string(),
                seed: *seed,
                series: run_cell(plant, task, policy, *seed, spec.episodes).map_err(|e| e.to_string()),
            })
            .collect()
    });
    Ok(BenchmarkReport { cells })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

impl BenchmarkReport {
    pub fn failures(&self) -> Vec<&Cell> {
        self.cells.iter().filter(|c| c.series.is_err()).collect()
    }

    /// Mean and sample standard deviation across seeds, per task, policy
    /// and episode index. Failed cells are left out.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut out: Vec<SummaryRow> = Vec::new();
        let mut keys: Vec<(&str, &str)> = Vec::new();
        for c in &self.cells {
            let k = (c.task.as_str(), c.policy.as_str());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        for (task, policy) in keys {
            let series: Vec<&Vec<(usize, f64)>> = self
                .cells
                .iter()
                .filter(|c| c.task == task && c.policy == policy)
                .filter_map(|c| c.series.as_ref().ok())
                .collect();
            let len = series.iter().map(|s| s.len()).min().unwrap_or(0);
            for i in 0..len {
                let xs: Vec<f64> = series.iter().map(|s| s[i].1).collect();
                let (mean, std) = mean_std(&xs);
                out.push(SummaryRow {
                    task: task.into(),
                    policy: policy.into(),
                    episode: series[0][i].0,
                    mean,
                    std,
                    seeds: xs.len(),
                });
            }
        }
        out
    }

    /// Last summary row per (task, policy).
    pub fn final_rows(&self) -> Vec<SummaryRow> {
        let rows = self.summary();
        let mut out: Vec<SummaryRow> = Vec::new();
        for r in rows {
            match out.last_mut() {
                Some(last) if last.task == r.task && last.policy == r.policy => *last = r,
                _ => out.push(r),
            }
        }
        out
    }

    pub fn returns_table(&self) -> Table {
        let mut t = Table::new(&["task", "policy", "seed", "episode", "return", "error"]);
        for c in &self.cells {
            match &c.series {
                Ok(series) => {
                    for (i, r) in series {
                        t.push(vec![
                            c.task.clone(),
                            c.policy.clone(),
                            c.seed.to_string(),
                            i.to_string(),
                            num(*r),
                            String::new(),
                        ]);
                    }
                }
                Err(e) => t.push(vec![
                    c.task.clone(),
                    c.policy.clone(),
                    c.seed.to_string(),
                    String::new(),
                    String::new(),
                    e.replace(',', ";"),
                ]),
            }
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(&["task", "policy", "episode", "mean_return", "std_return", "seeds"]);
        for r in self.summary() {
            t.push(vec![
                r.task,
                r.policy,
                r.episode.to_string(),
                num(r.mean),
                num(r.std),
                r.seeds.to_string(),
            ]);
        }
        t
    }
}

pub fn plot_manifest(data_file: &str) -> serde_json::Value {
    serde_json::json!({
        "data": data_file,
        "kind": "band",
        "x": "episode",
        "y": "mean_return",
        "band": "std_return",
        "series": "policy",
        "facet": "task"
    })
}
