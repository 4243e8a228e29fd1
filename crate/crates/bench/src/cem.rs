//! Cross-entropy search over constant normalized actions.
//!
//! Each iteration samples a population around the current mean, runs one
//! episode per candidate, refits mean and spread to the elites, and then
//! runs one greedy episode with the new mean. Every episode counts against
//! the budget.

use coolplant_its::Environment;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::episode::run_episode;
use crate::error::BenchError;
use crate::policy::ConstantAction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CemParams {
    pub population: usize,
    pub elites: usize,
    pub iterations: usize,
    pub initial_std: f64,
    pub min_std: f64,
}

impl Default for CemParams {
    fn default() -> Self {
        Self {
            population: 19,
            elites: 4,
            iterations: 25,
            initial_std: 1.0,
            min_std: 0.05,
        }
    }
}

impl CemParams {
    /// Episodes consumed by a full run.
    pub fn budget(&self) -> usize {
        self.iterations * (self.population + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CemRun {
    /// Return of every episode, in the order run.
    pub returns: Vec<f64>,
    /// (episodes consumed, greedy return) after each iteration.
    pub evaluations: Vec<(usize, f64)>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl CemRun {
    pub fn final_return(&self) -> f64 {
        self.evaluations.last().map(|e| e.1).unwrap_or(f64::NAN)
    }

    /// Episodes consumed when the greedy return first reached `target`.
    pub fn episodes_to_reach(&self, target: f64) -> Option<usize> {
        self.evaluations.iter().find(|(_, r)| *r >= target).map(|(n, _)| *n)
    }
}

pub fn train(env: &mut Environment, params: &CemParams, seed: u64) -> Result<CemRun, BenchError> {
    if params.population == 0 || params.elites == 0 || params.elites > params.population {
        return Err(BenchError::Policy(
            "cem".into(),
            "need 0 < elites <= population".into(),
        ));
    }
    let dim = env.action_specs().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut mean = vec![0.0; dim];
    let mut std = vec![params.initial_std; dim];
    let mut run = CemRun {
        returns: Vec::with_capacity(params.budget()),
        evaluations: Vec::with_capacity(params.iterations),
        mean: mean.clone(),
        std: std.clone(),
    };
    for _ in 0..params.iterations {
        let mut scored: Vec<(f64, Vec<f64>)> = (0..params.population)
            .map(|_| {
                let a: Vec<f64> = (0..dim)
                    .map(|j| (mean[j] + std[j] * unit.sample(&mut rng)).clamp(-1.0, 1.0))
                    .collect();
                let r = run_episode(env, &mut ConstantAction(a.clone()))?.total;
                Ok((r, a))
            })
            .collect::<Result<_, BenchError>>()?;
        run.returns.extend(scored.iter().map(|s| s.0));
        // Stable sort keeps sampling order among ties.
        scored.sort_by(|x, y| y.0.total_cmp(&x.0));
        let elite = &scored[..params.elites];
        let k = elite.len() as f64;
        for j in 0..dim {
            let m = elite.iter().map(|e| e.1[j]).sum::<f64>() / k;
            let v = elite.iter().map(|e| (e.1[j] - m).powi(2)).sum::<f64>() / k;
            mean[j] = m;
            std[j] = v.sqrt().max(params.min_std);
        }
        let greedy = run_episode(env, &mut ConstantAction(mean.clone()))?.total;
        run.returns.push(greedy);
        run.evaluations.push((run.returns.len(), greedy));
    }
    run.mean = mean;
    run.std = std;
    Ok(run)
}
