//! Policies the harness can run: scripted constants, random actions and a
//! trained cross-entropy snapshot.

use std::fmt;
use std::str::FromStr;

use coolplant_core::ControlMap;
use coolplant_its::{normalize_controls, Environment, TimeStepRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cem::CemParams;
use crate::error::BenchError;

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    /// The task's documented reference policy.
    Baseline,
    /// The task's documented optimal policy.
    Optimal,
    /// Uniform actions in [-1, 1].
    Random,
    /// Fixed setpoints in wire units: `constant:id=value,…`.
    Constant(ControlMap),
    /// Cross-entropy search over constant actions.
    Cem(CemParams),
}

impl FromStr for PolicySpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: &str| BenchError::Policy(s.to_string(), m.to_string());
        match s {
            "baseline" => Ok(Self::Baseline),
            "optimal" => Ok(Self::Optimal),
            "random" => Ok(Self::Random),
            "cem" => Ok(Self::Cem(CemParams::default())),
            _ => {
                let body = s
                    .strip_prefix("constant:")
                    .ok_or_else(|| bad("expected baseline, optimal, random, cem or constant:id=value"))?;
                let mut map = ControlMap::new();
                for pair in body.split([',', ';']) {
                    let (id, v) = pair.split_once('=').ok_or_else(|| bad("expected id=value"))?;
                    let v: f64 = v.trim().parse().map_err(|_| bad("value is not a number"))?;
                    map.insert(id.trim().to_string(), v);
                }
                Ok(Self::Constant(map))
            }
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Baseline => write!(f, "baseline"),
            Self::Optimal => write!(f, "optimal"),
            Self::Random => write!(f, "random"),
            Self::Cem(_) => write!(f, "cem"),
            Self::Constant(m) => {
                let parts: Vec<String> = m.iter().map(|(k, v)| format!("{k}={v}")).collect();
                write!(f, "constant:{}", parts.join(";"))
            }
        }
    }
}

pub trait Policy: Send {
    fn act(&mut self, record: &TimeStepRecord) -> Vec<f64>;
}

/// The same normalized action every step.
#[derive(Debug, Clone)]
pub struct ConstantAction(pub Vec<f64>);

impl Policy for ConstantAction {
    fn act(&mut self, _: &TimeStepRecord) -> Vec<f64> {
        self.0.clone()
    }
}

#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
    dim: usize,
}

impl RandomPolicy {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            dim,
        }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _: &TimeStepRecord) -> Vec<f64> {
        (0..self.dim).map(|_| self.rng.random_range(-1.0..=1.0)).collect()
    }
}

/// Normalized action for fixed setpoints; controls the map leaves out sit
/// at their table defaults.
pub fn constant_action(env: &Environment, setpoints: &ControlMap) -> Result<Vec<f64>, BenchError> {
    let mut full = ControlMap::new();
    for s in env.action_specs() {
        full.insert(s.id.to_string(), setpoints.get(s.id).copied().unwrap_or(s.default));
    }
    for id in setpoints.keys() {
        if !full.contains_key(id) {
            return Err(BenchError::Policy(
                id.clone(),
                format!("task `{}` does not control it", env.task().id),
            ));
        }
    }
    Ok(normalize_controls(&full, env.action_specs())?)
}

/// Builds a non-learning policy for `env`.
pub fn scripted(spec: &PolicySpec, env: &Environment, seed: u64) -> Result<Box<dyn Policy>, BenchError> {
    let task = env.task();
    let documented = |p: &Option<ControlMap>, what: &str| {
        p.clone().ok_or_else(|| {
            BenchError::Policy(what.to_string(), format!("task `{}` documents none", task.id))
        })
    };
    Ok(match spec {
        PolicySpec::Baseline => Box::new(ConstantAction(constant_action(env, &documented(&task.baseline, "baseline")?)?)),
        PolicySpec::Optimal => Box::new(ConstantAction(constant_action(env, &documented(&task.optimal, "optimal")?)?)),
        PolicySpec::Constant(m) => Box::new(ConstantAction(constant_action(env, m)?)),
        PolicySpec::Random => Box::new(RandomPolicy::new(env.action_specs().len(), seed)),
        PolicySpec::Cem(_) => {
            return Err(BenchError::Policy(
                "cem".into(),
                "must be trained before it can act".into(),
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_specs() {
        assert_eq!("baseline".parse::<PolicySpec>().unwrap(), PolicySpec::Baseline);
        let c: PolicySpec = "constant:chillers_enabled=2".parse().unwrap();
        match c {
            PolicySpec::Constant(m) => assert_eq!(m["chillers_enabled"], 2.0),
            _ => panic!(),
        }
        assert!("constant:chillers_enabled".parse::<PolicySpec>().is_err());
        assert!("greedy".parse::<PolicySpec>().is_err());
    }
}
