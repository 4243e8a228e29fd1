//! Scripted disturbances: frozen sensors, sensor drift, frozen controls and
//! time-varying plant parameters.
//!
//! Step indices count environment steps: reset is step 0, the first
//! `step` call is step 1.

use std::collections::BTreeMap;

use coolplant_core::weather::OrnsteinUhlenbeck;
use coolplant_core::{ids, ControlMap, MeasurementMap, PlantConfig};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::EnvError;
use crate::noise::{advance, normal};

/// Inclusive integer range sampled uniformly at reset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRange {
    pub min: usize,
    pub max: usize,
}

impl StepRange {
    pub fn fixed(n: usize) -> Self {
        Self { min: n, max: n }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        rng.random_range(self.min..=self.max)
    }
}

/// How a parameter evolves over the episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trajectory {
    /// Absolute value at steps 1, 2, …; the last entry holds afterwards.
    Values { values: Vec<f64> },
    /// Baseline plus `per_step` times the step index.
    Ramp { per_step: f64 },
    /// Baseline plus a stationary AR(1) excursion with standard deviation
    /// `sigma`. Random values are clamped to the parameter limits.
    OrnsteinUhlenbeck { correlation_steps: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    /// The listed measurements repeat their last pre-freeze value during a
    /// window of steps.
    FrozenSensors {
        ids: Vec<String>,
        start: StepRange,
        duration: StepRange,
    },
    /// `count` ids drawn from `candidates` at reset receive an AR(1) offset.
    SensorDrift {
        candidates: Vec<String>,
        count: usize,
        correlation_steps: f64,
        amplitude: f64,
    },
    /// The listed controls ignore the agent (and control noise) during a
    /// window of steps, holding the value applied just before it.
    FrozenControls {
        ids: Vec<String>,
        start: StepRange,
        duration: StepRange,
    },
    DynamicsNonstationarity {
        parameter: String,
        trajectory: Trajectory,
    },
}

fn err(msg: String) -> EnvError {
    EnvError::Scenario(msg)
}

fn check_window(start: &StepRange, duration: &StepRange) -> Result<(), EnvError> {
    if start.min == 0 || start.max < start.min {
        return Err(err("window start must satisfy 1 <= min <= max".into()));
    }
    if duration.min == 0 || duration.max < duration.min {
        return Err(err("window duration must satisfy 1 <= min <= max".into()));
    }
    Ok(())
}

impl Scenario {
    /// Checks ids against the plant and deterministic trajectories against
    /// the parameter limits over `episode_length` steps.
    pub fn validate(&self, config: &PlantConfig, episode_length: usize) -> Result<(), EnvError> {
        let max_chillers = config.equipment.chillers.max(coolplant_core::config::MAX_CHILLERS);
        let known = |id: &String| {
            if ids::is_known_id(id, max_chillers) {
                Ok(())
            } else {
                Err(EnvError::IncompatibleId {
                    id: id.clone(),
                    message: "not an observable or control id".into(),
                })
            }
        };
        match self {
            Scenario::FrozenSensors { ids, start, duration } => {
                ids.iter().try_for_each(known)?;
                check_window(start, duration)
            }
            Scenario::FrozenControls { ids: list, start, duration } => {
                for id in list {
                    if ids::control_spec(id).is_none() {
                        return Err(EnvError::IncompatibleId {
                            id: id.clone(),
                            message: "not a control id".into(),
                        });
                    }
                }
                check_window(start, duration)
            }
            Scenario::SensorDrift {
                candidates,
                count,
                correlation_steps,
                amplitude,
            } => {
                candidates.iter().try_for_each(known)?;
                if *count > candidates.len() {
                    return Err(err(format!(
                        "cannot draw {count} drifting sensors from {} candidates",
                        candidates.len()
                    )));
                }
                if !(*correlation_steps > 0.0) || !(*amplitude >= 0.0) {
                    return Err(err("drift needs a positive correlation time and amplitude >= 0".into()));
                }
                Ok(())
            }
            Scenario::DynamicsNonstationarity { parameter, trajectory } => {
                let p = config.parameters.get(parameter).ok_or_else(|| EnvError::IncompatibleId {
                    id: parameter.clone(),
                    message: "unknown configuration parameter".into(),
                })?;
                let outside = |v: f64| {
                    err(format!(
                        "trajectory of `{parameter}` reaches {v}, outside [{}, {}]",
                        p.min, p.max
                    ))
                };
                match trajectory {
                    Trajectory::Values { values } => {
                        if values.is_empty() {
                            return Err(err(format!("trajectory of `{parameter}` is empty")));
                        }
                        if let Some(v) = values.iter().find(|v| !p.contains(**v)) {
                            return Err(outside(*v));
                        }
                    }
                    Trajectory::Ramp { per_step } => {
                        for k in 1..=episode_length {
                            let v = p.value + per_step * k as f64;
                            if !p.contains(v) {
                                return Err(outside(v));
                            }
                        }
                    }
                    Trajectory::OrnsteinUhlenbeck { correlation_steps, sigma } => {
                        if !(*correlation_steps > 0.0) || !(*sigma >= 0.0) {
                            return Err(err("OU trajectory needs correlation > 0 and sigma >= 0".into()));
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

/// Per-episode realisation of one scenario.
#[derive(Debug, Clone)]
enum Active {
    Frozen {
        ids: Vec<String>,
        first: usize,
        last: usize,
        held: BTreeMap<String, f64>,
    },
    Drift {
        offsets: BTreeMap<String, OrnsteinUhlenbeck>,
    },
    FrozenControls {
        ids: Vec<String>,
        first: usize,
        last: usize,
        held: BTreeMap<String, f64>,
    },
    Parameter {
        id: String,
        baseline: f64,
        min: f64,
        max: f64,
        trajectory: Trajectory,
        excursion: OrnsteinUhlenbeck,
    },
}

/// All scenarios of an episode, each with its own random stream.
#[derive(Debug, Clone, Default)]
pub struct ScenarioRuntime {
    active: Vec<(Active, ChaCha8Rng)>,
}

impl ScenarioRuntime {
    /// Draws the episode's windows and drifting ids. `rngs` supplies one
    /// generator per scenario.
    pub fn start(
        scenarios: &[Scenario],
        config: &PlantConfig,
        mut rngs: impl FnMut(usize) -> ChaCha8Rng,
    ) -> Self {
        let active = scenarios
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut rng = rngs(i);
                let a = match s {
                    Scenario::FrozenSensors { ids, start, duration } => {
                        let first = start.sample(&mut rng);
                        let last = first + duration.sample(&mut rng) - 1;
                        Active::Frozen {
                            ids: ids.clone(),
                            first,
                            last,
                            held: BTreeMap::new(),
                        }
                    }
                    Scenario::FrozenControls { ids, start, duration } => {
                        let first = start.sample(&mut rng);
                        let last = first + duration.sample(&mut rng) - 1;
                        Active::FrozenControls {
                            ids: ids.clone(),
                            first,
                            last,
                            held: BTreeMap::new(),
                        }
                    }
                    Scenario::SensorDrift {
                        candidates,
                        count,
                        correlation_steps,
                        amplitude,
                    } => Active::Drift {
                        offsets: candidates
                            .choose_multiple(&mut rng, *count)
                            .map(|id| (id.clone(), OrnsteinUhlenbeck::new(*correlation_steps, *amplitude)))
                            .collect(),
                    },
                    Scenario::DynamicsNonstationarity { parameter, trajectory } => {
                        let p = config.parameters[parameter];
                        // Start from the stationary distribution so the first
                        // step is already randomized.
                        let excursion = match trajectory {
                            Trajectory::OrnsteinUhlenbeck { correlation_steps, sigma } => OrnsteinUhlenbeck {
                                value: sigma * normal(&mut rng),
                                ..OrnsteinUhlenbeck::new(*correlation_steps, *sigma)
                            },
                            _ => OrnsteinUhlenbeck::new(1.0, 0.0),
                        };
                        Active::Parameter {
                            id: parameter.clone(),
                            baseline: p.value,
                            min: p.min,
                            max: p.max,
                            trajectory: trajectory.clone(),
                            excursion,
                        }
                    }
                };
                (a, rng)
            })
            .collect();
        Self { active }
    }

    /// Parameter values to apply before simulating step `k`.
    pub fn parameters(&mut self, k: usize) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for (a, rng) in &mut self.active {
            if let Active::Parameter {
                id,
                baseline,
                min,
                max,
                trajectory,
                excursion,
            } = a
            {
                let v = match trajectory {
                    Trajectory::Values { values } => values[(k - 1).min(values.len() - 1)],
                    Trajectory::Ramp { per_step } => *baseline + *per_step * k as f64,
                    Trajectory::OrnsteinUhlenbeck { .. } => {
                        if k > 1 {
                            advance(excursion, rng);
                        }
                        (*baseline + excursion.value).clamp(*min, *max)
                    }
                };
                out.push((id.clone(), v));
            }
        }
        out
    }

    /// Overrides frozen controls for step `k`. `applied` is what the plant
    /// ran with on step `k - 1`.
    pub fn controls(&mut self, k: usize, controls: &mut ControlMap, applied: &ControlMap) {
        for (a, _) in &mut self.active {
            if let Active::FrozenControls { ids, first, last, held } = a {
                if k == *first {
                    for id in ids.iter() {
                        held.insert(id.clone(), applied[id]);
                    }
                }
                if (*first..=*last).contains(&k) {
                    for (id, v) in held.iter() {
                        controls.insert(id.clone(), *v);
                    }
                }
            }
        }
    }

    /// Applies drift and sensor freezes to the step-`k` measurements.
    /// `previous` is the observation emitted on step `k - 1`.
    pub fn measurements(&mut self, k: usize, values: &mut MeasurementMap, previous: &MeasurementMap) {
        for (a, rng) in &mut self.active {
            match a {
                Active::Drift { offsets } => {
                    for (id, ou) in offsets.iter_mut() {
                        let off = advance(ou, rng);
                        if let Some(v) = values.get_mut(id) {
                            *v += off;
                        }
                    }
                }
                Active::Frozen { ids, first, last, held } => {
                    if k == *first {
                        for id in ids.iter() {
                            if let Some(v) = previous.get(id) {
                                held.insert(id.clone(), *v);
                            }
                        }
                    }
                    if (*first..=*last).contains(&k) {
                        for (id, v) in held.iter() {
                            if let Some(slot) = values.get_mut(id) {
                                *slot = *v;
                            }
                        }
                    }
                }
                _ => {}
            }
        }
    }
}
