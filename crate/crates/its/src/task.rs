//! Reward, task definitions and the task catalog.

use std::collections::{BTreeMap, BTreeSet};

use coolplant_core::config::MAX_CHILLERS;
use coolplant_core::{ids, ControlMap};
use serde::{Deserialize, Serialize};

use crate::constraint::{Constraint, Status};
use crate::error::EnvError;
use crate::noise::NoiseSpec;
use crate::scenario::{Scenario, Trajectory};

pub const DEFAULT_EPISODE_LENGTH: usize = 10;
pub const DEFAULT_ALPHA: f64 = 1000.0;
pub const DEFAULT_PENALTY_WEIGHT: f64 = 0.1;

pub const UNCONSTRAINED_CHILLERS: &str = "easy/unconstrained-chillers";
pub const CONSTRAINED_CHILLERS: &str = "easy/constrained-chillers";
pub const CHILLER_TEMPERATURE: &str = "easy/chiller-temperature";
pub const CHILLERS_WITH_SUPPLY_TEMP: &str = "medium/constrained-chillers-with-supply-temp";
pub const CHILLERS_AND_CONDENSER_TEMP: &str = "medium/chillers-and-condenser-temp";
pub const FULL_CONTROL: &str = "hard/full-control";

pub const CATALOG: [&str; 6] = [
    UNCONSTRAINED_CHILLERS,
    CONSTRAINED_CHILLERS,
    CHILLER_TEMPERATURE,
    CHILLERS_WITH_SUPPLY_TEMP,
    CHILLERS_AND_CONDENSER_TEMP,
    FULL_CONTROL,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    /// Power normalization, kW.
    pub alpha: f64,
    /// Penalty per violated constraint unless overridden in `weights`.
    pub default_weight: f64,
    pub weights: BTreeMap<String, f64>,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            default_weight: DEFAULT_PENALTY_WEIGHT,
            weights: BTreeMap::new(),
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), EnvError> {
        let ok = self.alpha > 0.0
            && self.alpha.is_finite()
            && self.default_weight >= 0.0
            && self.weights.values().all(|w| *w >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(EnvError::Constraint {
                id: "reward".into(),
                message: "alpha must be positive and penalty weights non-negative".into(),
            })
        }
    }

    pub fn weight(&self, id: &str) -> f64 {
        self.weights.get(id).copied().unwrap_or(self.default_weight)
    }
}

/// 1 / (W/α + 1): one at zero power, one half at W = α.
pub fn base_reward(total_power: f64, alpha: f64) -> f64 {
    1.0 / (total_power / alpha + 1.0)
}

/// Base reward minus a weighted indicator for every constraint outside its
/// soft band, clipped at zero.
pub fn reward(total_power: f64, params: &RewardParams, statuses: &BTreeMap<String, Status>) -> f64 {
    let penalty: f64 = statuses
        .iter()
        .filter(|(_, s)| **s != Status::Ok)
        .map(|(id, _)| params.weight(id))
        .sum();
    (base_reward(total_power, params.alpha) - penalty).max(0.0)
}

/// Total electrical power in kW: compressors of the unmasked chiller slots
/// plus fans and both pump banks.
pub fn total_power(values: &BTreeMap<String, f64>, mask: &[bool]) -> Result<f64, EnvError> {
    let get = |id: &str| values.get(id).copied().ok_or_else(|| EnvError::MissingId(id.to_string()));
    let mut w = 0.0;
    for (i, real) in mask.iter().enumerate() {
        if *real {
            w += get(&ids::chiller_id(i, ids::COMPRESSOR_POWER))?;
        }
    }
    for id in ids::AUXILIARY_POWER {
        w += get(id)?;
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Objective {
    MinimizePower { reward: RewardParams },
}

impl Default for Objective {
    fn default() -> Self {
        Objective::MinimizePower {
            reward: RewardParams::default(),
        }
    }
}

impl Objective {
    pub fn reward_params(&self) -> &RewardParams {
        match self {
            Objective::MinimizePower { reward } => reward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDef {
    pub id: String,
    #[serde(default)]
    pub objective: Objective,
    /// Controlled ids, in canonical table order.
    pub controls: Vec<String>,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default = "default_episode_length")]
    pub episode_length: usize,
    /// Constant setpoints of the reference policy, if documented.
    #[serde(default)]
    pub baseline: Option<ControlMap>,
    /// Constant setpoints of the known optimal policy, if any.
    #[serde(default)]
    pub optimal: Option<ControlMap>,
}

fn default_episode_length() -> usize {
    DEFAULT_EPISODE_LENGTH
}

impl TaskDef {
    pub fn with_policies(mut self, baseline: Option<ControlMap>, optimal: Option<ControlMap>) -> Self {
        self.baseline = baseline;
        self.optimal = optimal;
        self
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.controls.is_empty() {
            return Err(EnvError::IncompatibleId {
                id: self.id.clone(),
                message: "a task needs at least one control".into(),
            });
        }
        let mut seen = BTreeSet::new();
        for c in &self.controls {
            if ids::control_spec(c).is_none() {
                return Err(EnvError::IncompatibleId {
                    id: c.clone(),
                    message: "not a control id".into(),
                });
            }
            if !seen.insert(c) {
                return Err(EnvError::IncompatibleId {
                    id: c.clone(),
                    message: "listed twice".into(),
                });
            }
        }
        let mut constrained = BTreeSet::new();
        for c in &self.constraints {
            c.validate()?;
            if !ids::is_known_id(&c.id, MAX_CHILLERS) {
                return Err(EnvError::IncompatibleId {
                    id: c.id.clone(),
                    message: "constraint on an unknown id".into(),
                });
            }
            if !constrained.insert(&c.id) {
                return Err(EnvError::IncompatibleId {
                    id: c.id.clone(),
                    message: "constrained twice".into(),
                });
            }
        }
        self.noise.validate()?;
        for id in self.noise.controls.keys() {
            if ids::control_spec(id).is_none() {
                return Err(EnvError::IncompatibleId {
                    id: id.clone(),
                    message: "control noise on a non-control id".into(),
                });
            }
        }
        for id in self.noise.measurements.keys() {
            if !ids::is_known_id(id, MAX_CHILLERS) {
                return Err(EnvError::IncompatibleId {
                    id: id.clone(),
                    message: "measurement noise on an unknown id".into(),
                });
            }
        }
        self.objective.reward_params().validate()?;
        if self.episode_length == 0 {
            return Err(EnvError::IncompatibleId {
                id: self.id.clone(),
                message: "episode length must be positive".into(),
            });
        }
        for policy in self.baseline.iter().chain(&self.optimal) {
            for id in policy.keys() {
                if !self.controls.contains(id) {
                    return Err(EnvError::IncompatibleId {
                        id: id.clone(),
                        message: "policy sets a control the task does not expose".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Builds a task from its parts. Controls are stored in canonical order.
pub fn compose_task(
    id: impl Into<String>,
    objective: Objective,
    controls: &[&str],
    scenarios: Vec<Scenario>,
    noise: NoiseSpec,
    constraints: Vec<Constraint>,
) -> Result<TaskDef, EnvError> {
    for (i, c) in controls.iter().enumerate() {
        if controls[..i].contains(c) {
            return Err(EnvError::IncompatibleId {
                id: c.to_string(),
                message: "listed twice".into(),
            });
        }
    }
    let mut ordered: Vec<String> = ids::CONTROLS
        .iter()
        .filter(|c| controls.contains(&c.id))
        .map(|c| c.id.to_string())
        .collect();
    // Unknown ids are kept so validation can name them.
    ordered.extend(
        controls
            .iter()
            .filter(|c| ids::control_spec(c).is_none())
            .map(|c| c.to_string()),
    );
    let task = TaskDef {
        id: id.into(),
        objective,
        controls: ordered,
        constraints,
        scenarios,
        noise,
        episode_length: DEFAULT_EPISODE_LENGTH,
        baseline: None,
        optimal: None,
    };
    task.validate()?;
    Ok(task)
}

fn constant(pairs: &[(&str, f64)]) -> Option<ControlMap> {
    Some(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
}

/// The reference plant has three chillers; the constrained tasks allow all
/// but the extremes.
pub fn chiller_subset_constraint() -> Constraint {
    Constraint::hard(ids::CHILLERS_ENABLED, 1.0, 2.0).expect("static bounds")
}

/// Chilled-water supply temperature band, °F.
pub fn supply_temp_constraint() -> Constraint {
    Constraint::new(ids::CHILLED_WATER_SUPPLY_TEMP, 40.0, 42.0, 55.0, 60.0).expect("static bounds")
}

/// Randomized outdoor temperature: a slowly varying dry-bulb offset.
pub fn randomized_dry_bulb() -> Scenario {
    Scenario::DynamicsNonstationarity {
        parameter: coolplant_core::config::DRY_BULB_OFFSET.into(),
        trajectory: Trajectory::OrnsteinUhlenbeck {
            correlation_steps: 20.0,
            sigma: 4.0,
        },
    }
}

pub fn make_task(id: &str) -> Result<TaskDef, EnvError> {
    let none = NoiseSpec::default;
    let obj = Objective::default;
    let task = match id {
        UNCONSTRAINED_CHILLERS => compose_task(id, obj(), &[ids::CHILLERS_ENABLED], vec![], none(), vec![])?
            .with_policies(
                constant(&[(ids::CHILLERS_ENABLED, 0.0)]),
                constant(&[(ids::CHILLERS_ENABLED, 0.0)]),
            ),
        CONSTRAINED_CHILLERS => compose_task(
            id,
            obj(),
            &[ids::CHILLERS_ENABLED],
            vec![],
            none(),
            vec![chiller_subset_constraint()],
        )?
        .with_policies(
            constant(&[(ids::CHILLERS_ENABLED, 1.0)]),
            constant(&[(ids::CHILLERS_ENABLED, 1.0)]),
        ),
        CHILLER_TEMPERATURE => compose_task(id, obj(), &[ids::CHILLER_LEAVING_TEMP], vec![], none(), vec![])?
            .with_policies(
                constant(&[(ids::CHILLER_LEAVING_TEMP, 75.0)]),
                constant(&[(ids::CHILLER_LEAVING_TEMP, 75.0)]),
            ),
        CHILLERS_WITH_SUPPLY_TEMP => compose_task(
            id,
            obj(),
            &[ids::CHILLERS_ENABLED],
            vec![randomized_dry_bulb()],
            none(),
            vec![chiller_subset_constraint(), supply_temp_constraint()],
        )?
        .with_policies(constant(&[(ids::CHILLERS_ENABLED, 1.0)]), None),
        CHILLERS_AND_CONDENSER_TEMP => compose_task(
            id,
            obj(),
            &[ids::CHILLERS_ENABLED, ids::TOWER_RETURN_TEMP],
            vec![],
            none(),
            vec![supply_temp_constraint()],
        )?,
        FULL_CONTROL => {
            let all: Vec<&str> = ids::CONTROLS.iter().map(|c| c.id).collect();
            compose_task(id, obj(), &all, vec![], none(), vec![supply_temp_constraint()])?
        }
        _ => return Err(EnvError::UnknownTask(id.to_string())),
    };
    Ok(task)
}

/// Per-episode task state.
#[derive(Debug, Clone)]
pub struct Task {
    def: TaskDef,
    step: usize,
}

impl Task {
    pub fn new(def: TaskDef) -> Result<Self, EnvError> {
        def.validate()?;
        Ok(Self { def, step: 0 })
    }

    pub fn def(&self) -> &TaskDef {
        &self.def
    }

    pub fn reset(&mut self, values: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
        self.step = 0;
        self.observations(values)
    }

    /// Reward for the step just simulated and the task's observation fields.
    pub fn reward_and_observations(
        &mut self,
        values: &BTreeMap<String, f64>,
        mask: &[bool],
        statuses: &BTreeMap<String, Status>,
    ) -> Result<(f64, BTreeMap<String, f64>), EnvError> {
        self.step += 1;
        let w = total_power(values, mask)?;
        let r = reward(w, self.def.objective.reward_params(), statuses);
        let mut obs = self.observations(values);
        obs.insert("task.total_power".into(), w);
        Ok((r, obs))
    }

    fn observations(&self, values: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
        let mut obs = BTreeMap::new();
        obs.insert(
            "task.steps_remaining".into(),
            self.def.episode_length.saturating_sub(self.step) as f64,
        );
        for c in &self.def.constraints {
            for (name, v) in [
                ("hard_lower", c.hard_lower),
                ("soft_lower", c.soft_lower),
                ("soft_upper", c.soft_upper),
                ("hard_upper", c.hard_upper),
            ] {
                if v.is_finite() {
                    obs.insert(format!("target.{}.{name}", c.id), v);
                }
            }
            // Distance to the nearest hard limit; negative once violated.
            if let Some(v) = values.get(&c.id) {
                let margin = (v - c.hard_lower).min(c.hard_upper - v);
                if margin.is_finite() {
                    obs.insert(format!("margin.{}", c.id), margin);
                }
            }
        }
        obs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_anchor_points() {
        let p = RewardParams::default();
        let none = BTreeMap::new();
        assert_eq!(reward(0.0, &p, &none), 1.0);
        assert_eq!(reward(1000.0, &p, &none), 0.5);
        assert_eq!(reward(3000.0, &p, &none), 0.25);
    }

    #[test]
    fn penalties_clip_at_zero() {
        let mut p = RewardParams::default();
        p.default_weight = 0.6;
        let s: BTreeMap<String, Status> = [("a".to_string(), Status::SoftLow), ("b".to_string(), Status::SoftHigh)]
            .into_iter()
            .collect();
        assert_eq!(reward(0.0, &p, &s), 0.0);
        p.default_weight = 0.1;
        assert!((reward(0.0, &p, &s) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn unknown_task() {
        assert!(matches!(make_task("easy/nope"), Err(EnvError::UnknownTask(_))));
    }
}
