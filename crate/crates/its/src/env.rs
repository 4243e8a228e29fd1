//! The task-suite environment: couples the simulator with a task, noise,
//! constraints and scenarios behind a reset/step interface.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use coolplant_core::config::MAX_CHILLERS;
use coolplant_core::facility::controls_to_map;
use coolplant_core::ids::ControlSpec;
use coolplant_core::{ControlMap, FacilitySim, MeasurementMap, PlantConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::{Constraint, Status};
use crate::error::EnvError;
use crate::noise::{normal, NoiseKind, NoiseProcess, NoiseSpec};
use crate::scenario::{Scenario, ScenarioRuntime};
use crate::spaces::{config_echo, control_specs, convert_action, convert_measurements, Observation};
use crate::task::{make_task, Task, TaskDef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    First,
    Mid,
    Last,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeStepRecord {
    pub step: usize,
    pub kind: StepKind,
    /// Absent on the first record.
    pub reward: Option<f64>,
    /// Absent on the first record; 0 after a hard violation, otherwise 1
    /// (running out of steps is a truncation, not a terminal state).
    pub discount: Option<f64>,
    pub observation: Observation,
    /// Setpoints the plant actually ran with, after noise and freezes.
    pub applied: ControlMap,
}

impl TimeStepRecord {
    pub fn is_last(&self) -> bool {
        self.kind == StepKind::Last
    }

    pub fn hard_violation(&self) -> bool {
        self.observation.violations.values().any(|s| s.is_hard())
    }
}

/// Everything layered on top of the task definition.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvOptions {
    pub seed: u64,
    /// Overrides the task's episode length.
    pub episode_length: Option<usize>,
    /// Chiller slots in the observation frame; at least the installed count.
    pub max_chillers: Option<usize>,
    /// Parameter overrides applied before initial-condition noise.
    pub initial_conditions: BTreeMap<String, f64>,
    /// Merged over the task's noise, per id.
    pub noise: NoiseSpec,
    pub scenarios: Vec<Scenario>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TaskRef {
    Catalog(String),
    Inline(Box<TaskDef>),
}

/// The environment configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvDocument {
    /// Plant configuration file, relative to the document.
    pub plant: PathBuf,
    pub task: TaskRef,
    #[serde(flatten)]
    pub options: EnvOptions,
}

impl EnvDocument {
    pub fn from_toml_str(text: &str) -> Result<Self, EnvError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<(Self, PathBuf), EnvError> {
        let text = std::fs::read_to_string(path).map_err(|source| EnvError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let doc = Self::from_toml_str(&text)?;
        let plant = match path.parent() {
            Some(dir) if doc.plant.is_relative() => dir.join(&doc.plant),
            _ => doc.plant.clone(),
        };
        Ok((doc, plant))
    }

    pub fn task_def(&self) -> Result<TaskDef, EnvError> {
        match &self.task {
            TaskRef::Catalog(id) => make_task(id),
            TaskRef::Inline(def) => Ok((**def).clone()),
        }
    }
}

const STREAM_INITIAL: u64 = 0;
const STREAM_CONTROLS: u64 = 1;
const STREAM_MEASUREMENTS: u64 = 2;
const STREAM_SCENARIOS: u64 = 16;

struct Episode {
    step: usize,
    done: bool,
    control_rng: ChaCha8Rng,
    measurement_rng: ChaCha8Rng,
    control_noise: NoiseProcess,
    measurement_noise: NoiseProcess,
    scenarios: ScenarioRuntime,
    /// Observation emitted on the previous step, after noise.
    last_measurements: MeasurementMap,
}

pub struct Environment {
    base: PlantConfig,
    task: Task,
    options: EnvOptions,
    constraints: Vec<Constraint>,
    scenarios: Vec<Scenario>,
    noise: NoiseSpec,
    episode_length: usize,
    max_chillers: usize,
    specs: Vec<&'static ControlSpec>,
    sim: FacilitySim,
    seed: u64,
    episodes: u64,
    episode: Option<Episode>,
}

fn merge(base: &BTreeMap<String, NoiseKind>, over: &BTreeMap<String, NoiseKind>) -> BTreeMap<String, NoiseKind> {
    let mut m = base.clone();
    m.extend(over.iter().map(|(k, v)| (k.clone(), v.clone())));
    m
}

impl Environment {
    pub fn new(plant: PlantConfig, task: TaskDef, options: EnvOptions) -> Result<Self, EnvError> {
        task.validate()?;
        let episode_length = options.episode_length.unwrap_or(task.episode_length);
        if episode_length == 0 {
            return Err(EnvError::Scenario("episode length must be positive".into()));
        }
        let installed = plant.equipment.chillers;
        let max_chillers = options.max_chillers.unwrap_or(MAX_CHILLERS.max(installed));
        if max_chillers < installed {
            return Err(EnvError::IncompatibleId {
                id: "max_chillers".into(),
                message: format!("frame of {max_chillers} cannot hold {installed} installed chillers"),
            });
        }
        let mut constraints = task.constraints.clone();
        for c in &options.constraints {
            c.validate()?;
            constraints.retain(|t| t.id != c.id);
            constraints.push(c.clone());
        }
        let mut scenarios = task.scenarios.clone();
        scenarios.extend(options.scenarios.iter().cloned());
        for s in &scenarios {
            s.validate(&plant, episode_length)?;
        }
        let noise = NoiseSpec {
            initial_conditions: merge(&task.noise.initial_conditions, &options.noise.initial_conditions),
            controls: merge(&task.noise.controls, &options.noise.controls),
            measurements: merge(&task.noise.measurements, &options.noise.measurements),
        };
        noise.validate()?;
        for id in noise.initial_conditions.keys().chain(options.initial_conditions.keys()) {
            if !plant.parameters.contains_key(id) {
                return Err(EnvError::IncompatibleId {
                    id: id.clone(),
                    message: "initial condition on an unknown parameter".into(),
                });
            }
        }
        let specs = control_specs(&task.controls)?;
        let sim = FacilitySim::new(plant.clone())?;
        Ok(Self {
            base: plant,
            task: Task::new(task)?,
            seed: options.seed,
            options,
            constraints,
            scenarios,
            noise,
            episode_length,
            max_chillers,
            specs,
            sim,
            episodes: 0,
            episode: None,
        })
    }

    /// Builds an environment from a configuration document on disk.
    pub fn from_file(path: &Path) -> Result<Self, EnvError> {
        let (doc, plant_path) = EnvDocument::from_file(path)?;
        let plant = PlantConfig::from_file(&plant_path)?;
        let task = doc.task_def()?;
        Self::new(plant, task, doc.options)
    }

    pub fn task(&self) -> &TaskDef {
        self.task.def()
    }

    pub fn action_specs(&self) -> &[&'static ControlSpec] {
        &self.specs
    }

    pub fn episode_length(&self) -> usize {
        self.episode_length
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn sim(&self) -> &FacilitySim {
        &self.sim
    }

    pub fn options(&self) -> &EnvOptions {
        &self.options
    }

    /// Restarts the episode counter under a new seed.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.episodes = 0;
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream((self.episodes << 8) | stream);
        r
    }

    /// Starts a new episode. Successive resets under one seed draw
    /// independent noise.
    pub fn reset(&mut self) -> Result<TimeStepRecord, EnvError> {
        let mut config = self.base.clone();
        for (id, v) in &self.options.initial_conditions {
            config.set_parameter(id, *v)?;
        }
        let mut ic_rng = self.rng(STREAM_INITIAL);
        for (id, kind) in &self.noise.initial_conditions {
            if let NoiseKind::Gaussian { std } = kind {
                let p = config.parameters[id];
                let v = (p.value + std * normal(&mut ic_rng)).clamp(p.min, p.max);
                config.set_parameter(id, v)?;
            }
        }
        let mut measurements = self.sim.reset(config)?;

        let mut measurement_rng = self.rng(STREAM_MEASUREMENTS);
        let mut measurement_noise = NoiseProcess::new(&self.noise.measurements);
        measurement_noise.apply(&mut measurements, &mut measurement_rng);
        let scenario_rngs: Vec<ChaCha8Rng> = (0..self.scenarios.len())
            .map(|i| self.rng(STREAM_SCENARIOS + i as u64))
            .collect();
        let scenarios = ScenarioRuntime::start(&self.scenarios, self.sim.config(), |i| scenario_rngs[i].clone());

        let applied = controls_to_map(self.sim.controls());
        let (values, mask) = self.frame(&measurements);
        let (checked, violations) = self.evaluate(&values, &applied)?;
        let task_obs = self.task.reset(&checked);

        self.episode = Some(Episode {
            step: 0,
            done: false,
            control_rng: self.rng(STREAM_CONTROLS),
            measurement_rng,
            control_noise: NoiseProcess::new(&self.noise.controls),
            measurement_noise,
            scenarios,
            last_measurements: measurements,
        });
        self.episodes += 1;
        Ok(TimeStepRecord {
            step: 0,
            kind: StepKind::First,
            reward: None,
            discount: None,
            observation: Observation {
                values,
                mask,
                violations,
                task: task_obs,
                config: config_echo(self.sim.config(), &self.specs, self.max_chillers),
            },
            applied,
        })
    }

    /// Advances one step with a normalized action in [-1, 1]^n.
    pub fn step(&mut self, action: &[f64]) -> Result<TimeStepRecord, EnvError> {
        let agent = convert_action(action, &self.specs)?;
        self.step_controls(&agent)
    }

    /// Advances one step with controls in wire units, for scripted
    /// policies. Only the task's controls may be set.
    pub fn step_controls(&mut self, agent: &ControlMap) -> Result<TimeStepRecord, EnvError> {
        for id in agent.keys() {
            if !self.specs.iter().any(|s| s.id == id) {
                return Err(EnvError::IncompatibleId {
                    id: id.clone(),
                    message: "not controlled by this task".into(),
                });
            }
        }
        let mut ep = match self.episode.take() {
            Some(ep) if !ep.done => ep,
            other => {
                self.episode = other;
                return Err(EnvError::Terminated);
            }
        };
        let k = ep.step + 1;

        let previous = controls_to_map(self.sim.controls());
        let mut commanded = agent.clone();
        ep.control_noise.apply(&mut commanded, &mut ep.control_rng);
        ep.scenarios.controls(k, &mut commanded, &previous);
        for (id, v) in ep.scenarios.parameters(k) {
            self.sim.set_parameter(&id, v)?;
        }
        let mut measurements = match self.sim.step(&commanded) {
            Ok(m) => m,
            Err(e) => {
                ep.done = true;
                self.episode = Some(ep);
                return Err(e.into());
            }
        };
        ep.measurement_noise.apply(&mut measurements, &mut ep.measurement_rng);
        ep.scenarios.measurements(k, &mut measurements, &ep.last_measurements);
        ep.last_measurements = measurements.clone();

        let (values, mask) = self.frame(&measurements);
        let (checked, violations) = self.evaluate(&values, agent)?;
        let (reward, task_obs) = self.task.reward_and_observations(&checked, &mask, &violations)?;
        let hard = violations.values().any(|s| s.is_hard());
        let last = hard || k >= self.episode_length;
        ep.step = k;
        ep.done = last;
        self.episode = Some(ep);
        Ok(TimeStepRecord {
            step: k,
            kind: if last { StepKind::Last } else { StepKind::Mid },
            reward: Some(reward),
            discount: Some(if hard { 0.0 } else { 1.0 }),
            observation: Observation {
                values,
                mask,
                violations,
                task: task_obs,
                config: config_echo(self.sim.config(), &self.specs, self.max_chillers),
            },
            applied: controls_to_map(self.sim.controls()),
        })
    }

    fn frame(&self, measurements: &MeasurementMap) -> (BTreeMap<String, f64>, Vec<bool>) {
        convert_measurements(measurements, self.sim.config().equipment.chillers, self.max_chillers)
    }

    /// Checks every constraint against the observation and, for control
    /// ids, the agent's command; the worse status wins. Returns the values
    /// the statuses were judged on.
    fn evaluate(
        &self,
        values: &BTreeMap<String, f64>,
        controls: &ControlMap,
    ) -> Result<(BTreeMap<String, f64>, BTreeMap<String, Status>), EnvError> {
        let mut checked = values.clone();
        let mut statuses = BTreeMap::new();
        for c in &self.constraints {
            let a = values.get(&c.id).map(|v| c.status(*v));
            let b = controls.get(&c.id).map(|v| c.status(*v));
            let s = match (a, b) {
                (Some(a), Some(b)) => a.worse(b),
                (Some(s), None) | (None, Some(s)) => s,
                (None, None) => return Err(EnvError::MissingId(c.id.clone())),
            };
            if let (None, Some(v)) = (a, controls.get(&c.id)) {
                checked.insert(c.id.clone(), *v);
            }
            statuses.insert(c.id.clone(), s);
        }
        Ok((checked, statuses))
    }
}
