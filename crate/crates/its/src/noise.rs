//! Per-id noise channels for initial conditions, controls and measurements.

use std::collections::BTreeMap;

use coolplant_core::weather::OrnsteinUhlenbeck;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::EnvError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseKind {
    #[default]
    None,
    /// Additive white noise, `std` in the unit of the id.
    Gaussian { std: f64 },
    /// Each step the value freezes with `probability`, repeating the last
    /// pre-freeze value for a uniform number of steps in
    /// `[min_steps, max_steps]`.
    Frozen {
        probability: f64,
        min_steps: usize,
        max_steps: usize,
    },
    /// Additive AR(1) offset with stationary standard deviation `amplitude`
    /// and correlation time `correlation_steps`.
    Drift {
        correlation_steps: f64,
        amplitude: f64,
    },
}

impl NoiseKind {
    pub fn validate(&self, id: &str) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::Noise(format!("`{id}`: {m}")));
        match *self {
            NoiseKind::None => Ok(()),
            NoiseKind::Gaussian { std } if !(std >= 0.0) || !std.is_finite() => {
                bad("std must be finite and non-negative")
            }
            NoiseKind::Frozen {
                probability,
                min_steps,
                max_steps,
            } => {
                if !(0.0..=1.0).contains(&probability) {
                    bad("freeze probability must lie in [0, 1]")
                } else if min_steps == 0 || max_steps < min_steps {
                    bad("freeze durations must satisfy 0 < min_steps <= max_steps")
                } else {
                    Ok(())
                }
            }
            NoiseKind::Drift {
                correlation_steps,
                amplitude,
            } => {
                if !(correlation_steps > 0.0) || !correlation_steps.is_finite() {
                    bad("correlation time must be positive")
                } else if !(amplitude >= 0.0) || !amplitude.is_finite() {
                    bad("amplitude must be finite and non-negative")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Independent noise specifications for the three entry points.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Configuration parameter id → noise. Only `none` and `gaussian` are
    /// meaningful here since the perturbation is drawn once per reset.
    pub initial_conditions: BTreeMap<String, NoiseKind>,
    pub controls: BTreeMap<String, NoiseKind>,
    pub measurements: BTreeMap<String, NoiseKind>,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        for (id, k) in &self.initial_conditions {
            k.validate(id)?;
            if !matches!(k, NoiseKind::None | NoiseKind::Gaussian { .. }) {
                return Err(EnvError::Noise(format!(
                    "`{id}`: initial-condition noise must be none or gaussian"
                )));
            }
        }
        for (id, k) in self.controls.iter().chain(&self.measurements) {
            k.validate(id)?;
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        let quiet = |m: &BTreeMap<String, NoiseKind>| m.values().all(|k| *k == NoiseKind::None);
        quiet(&self.initial_conditions) && quiet(&self.controls) && quiet(&self.measurements)
    }
}

pub(crate) fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Advances a one-step-per-call Ornstein-Uhlenbeck (AR(1)) process.
pub(crate) fn advance(ou: &mut OrnsteinUhlenbeck, rng: &mut ChaCha8Rng) -> f64 {
    ou.advance(1.0, normal(rng))
}

/// Running state of one noisy id.
#[derive(Debug, Clone)]
struct Channel {
    kind: NoiseKind,
    /// Last value emitted; the freeze source.
    last: Option<f64>,
    frozen_left: usize,
    drift: Option<OrnsteinUhlenbeck>,
}

impl Channel {
    fn new(kind: NoiseKind) -> Self {
        let drift = match kind {
            NoiseKind::Drift {
                correlation_steps,
                amplitude,
            } => Some(OrnsteinUhlenbeck::new(correlation_steps, amplitude)),
            _ => None,
        };
        Self {
            kind,
            last: None,
            frozen_left: 0,
            drift,
        }
    }

    fn apply(&mut self, value: f64, rng: &mut ChaCha8Rng) -> f64 {
        let out = match self.kind {
            NoiseKind::None => value,
            NoiseKind::Gaussian { std } => value + std * normal(rng),
            NoiseKind::Frozen {
                probability,
                min_steps,
                max_steps,
            } => match self.last {
                Some(held) if self.frozen_left > 0 => {
                    self.frozen_left -= 1;
                    held
                }
                Some(held) if rng.random::<f64>() < probability => {
                    self.frozen_left = rng.random_range(min_steps..=max_steps) - 1;
                    held
                }
                _ => value,
            },
            NoiseKind::Drift { .. } => match &mut self.drift {
                Some(ou) => value + advance(ou, rng),
                None => value,
            },
        };
        self.last = Some(out);
        out
    }
}

/// Applies a set of per-id channels to successive value maps. Ids absent
/// from the map are left alone.
#[derive(Debug, Clone, Default)]
pub struct NoiseProcess {
    channels: BTreeMap<String, Channel>,
}

impl NoiseProcess {
    pub fn new(spec: &BTreeMap<String, NoiseKind>) -> Self {
        Self {
            channels: spec
                .iter()
                .filter(|(_, k)| **k != NoiseKind::None)
                .map(|(id, k)| (id.clone(), Channel::new(k.clone())))
                .collect(),
        }
    }

    pub fn apply(&mut self, values: &mut BTreeMap<String, f64>, rng: &mut ChaCha8Rng) {
        for (id, ch) in &mut self.channels {
            if let Some(v) = values.get_mut(id) {
                *v = ch.apply(*v, rng);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn validation() {
        assert!(NoiseKind::Gaussian { std: -1.0 }.validate("x").is_err());
        assert!(NoiseKind::Frozen {
            probability: 0.5,
            min_steps: 0,
            max_steps: 2
        }
        .validate("x")
        .is_err());
        assert!(NoiseKind::Drift {
            correlation_steps: 0.0,
            amplitude: 1.0
        }
        .validate("x")
        .is_err());
        let mut spec = NoiseSpec::default();
        spec.initial_conditions.insert(
            "dry_bulb".into(),
            NoiseKind::Drift {
                correlation_steps: 2.0,
                amplitude: 1.0,
            },
        );
        assert!(spec.validate().is_err());
    }

    #[test]
    fn frozen_with_certain_probability_holds_first_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ch = Channel::new(NoiseKind::Frozen {
            probability: 1.0,
            min_steps: 3,
            max_steps: 3,
        });
        assert_eq!(ch.apply(1.0, &mut rng), 1.0);
        for v in [2.0, 3.0, 4.0, 5.0] {
            assert_eq!(ch.apply(v, &mut rng), 1.0);
        }
    }

    #[test]
    fn drift_has_requested_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ch = Channel::new(NoiseKind::Drift {
            correlation_steps: 3.0,
            amplitude: 2.0,
        });
        let xs: Vec<f64> = (0..50_000).map(|_| ch.apply(0.0, &mut rng)).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((var.sqrt() - 2.0).abs() < 0.1, "{}", var.sqrt());
    }
}
