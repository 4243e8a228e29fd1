//! Four-bound limits on observables and controls.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::EnvError;

/// Hard limits end the episode, soft limits only cost reward. Infinite
/// bounds are allowed for one-sided constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub id: String,
    pub hard_lower: f64,
    pub soft_lower: f64,
    pub soft_upper: f64,
    pub hard_upper: f64,
}

impl Constraint {
    pub fn new(
        id: impl Into<String>,
        hard_lower: f64,
        soft_lower: f64,
        soft_upper: f64,
        hard_upper: f64,
    ) -> Result<Self, EnvError> {
        let c = Self {
            id: id.into(),
            hard_lower,
            soft_lower,
            soft_upper,
            hard_upper,
        };
        c.validate()?;
        Ok(c)
    }

    /// A constraint whose soft band equals its hard band.
    pub fn hard(id: impl Into<String>, lower: f64, upper: f64) -> Result<Self, EnvError> {
        Self::new(id, lower, lower, upper, upper)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let ordered = self.hard_lower <= self.soft_lower
            && self.soft_lower < self.soft_upper
            && self.soft_upper <= self.hard_upper;
        if !ordered {
            return Err(EnvError::Constraint {
                id: self.id.clone(),
                message: format!(
                    "need hard_lower <= soft_lower < soft_upper <= hard_upper, got {} {} {} {}",
                    self.hard_lower, self.soft_lower, self.soft_upper, self.hard_upper
                ),
            });
        }
        Ok(())
    }

    /// Bounds are inclusive inward: a value exactly on a soft bound is fine,
    /// a value exactly on a hard bound is only a soft violation.
    pub fn status(&self, value: f64) -> Status {
        if value.is_nan() {
            Status::HardHigh
        } else if value < self.hard_lower {
            Status::HardLow
        } else if value > self.hard_upper {
            Status::HardHigh
        } else if value < self.soft_lower {
            Status::SoftLow
        } else if value > self.soft_upper {
            Status::SoftHigh
        } else {
            Status::Ok
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    SoftLow,
    SoftHigh,
    HardLow,
    HardHigh,
}

impl Status {
    pub fn is_soft(self) -> bool {
        matches!(self, Status::SoftLow | Status::SoftHigh)
    }

    pub fn is_hard(self) -> bool {
        matches!(self, Status::HardLow | Status::HardHigh)
    }

    /// Severity rank used when one id is checked more than once per step.
    pub fn severity(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::SoftLow | Status::SoftHigh => 1,
            Status::HardLow | Status::HardHigh => 2,
        }
    }

    /// The more severe of two statuses; `self` on ties.
    pub fn worse(self, other: Status) -> Status {
        if other.severity() > self.severity() {
            other
        } else {
            self
        }
    }

    /// Indicator value exposed in observations: 0 ok, ±1 soft, ±2 hard.
    pub fn indicator(self) -> f64 {
        match self {
            Status::Ok => 0.0,
            Status::SoftLow => -1.0,
            Status::SoftHigh => 1.0,
            Status::HardLow => -2.0,
            Status::HardHigh => 2.0,
        }
    }
}

/// Status of every constraint, in order. Each constraint id must be present
/// in `values`.
pub fn evaluate_constraints(
    values: &BTreeMap<String, f64>,
    constraints: &[Constraint],
) -> Result<Vec<Status>, EnvError> {
    constraints
        .iter()
        .map(|c| {
            values
                .get(&c.id)
                .map(|v| c.status(*v))
                .ok_or_else(|| EnvError::MissingId(c.id.clone()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c() -> Constraint {
        Constraint::new("x", 40.0, 45.0, 70.0, 75.0).unwrap()
    }

    #[test]
    fn interval_membership() {
        let c = c();
        assert_eq!(c.status(50.0), Status::Ok);
        assert_eq!(c.status(42.0), Status::SoftLow);
        assert_eq!(c.status(80.0), Status::HardHigh);
        assert_eq!(c.status(72.0), Status::SoftHigh);
        assert_eq!(c.status(30.0), Status::HardLow);
    }

    #[test]
    fn boundaries_are_inclusive_inward() {
        let c = c();
        assert_eq!(c.status(45.0), Status::Ok);
        assert_eq!(c.status(70.0), Status::Ok);
        assert_eq!(c.status(40.0), Status::SoftLow);
        assert_eq!(c.status(75.0), Status::SoftHigh);
    }

    #[test]
    fn ordering_enforced() {
        assert!(Constraint::new("x", 1.0, 0.0, 2.0, 3.0).is_err());
        assert!(Constraint::new("x", 0.0, 2.0, 2.0, 3.0).is_err());
        assert!(Constraint::new("x", 0.0, 1.0, 2.0, f64::NAN).is_err());
        assert!(Constraint::new("x", f64::NEG_INFINITY, 1.0, 2.0, f64::INFINITY).is_ok());
    }

    #[test]
    fn missing_id() {
        let values = BTreeMap::new();
        assert!(matches!(
            evaluate_constraints(&values, &[c()]),
            Err(EnvError::MissingId(_))
        ));
    }
}
