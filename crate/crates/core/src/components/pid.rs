//! Positional PID with clamped integral and derivative on measurement.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub output_min: f64,
    pub output_max: f64,
    /// Output at zero error and zero accumulated state.
    #[serde(default)]
    pub bias: f64,
}

impl PidGains {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.output_min < self.output_max) {
            return Err(ModelError::InvalidParameter(format!(
                "PID output_min {} must be below output_max {}",
                self.output_min, self.output_max
            )));
        }
        Ok(())
    }

    /// Same gains with different saturation bounds.
    pub fn with_limits(&self, output_min: f64, output_max: f64) -> Self {
        Self {
            output_min,
            output_max,
            ..*self
        }
    }

    /// Range the unsaturated output may occupy: twice the saturation span,
    /// centred on it.
    fn windup_band(&self) -> (f64, f64) {
        let half = 0.5 * (self.output_max - self.output_min);
        (self.output_min - half, self.output_max + half)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PidState {
    /// Accumulated error·seconds.
    pub integral: f64,
    pub prev_measurement: Option<f64>,
}

impl PidState {
    /// State whose integral alone produces `output` with zero error.
    pub fn holding(output: f64, gains: &PidGains) -> Self {
        let integral = if gains.ki != 0.0 {
            (output - gains.bias) / gains.ki
        } else {
            0.0
        };
        Self {
            integral,
            prev_measurement: None,
        }
    }
}

/// Advances the controller by `dt` seconds and returns the new state and the
/// saturated actuator output.
pub fn pid_step(
    state: PidState,
    setpoint: f64,
    measurement: f64,
    gains: &PidGains,
    dt: f64,
) -> (PidState, f64) {
    debug_assert!(dt > 0.0);
    let error = setpoint - measurement;
    let mut integral = state.integral + error * dt;
    if gains.ki != 0.0 {
        let (lo, hi) = gains.windup_band();
        let a = (lo - gains.bias) / gains.ki;
        let b = (hi - gains.bias) / gains.ki;
        integral = integral.clamp(a.min(b), a.max(b));
    }
    let derivative = match state.prev_measurement {
        Some(prev) => -(measurement - prev) / dt,
        None => 0.0,
    };
    let raw = gains.bias + gains.kp * error + gains.ki * integral + gains.kd * derivative;
    let output = raw.clamp(gains.output_min, gains.output_max);
    (
        PidState {
            integral,
            prev_measurement: Some(measurement),
        },
        output,
    )
}
