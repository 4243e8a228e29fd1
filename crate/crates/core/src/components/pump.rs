//! Affinity-law pumps and fans, single and banked.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Flow and power gains for a pump bank and its companion fans.
///
/// `c11`/`c13` map frequency to water/air flow, `c12`/`c14` are the cube-law
/// power gains, and `a1`/`a2` describe how extra pumps beyond the number of
/// running chillers weaken each pump's contribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpFanParams {
    pub c11: f64,
    pub c12: f64,
    pub c13: f64,
    pub c14: f64,
    pub a1: f64,
    pub a2: f64,
}

impl PumpFanParams {
    /// Checks the sign constraints and that the interaction factor stays
    /// positive for every pump/chiller combination up to the given maxima.
    pub fn validate(&self, max_pumps: usize, min_chillers: usize) -> Result<(), ModelError> {
        for (name, v) in [
            ("c11", self.c11),
            ("c12", self.c12),
            ("c13", self.c13),
            ("c14", self.c14),
            ("a1", self.a1),
        ] {
            if !(v > 0.0) {
                return Err(ModelError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.a2 >= 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "a2 must be nonnegative, got {}",
                self.a2
            )));
        }
        let worst = self.interaction(max_pumps, min_chillers);
        if !(worst > 0.0) {
            return Err(ModelError::NonPositiveInteraction { factor: worst });
        }
        Ok(())
    }

    /// `a1 − a2·(n_pumps − n_chillers)`.
    pub fn interaction(&self, n_pumps: usize, n_chillers: usize) -> f64 {
        self.a1 - self.a2 * (n_pumps as f64 - n_chillers as f64)
    }

    pub fn pump_power(&self, freq: f64) -> f64 {
        self.c12 * (freq * freq * freq)
    }

    pub fn fan_power(&self, freq: f64) -> f64 {
        self.c14 * (freq * freq * freq)
    }
}

fn check_freq(freq: f64) -> Result<(), ModelError> {
    if freq >= 0.0 && freq.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Domain(format!(
            "frequency must be finite and nonnegative, got {freq}"
        )))
    }
}

/// Water flow (kg/s) and power (kW) of one pump.
pub fn pump_flow_power(freq: f64, params: &PumpFanParams) -> Result<(f64, f64), ModelError> {
    check_freq(freq)?;
    Ok((params.c11 * freq, params.pump_power(freq)))
}

/// Air flow (kg/s) and power (kW) of one fan.
pub fn fan_flow_power(freq: f64, params: &PumpFanParams) -> Result<(f64, f64), ModelError> {
    check_freq(freq)?;
    Ok((params.c13 * freq, params.fan_power(freq)))
}

/// Total flow of a pump bank running alongside `n_chillers` chillers.
pub fn multi_pump_flow(
    freqs: &[f64],
    n_pumps: usize,
    n_chillers: usize,
    params: &PumpFanParams,
) -> Result<f64, ModelError> {
    if freqs.len() != n_pumps {
        return Err(ModelError::ArityMismatch {
            expected: n_pumps,
            got: freqs.len(),
        });
    }
    let factor = params.interaction(n_pumps, n_chillers);
    if !(factor > 0.0) {
        return Err(ModelError::NonPositiveInteraction { factor });
    }
    for f in freqs {
        check_freq(*f)?;
    }
    Ok(freqs.iter().map(|f| f * factor).sum())
}

/// Uniform per-pump frequency (Hz) and per-pump power (kW) delivering
/// `target_flow` kg/s through the bank.
pub fn inverse_pump_setpoint(
    target_flow: f64,
    n_pumps: usize,
    n_chillers: usize,
    params: &PumpFanParams,
) -> Result<(f64, f64), ModelError> {
    if n_pumps == 0 {
        return Err(ModelError::Domain("pump bank needs at least one pump".into()));
    }
    if !(target_flow >= 0.0) {
        return Err(ModelError::Domain(format!(
            "target flow must be nonnegative, got {target_flow}"
        )));
    }
    let factor = params.interaction(n_pumps, n_chillers);
    if !(factor > 0.0) {
        return Err(ModelError::NonPositiveInteraction { factor });
    }
    let freq = target_flow / (params.c11 * n_pumps as f64 * factor);
    Ok((freq, params.pump_power(freq)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(c11: f64, c12: f64, a1: f64, a2: f64) -> PumpFanParams {
        PumpFanParams {
            c11,
            c12,
            c13: 2.0,
            c14: 0.5,
            a1,
            a2,
        }
    }

    #[test]
    fn zero_frequency() {
        assert_eq!(pump_flow_power(0.0, &params(1.0, 1.0, 1.0, 0.0)).unwrap(), (0.0, 0.0));
        assert_eq!(fan_flow_power(0.0, &params(1.0, 1.0, 1.0, 0.0)).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn cube_law() {
        assert_eq!(pump_flow_power(2.0, &params(1.0, 1.0, 1.0, 0.0)).unwrap(), (2.0, 8.0));
        let (m, w) = pump_flow_power(1.5, &params(3.2, 0.4, 1.0, 0.0)).unwrap();
        assert!((m - 4.8).abs() < 1e-12);
        assert!((w - 1.35).abs() < 1e-12);
        let (a, w) = fan_flow_power(2.0, &params(1.0, 1.0, 1.0, 0.0)).unwrap();
        assert_eq!((a, w), (4.0, 4.0));
    }

    #[test]
    fn negative_frequency_rejected() {
        assert!(pump_flow_power(-1.0, &params(1.0, 1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn banked_flow() {
        let p = params(1.0, 1.0, 2.0, 0.5);
        assert_eq!(multi_pump_flow(&[10.0, 10.0], 2, 2, &p).unwrap(), 40.0);
        assert_eq!(multi_pump_flow(&[10.0, 10.0, 10.0], 3, 2, &p).unwrap(), 45.0);
        assert_eq!(multi_pump_flow(&[0.0, 0.0], 2, 1, &p).unwrap(), 0.0);
    }

    #[test]
    fn banked_flow_errors() {
        let p = params(1.0, 1.0, 1.0, 0.5);
        assert!(matches!(
            multi_pump_flow(&[1.0], 2, 2, &p),
            Err(ModelError::ArityMismatch { .. })
        ));
        assert!(matches!(
            multi_pump_flow(&[1.0, 1.0, 1.0], 3, 1, &p),
            Err(ModelError::NonPositiveInteraction { .. })
        ));
    }

    #[test]
    fn inverse_examples() {
        let p = params(1.0, 1.0, 2.0, 0.5);
        assert_eq!(inverse_pump_setpoint(0.0, 2, 2, &p).unwrap(), (0.0, 0.0));
        let (f, w) = inverse_pump_setpoint(40.0, 2, 2, &p).unwrap();
        assert_eq!(f, 10.0);
        assert_eq!(w, 1000.0);
        assert!(matches!(
            inverse_pump_setpoint(1.0, 3, 0, &params(1.0, 1.0, 1.0, 0.5)),
            Err(ModelError::NonPositiveInteraction { .. })
        ));
    }

    #[test]
    fn validate_checks_topology_range() {
        let p = params(1.0, 1.0, 1.0, 0.4);
        assert!(p.validate(3, 0).is_err());
        assert!(p.validate(3, 1).is_ok());
        assert!(params(1.0, 0.0, 1.0, 0.0).validate(1, 1).is_err());
    }
}
