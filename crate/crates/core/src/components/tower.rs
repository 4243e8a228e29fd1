//! Cooling tower leaving-water temperature and its inverse for fan speed.

use serde::{Deserialize, Serialize};

use crate::components::pump::PumpFanParams;
use crate::error::ModelError;

/// Effectiveness exponent coefficients of the tower model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TowerParams {
    pub c8: f64,
    pub c9: f64,
    pub c10: f64,
}

impl TowerParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.c8 < 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "tower c8 must be negative, got {}",
                self.c8
            )));
        }
        if !(self.c9 > 0.0) || !(self.c10 > 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "tower c9, c10 must be positive, got {}, {}",
                self.c9, self.c10
            )));
        }
        Ok(())
    }

    /// Fraction of the inlet-to-wet-bulb approach removed by the tower for
    /// the given total pump and fan frequencies.
    pub fn effectiveness(&self, pump_freq: f64, fan_freq: f64) -> f64 {
        let exponent = self.c8 * pump_freq.max(0.0).powf(self.c9) * fan_freq.max(0.0).powf(self.c10);
        -exponent.exp_m1()
    }
}

/// Leaving water temperature (K) of a single tower.
pub fn tower_leaving_temp(
    t_in: f64,
    t_wet_bulb: f64,
    freq_pump: f64,
    freq_fan: f64,
    params: &TowerParams,
) -> Result<f64, ModelError> {
    if !(t_in > t_wet_bulb) {
        return Err(ModelError::Domain(format!(
            "tower inlet {t_in} K must be above the wet bulb {t_wet_bulb} K"
        )));
    }
    if !(freq_pump >= 0.0) || !(freq_fan >= 0.0) {
        return Err(ModelError::Domain(format!(
            "frequencies must be nonnegative (pump {freq_pump}, fan {freq_fan})"
        )));
    }
    let eff = params.effectiveness(freq_pump, freq_fan);
    Ok((t_in - (t_in - t_wet_bulb) * eff).clamp(t_wet_bulb, t_in))
}

/// Tower bank with several pumps and fans: frequencies enter as sums.
pub fn multi_tower_leaving_temp(
    t_in: f64,
    t_wet_bulb: f64,
    pump_freqs: &[f64],
    fan_freqs: &[f64],
    params: &TowerParams,
) -> Result<f64, ModelError> {
    if pump_freqs.iter().chain(fan_freqs).any(|f| !(*f >= 0.0)) {
        return Err(ModelError::Domain("frequencies must be nonnegative".into()));
    }
    tower_leaving_temp(
        t_in,
        t_wet_bulb,
        pump_freqs.iter().sum(),
        fan_freqs.iter().sum(),
        params,
    )
}

/// Uniform per-fan frequency (Hz) and per-fan power (kW) that bring the tower
/// outlet to `target_t_out` when `n_pumps` pumps run at `pump_freq`.
#[allow(clippy::too_many_arguments)]
pub fn inverse_fan_setpoint(
    target_t_out: f64,
    t_in: f64,
    t_wet_bulb: f64,
    pump_freq: f64,
    n_pumps: usize,
    n_fans: usize,
    tower: &TowerParams,
    fan: &PumpFanParams,
) -> Result<(f64, f64), ModelError> {
    if n_pumps == 0 || n_fans == 0 {
        return Err(ModelError::Domain("need at least one pump and one fan".into()));
    }
    if !(pump_freq > 0.0) {
        return Err(ModelError::Domain(format!(
            "pump frequency must be positive, got {pump_freq}"
        )));
    }
    if !(t_in > t_wet_bulb) {
        return Err(ModelError::Domain(format!(
            "tower inlet {t_in} K must be above the wet bulb {t_wet_bulb} K"
        )));
    }
    if target_t_out > t_in {
        return Err(ModelError::Domain(format!(
            "target {target_t_out} K is above the inlet {t_in} K"
        )));
    }
    let log_arg = 1.0 + (target_t_out - t_in) / (t_in - t_wet_bulb);
    if !(log_arg > 0.0) {
        return Err(ModelError::Domain(format!(
            "target {target_t_out} K is not above the wet bulb {t_wet_bulb} K"
        )));
    }
    let total_pump = n_pumps as f64 * pump_freq;
    let base = log_arg.ln() / (tower.c8 * total_pump.powf(tower.c9));
    // ln(1) = 0 gives -0.0 here; clamp so 0^(1/c10) stays 0.
    let freq = base.max(0.0).powf(1.0 / tower.c10) / n_fans as f64;
    Ok((freq, fan.fan_power(freq)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: TowerParams = TowerParams {
        c8: -1.0,
        c9: 1.0,
        c10: 1.0,
    };

    fn fan() -> PumpFanParams {
        PumpFanParams {
            c11: 1.0,
            c12: 1.0,
            c13: 1.0,
            c14: 2.0,
            a1: 1.0,
            a2: 0.0,
        }
    }

    #[test]
    fn zero_frequency_means_no_cooling() {
        assert_eq!(tower_leaving_temp(303.15, 293.15, 0.0, 1.0, &P).unwrap(), 303.15);
        assert_eq!(tower_leaving_temp(303.15, 293.15, 1.0, 0.0, &P).unwrap(), 303.15);
    }

    #[test]
    fn strong_tower_reaches_wet_bulb() {
        let p = TowerParams { c8: -50.0, ..P };
        let t = tower_leaving_temp(303.15, 293.15, 1.0, 1.0, &p).unwrap();
        assert!((t - 293.15).abs() < 1e-6);
    }

    #[test]
    fn unit_coefficients_example() {
        let expected = 303.15 - 10.0 * (1.0 - (-1.0f64).exp());
        let t = tower_leaving_temp(303.15, 293.15, 1.0, 1.0, &P).unwrap();
        assert!((t - expected).abs() < 1e-12);
        assert!((t - 296.83).abs() < 5e-3);
    }

    #[test]
    fn inlet_below_wet_bulb_rejected() {
        assert!(tower_leaving_temp(290.0, 293.15, 1.0, 1.0, &P).is_err());
    }

    #[test]
    fn multi_tower_sums_frequencies() {
        let single = tower_leaving_temp(303.15, 293.15, 1.0, 1.0, &P).unwrap();
        let multi =
            multi_tower_leaving_temp(303.15, 293.15, &[0.5, 0.5], &[0.5, 0.5], &P).unwrap();
        assert!((single - multi).abs() < 1e-12);
        let one = multi_tower_leaving_temp(303.15, 293.15, &[0.7], &[1.3], &P).unwrap();
        assert_eq!(one, tower_leaving_temp(303.15, 293.15, 0.7, 1.3, &P).unwrap());
        let idle = multi_tower_leaving_temp(303.15, 293.15, &[1.0], &[0.0, 0.0], &P).unwrap();
        assert_eq!(idle, 303.15);
    }

    #[test]
    fn inverse_of_forward_example_is_unit_fan() {
        let target = tower_leaving_temp(303.15, 293.15, 1.0, 1.0, &P).unwrap();
        let (f, w) = inverse_fan_setpoint(target, 303.15, 293.15, 1.0, 1, 1, &P, &fan()).unwrap();
        assert!((f - 1.0).abs() < 1e-9, "{f}");
        assert!((w - 2.0 * f * f * f).abs() < 1e-12);
    }

    #[test]
    fn inverse_no_cooling_demanded() {
        let (f, w) = inverse_fan_setpoint(303.15, 303.15, 293.15, 1.0, 2, 3, &P, &fan()).unwrap();
        assert_eq!(f, 0.0);
        assert_eq!(w, 0.0);
    }

    #[test]
    fn inverse_unreachable_target() {
        let err = inverse_fan_setpoint(293.15, 303.15, 293.15, 1.0, 1, 1, &P, &fan());
        assert!(matches!(err, Err(ModelError::Domain(_))));
        let err = inverse_fan_setpoint(290.0, 303.15, 293.15, 1.0, 1, 1, &P, &fan());
        assert!(err.is_err());
    }
}
