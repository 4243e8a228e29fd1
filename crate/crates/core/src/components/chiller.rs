//! Gordon-Ng style chiller: compressor power as a rational function of the
//! evaporator load, solved backwards for the load given the power.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Fitted chiller constants together with the water-side capacitance rates
/// of the current operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChillerParams {
    pub a_coef: f64,
    pub b_coef: f64,
    pub c_coef: f64,
    pub d_coef: f64,
    /// Chilled-water capacitance rate, kW/K.
    pub cap_chilled: f64,
    /// Condenser-water capacitance rate, kW/K.
    pub cap_condenser: f64,
}

impl ChillerParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let coefs = [self.a_coef, self.b_coef, self.c_coef, self.d_coef];
        if coefs.iter().any(|c| !c.is_finite()) {
            return Err(ModelError::InvalidParameter(
                "chiller coefficients must be finite".into(),
            ));
        }
        if self.c_coef == 0.0 {
            return Err(ModelError::InvalidParameter("chiller C must be nonzero".into()));
        }
        if !(self.cap_chilled > 0.0) || !(self.cap_condenser > 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "chiller capacitance rates must be positive (chilled {}, condenser {})",
                self.cap_chilled, self.cap_condenser
            )));
        }
        Ok(())
    }
}

/// Operating point of one chiller for a given compressor power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChillerSolution {
    /// Cooling load removed from the chilled water, kW.
    pub q_evaporator: f64,
    /// Heat rejected into the condenser water, kW.
    pub q_condenser: f64,
    /// Evaporator leaving water temperature, K.
    pub t_chilled_out: f64,
    /// Condenser leaving water temperature, K.
    pub t_condenser_out: f64,
}

/// Compressor power (kW) needed to remove `q_ev` kW of load.
pub fn compressor_power(q_ev: f64, params: &ChillerParams) -> Result<f64, ModelError> {
    let ChillerParams {
        a_coef: a,
        b_coef: b,
        c_coef: c,
        d_coef: d,
        ..
    } = *params;
    let denominator = d * q_ev + c;
    let scale = c.abs() + (d * q_ev).abs();
    if denominator.abs() < 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(ModelError::SingularDenominator {
            q: q_ev,
            denominator,
        });
    }
    Ok((-d * q_ev * q_ev - c * q_ev - b * q_ev + a) / denominator)
}

/// Both real roots of `D q² + (C + B + D W) q + (C W − A) = 0`, larger first.
///
/// With `D = 0` the equation is linear and the single root is returned twice.
pub fn load_roots(w_comp: f64, params: &ChillerParams) -> Result<(f64, f64), ModelError> {
    let ChillerParams {
        a_coef: a,
        b_coef: b,
        c_coef: c,
        d_coef: d,
        ..
    } = *params;
    let lin = c + b + d * w_comp;
    let constant = c * w_comp - a;

    if d == 0.0 {
        if lin == 0.0 {
            return Err(ModelError::SingularDenominator {
                q: f64::NAN,
                denominator: lin,
            });
        }
        let q = -constant / lin;
        return Ok((q, q));
    }

    let discriminant = lin * lin - 4.0 * d * constant;
    if discriminant < 0.0 {
        return Err(ModelError::NoRealRoot { discriminant });
    }
    let root = discriminant.sqrt();
    // Cancellation-free form: one root from the quadratic formula with the
    // sign of `lin`, the other from Vieta's product.
    let big = -0.5 * (lin + lin.signum() * root);
    let r1 = big / d;
    let r2 = if big != 0.0 { constant / big } else { 0.0 };
    let (hi, lo) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };
    Ok((polish(hi, d, lin, constant), polish(lo, d, lin, constant)))
}

/// One Newton step on the quadratic to shave the last ulps off a root.
fn polish(q: f64, d: f64, lin: f64, constant: f64) -> f64 {
    let value = (d * q + lin) * q + constant;
    let slope = 2.0 * d * q + lin;
    if slope != 0.0 && value != 0.0 {
        let next = q - value / slope;
        if next.is_finite() && ((d * next + lin) * next + constant).abs() < value.abs() {
            return next;
        }
    }
    q
}

/// Solves the chiller for its evaporator load and leaving temperatures given
/// the inlet temperatures and compressor power. Heat losses are neglected,
/// so the condenser rejects the evaporator load plus the compressor work.
pub fn solve_chiller(
    t_chilled_in: f64,
    t_condenser_in: f64,
    w_comp: f64,
    params: &ChillerParams,
) -> Result<ChillerSolution, ModelError> {
    params.validate()?;
    if !(w_comp >= 0.0) {
        return Err(ModelError::InvalidParameter(format!(
            "compressor power must be nonnegative, got {w_comp}"
        )));
    }
    let (q_evaporator, _) = load_roots(w_comp, params)?;
    if q_evaporator < 0.0 {
        return Err(ModelError::NegativeLoad { q: q_evaporator });
    }
    let q_condenser = q_evaporator + w_comp;
    Ok(ChillerSolution {
        q_evaporator,
        q_condenser,
        t_chilled_out: t_chilled_in - q_evaporator / params.cap_chilled,
        t_condenser_out: t_condenser_in + q_condenser / params.cap_condenser,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, b: f64, c: f64, d: f64) -> ChillerParams {
        ChillerParams {
            a_coef: a,
            b_coef: b,
            c_coef: c,
            d_coef: d,
            cap_chilled: 10.0,
            cap_condenser: 12.0,
        }
    }

    #[test]
    fn power_at_zero_load_is_a_over_c() {
        assert_eq!(compressor_power(0.0, &params(100.0, 1.0, 1.0, 0.0)).unwrap(), 100.0);
    }

    #[test]
    fn power_linear_degenerate() {
        assert_eq!(compressor_power(40.0, &params(100.0, 1.0, 1.0, 0.0)).unwrap(), 20.0);
    }

    #[test]
    fn power_direct_substitution() {
        // (-0.1*100 - 5*10 - 2*10 + 500) / (0.1*10 + 5) = 420 / 6
        let w = compressor_power(10.0, &params(500.0, 2.0, 5.0, 0.1)).unwrap();
        assert!((w - 70.0).abs() < 1e-12);
    }

    #[test]
    fn singular_denominator_rejected() {
        let err = compressor_power(10.0, &params(1.0, 1.0, 1.0, -0.1)).unwrap_err();
        assert!(matches!(err, ModelError::SingularDenominator { .. }));
    }

    #[test]
    fn zero_power_zero_load_passes_through() {
        let p = params(0.0, 1.0, 2.0, 0.05);
        let sol = solve_chiller(285.0, 300.0, 0.0, &p).unwrap();
        assert_eq!(sol.q_evaporator, 0.0);
        assert_eq!(sol.t_chilled_out, 285.0);
        assert_eq!(sol.t_condenser_out, 300.0);
    }

    #[test]
    fn linear_fallback_when_d_is_zero() {
        let p = params(500.0, 2.0, 5.0, 0.0);
        let sol = solve_chiller(285.0, 300.0, 20.0, &p).unwrap();
        assert_eq!(sol.q_evaporator, (500.0 - 5.0 * 20.0) / (5.0 + 2.0));
    }

    #[test]
    fn no_real_root_reported() {
        // D > 0 and C W − A > 0 with a tiny linear term: discriminant < 0.
        let p = params(0.0, -1.0, 1.0, 1.0);
        let err = solve_chiller(285.0, 300.0, 1.0, &p).unwrap_err();
        assert!(matches!(err, ModelError::NoRealRoot { .. }), "{err:?}");
    }

    #[test]
    fn negative_load_reported() {
        // W above the idle power of a chiller whose power falls with load.
        let p = params(100.0, 1.0, 1.0, 0.0);
        let err = solve_chiller(285.0, 300.0, 150.0, &p).unwrap_err();
        assert!(matches!(err, ModelError::NegativeLoad { .. }));
    }

    #[test]
    fn larger_root_is_returned() {
        let p = params(40.0, -1.1, 1.0, -8.0e-5);
        let (hi, lo) = load_roots(100.0, &p).unwrap();
        assert!(hi > lo);
        let sol = solve_chiller(290.0, 300.0, 100.0, &p).unwrap();
        assert_eq!(sol.q_evaporator, hi);
        assert!(sol.q_evaporator > 0.0);
    }

    #[test]
    fn energy_balance_holds() {
        let p = params(500.0, 2.0, 5.0, 0.1);
        let sol = solve_chiller(285.0, 300.0, 20.0, &p).unwrap();
        assert_eq!(sol.q_condenser, sol.q_evaporator + 20.0);
        assert!(sol.t_condenser_out > 300.0);
        assert!(sol.t_chilled_out < 285.0);
    }
}
