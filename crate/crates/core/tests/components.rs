use approx::assert_relative_eq;
use proptest::prelude::*;

use coolplant_core::components::*;
use coolplant_core::ModelError;

fn chiller(a: f64, b: f64, c: f64, d: f64) -> ChillerParams {
    ChillerParams {
        a_coef: a,
        b_coef: b,
        c_coef: c,
        d_coef: d,
        cap_chilled: 10.0,
        cap_condenser: 12.0,
    }
}

/// Larger root of `D q² + L q + K` by plain bisection, starting from the
/// vertex (or zero for the linear case) and walking outward until the sign
/// flips.
fn bisect_larger_root(p: &ChillerParams, w: f64) -> f64 {
    let (a, b, c, d) = (p.a_coef, p.b_coef, p.c_coef, p.d_coef);
    let lin = c + b + d * w;
    let k = c * w - a;
    let g = |q: f64| (d * q + lin) * q + k;
    let mut lo = if d != 0.0 { -lin / (2.0 * d) } else { -1e9 };
    let g_lo = g(lo);
    let mut step = 1.0;
    let mut hi = lo + step;
    while g(hi).signum() == g_lo.signum() {
        step *= 2.0;
        hi = lo + step;
        assert!(step < 1e15, "no bracket");
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid).signum() == g_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn chiller_bisection_oracle_on_reference_point() {
    let p = chiller(500.0, 2.0, 5.0, 0.1);
    let sol = solve_chiller(285.0, 300.0, 20.0, &p).unwrap();
    let oracle = bisect_larger_root(&p, 20.0);
    assert_relative_eq!(sol.q_evaporator, oracle, max_relative = 1e-10);
    assert!((compressor_power(oracle, &p).unwrap() - 20.0).abs() < 1e-9);
    assert_relative_eq!(sol.t_chilled_out, 285.0 - oracle / 10.0, max_relative = 1e-14);
    assert_relative_eq!(sol.t_condenser_out, 300.0 + (oracle + 20.0) / 12.0, max_relative = 1e-14);
}

#[test]
fn chiller_linear_fallback() {
    let p = chiller(100.0, 1.0, 1.0, 0.0);
    let sol = solve_chiller(285.0, 300.0, 20.0, &p).unwrap();
    assert_eq!(sol.q_evaporator, (100.0 - 20.0) / 2.0);
}

#[test]
fn chiller_errors() {
    // Negative discriminant: D large and positive, constant large positive.
    let p = chiller(-1000.0, 0.0, 1.0, 1.0);
    assert!(matches!(
        solve_chiller(285.0, 300.0, 10.0, &p),
        Err(ModelError::NoRealRoot { .. })
    ));
    // Both roots negative.
    let p = chiller(-10.0, 5.0, 1.0, 0.0);
    assert!(matches!(
        solve_chiller(285.0, 300.0, 1.0, &p),
        Err(ModelError::NegativeLoad { .. })
    ));
    assert!(solve_chiller(285.0, 300.0, -1.0, &chiller(1.0, 1.0, 1.0, 0.0)).is_err());
}

prop_compose! {
    /// Coefficients and a compressor power. With D < 0 the curve has a pole
    /// at positive load, and its larger root stays below the pole only when
    /// B < A|D|/C; B is drawn negative there, as in fitted chillers.
    fn valid_chiller()(
        a in 10.0..1000.0f64,
        c in 0.5..5.0f64,
        b_u in 0.0..1.0f64,
        d in -1e-3..1e-3f64,
        w_frac in 0.0..1.0f64,
    ) -> (ChillerParams, f64) {
        let b = if d < 0.0 { -(0.5 + 1.5 * b_u) * c } else { (2.5 * b_u - 0.5) * c };
        let p = chiller(a, b, c, d);
        let w = if d < 0.0 { 3.0 * w_frac * a / c } else { 0.95 * w_frac * a / c };
        (p, w)
    }
}

/// The solved load must stay clear of the pole of the power curve.
fn on_branch(p: &ChillerParams, q: f64) -> bool {
    (p.d_coef * q + p.c_coef) / p.c_coef > 0.1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn chiller_root_reproduces_power((p, w) in valid_chiller()) {
        let sol = solve_chiller(285.0, 300.0, w, &p);
        prop_assume!(sol.as_ref().is_ok_and(|s| on_branch(&p, s.q_evaporator)));
        let sol = sol.unwrap();
        let back = compressor_power(sol.q_evaporator, &p).unwrap();
        prop_assert!((back - w).abs() < 1e-9 * w.max(1.0), "w={w} back={back}");
        let oracle = bisect_larger_root(&p, w);
        prop_assert!((oracle - sol.q_evaporator).abs() < 1e-8 * sol.q_evaporator.abs().max(1.0));
        prop_assert_eq!(sol.q_condenser, sol.q_evaporator + w);
    }

    #[test]
    fn chiller_returns_larger_root((p, w) in valid_chiller()) {
        if let Ok((hi, lo)) = load_roots(w, &p) {
            prop_assert!(hi >= lo);
        }
    }

    #[test]
    fn tower_bounded_and_monotone(
        t_wb in 270.0..305.0f64,
        approach in 0.01..30.0f64,
        pump in 0.0..100.0f64,
        fan in 0.0..100.0f64,
        c8 in -5.0..-1e-4f64,
        c9 in 0.1..2.0f64,
        c10 in 0.1..2.0f64,
    ) {
        let p = TowerParams { c8, c9, c10 };
        let t_in = t_wb + approach;
        let t = tower_leaving_temp(t_in, t_wb, pump, fan, &p).unwrap();
        prop_assert!(t_wb <= t && t <= t_in);
        let faster_fan = tower_leaving_temp(t_in, t_wb, pump, fan + 1.0, &p).unwrap();
        let faster_pump = tower_leaving_temp(t_in, t_wb, pump + 1.0, fan, &p).unwrap();
        prop_assert!(faster_fan <= t);
        prop_assert!(faster_pump <= t);
    }

    #[test]
    fn pump_inverse_roundtrip(
        target in 0.0..500.0f64,
        n_pumps in 1usize..=3,
        n_chillers in 0usize..=3,
        c11 in 0.1..3.0f64,
        a1 in 1.0..3.0f64,
        a2 in 0.0..0.3f64,
    ) {
        let p = PumpFanParams { c11, c12: 0.4, c13: 1.0, c14: 1.0, a1, a2 };
        let (freq, power) = inverse_pump_setpoint(target, n_pumps, n_chillers, &p).unwrap();
        prop_assert_eq!(power, p.pump_power(freq));
        // The bank flow model has no c11; the per-pump gain multiplies in.
        let flow = c11 * multi_pump_flow(&vec![freq; n_pumps], n_pumps, n_chillers, &p).unwrap();
        prop_assert!((flow - target).abs() <= 1e-9 * target.max(1e-300));
    }

    #[test]
    fn fan_inverse_roundtrip(
        t_wb in 275.0..300.0f64,
        approach in 0.5..20.0f64,
        frac in 0.0..0.99f64,
        pump_freq in 1.0..60.0f64,
        n_pumps in 1usize..=3,
        n_fans in 1usize..=8,
        c8 in -0.05..-1e-3f64,
        c9 in 0.2..1.5f64,
        c10 in 0.2..1.5f64,
    ) {
        let tower = TowerParams { c8, c9, c10 };
        let fan = PumpFanParams { c11: 1.0, c12: 1.0, c13: 1.0, c14: 1e-4, a1: 1.0, a2: 0.0 };
        let t_in = t_wb + approach;
        let target = t_in - frac * approach;
        let (f, power) = inverse_fan_setpoint(target, t_in, t_wb, pump_freq, n_pumps, n_fans, &tower, &fan).unwrap();
        prop_assert!(f >= 0.0);
        prop_assert_eq!(power, fan.fan_power(f));
        let t = multi_tower_leaving_temp(t_in, t_wb, &vec![pump_freq; n_pumps], &vec![f; n_fans], &tower).unwrap();
        prop_assert!((t - target).abs() < 1e-6, "t={t} target={target}");
    }

    #[test]
    fn cube_law_doubles_to_eight(f in 0.0..100.0f64, c12 in 1e-6..1.0f64) {
        let p = PumpFanParams { c11: 1.0, c12, c13: 1.0, c14: c12, a1: 1.0, a2: 0.0 };
        let (_, p1) = pump_flow_power(f, &p).unwrap();
        let (_, p2) = pump_flow_power(2.0 * f, &p).unwrap();
        prop_assert_eq!(p2, 8.0 * p1);
        let (_, q1) = fan_flow_power(f, &p).unwrap();
        let (_, q2) = fan_flow_power(2.0 * f, &p).unwrap();
        prop_assert_eq!(q2, 8.0 * q1);
    }

    #[test]
    fn pid_output_saturates(
        errors in proptest::collection::vec(-1e3..1e3f64, 1..50),
        kp in 0.0..10.0f64,
        ki in 0.0..5.0f64,
        kd in 0.0..5.0f64,
    ) {
        let g = PidGains { kp, ki, kd, output_min: -2.0, output_max: 3.0, bias: 0.5 };
        let mut s = PidState::default();
        for e in errors {
            let (next, out) = pid_step(s, e, 0.0, &g, 1.0);
            prop_assert!((-2.0..=3.0).contains(&out));
            s = next;
        }
    }
}

#[test]
fn tower_limits() {
    let p = TowerParams { c8: -1.0, c9: 1.0, c10: 1.0 };
    assert_eq!(tower_leaving_temp(303.15, 293.15, 0.0, 1.0, &p).unwrap(), 303.15);
    assert_eq!(tower_leaving_temp(303.15, 293.15, 1.0, 0.0, &p).unwrap(), 303.15);
    let t = tower_leaving_temp(303.15, 293.15, 1.0, 1.0, &p).unwrap();
    assert_relative_eq!(t, 303.15 - 10.0 * (1.0 - (-1.0f64).exp()), max_relative = 1e-15);
    let strong = TowerParams { c8: -50.0, ..p };
    assert!((tower_leaving_temp(303.15, 293.15, 1.0, 1.0, &strong).unwrap() - 293.15).abs() < 1e-6);
    let split = multi_tower_leaving_temp(303.15, 293.15, &[0.5, 0.5], &[0.5, 0.5], &p).unwrap();
    assert_eq!(split, t);
    assert!(tower_leaving_temp(293.0, 293.15, 1.0, 1.0, &p).is_err());
}

#[test]
fn pump_bank_examples() {
    let p = PumpFanParams { c11: 1.0, c12: 1.0, c13: 1.0, c14: 1.0, a1: 2.0, a2: 0.5 };
    assert_eq!(multi_pump_flow(&[10.0, 10.0], 2, 2, &p).unwrap(), 40.0);
    assert_eq!(multi_pump_flow(&[10.0, 10.0, 10.0], 3, 2, &p).unwrap(), 45.0);
    assert_eq!(inverse_pump_setpoint(40.0, 2, 2, &p).unwrap().0, 10.0);
    assert_eq!(inverse_pump_setpoint(0.0, 2, 2, &p).unwrap(), (0.0, 0.0));
    let weak = PumpFanParams { a2: 2.0, ..p };
    assert!(matches!(
        multi_pump_flow(&[1.0, 1.0], 2, 1, &weak),
        Err(ModelError::NonPositiveInteraction { .. })
    ));
    let (flow, power) = pump_flow_power(1.5, &PumpFanParams { c11: 3.2, c12: 0.4, ..p }).unwrap();
    assert_relative_eq!(flow, 4.8, max_relative = 1e-15);
    assert_relative_eq!(power, 1.35, max_relative = 1e-15);
}

#[test]
fn fan_inverse_examples() {
    let tower = TowerParams { c8: -1.0, c9: 1.0, c10: 1.0 };
    let fan = PumpFanParams { c11: 1.0, c12: 1.0, c13: 1.0, c14: 1.0, a1: 1.0, a2: 0.0 };
    let target = tower_leaving_temp(303.15, 293.15, 1.0, 1.0, &tower).unwrap();
    let (f, _) = inverse_fan_setpoint(target, 303.15, 293.15, 1.0, 1, 1, &tower, &fan).unwrap();
    assert_relative_eq!(f, 1.0, max_relative = 1e-12);
    let (f, _) = inverse_fan_setpoint(303.15, 303.15, 293.15, 1.0, 1, 1, &tower, &fan).unwrap();
    assert_eq!(f, 0.0);
    assert!(inverse_fan_setpoint(293.0, 303.15, 293.15, 1.0, 1, 1, &tower, &fan).is_err());
}

/// PI loop on a first-order lag `tau·y' = u − y`, integrated exactly over
/// each controller period.
#[test]
fn pid_first_order_lag_settles() {
    let g = PidGains { kp: 2.0, ki: 0.5, kd: 0.0, output_min: -10.0, output_max: 10.0, bias: 0.0 };
    let (tau, dt, target) = (5.0, 0.5, 1.0);
    let decay = (-dt / tau as f64).exp();
    let mut s = PidState::default();
    let mut y = 0.0;
    let mut settled_at = None;
    for k in 0..400 {
        let (next, u) = pid_step(s, target, y, &g, dt);
        s = next;
        y = u + (y - u) * decay;
        if (y - target).abs() <= 0.02 * target {
            settled_at.get_or_insert(k);
        } else {
            settled_at = None;
        }
    }
    assert!(settled_at.is_some_and(|k| k < 200), "settled at {settled_at:?}");
}
