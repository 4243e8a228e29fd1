//! Least-squares fitting of model coefficients to plant telemetry.
//!
//! Cube laws and the tower effectiveness exponent are linear after taking
//! logarithms and are solved directly. The chiller curve is fitted on its
//! compressor-power residuals with Levenberg-Marquardt, started from the
//! linear equation-error solution.

use std::collections::BTreeMap;
use std::io::Read;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::components::{compressor_power, ChillerParams};
use crate::config::Calibration;
use crate::error::CalibrationError;
use crate::ids::telemetry as col;

/// Which relation to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// A, B, D of the chiller curve (C is a fixed normalization).
    Chiller,
    /// c12 from frequency and power.
    PumpPower,
    /// c11 from frequency and flow.
    PumpFlow,
    /// c14
    FanPower,
    /// c13
    FanFlow,
    /// c8, c9, c10 from tower inlet, wet bulb, frequencies and outlet.
    Tower,
    /// a1, a2 from bank flow across pump and chiller counts.
    PumpBank,
}

impl Model {
    pub const ALL: [Model; 7] = [
        Model::Chiller,
        Model::PumpPower,
        Model::PumpFlow,
        Model::FanPower,
        Model::FanFlow,
        Model::Tower,
        Model::PumpBank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::Chiller => "chiller",
            Model::PumpPower => "pump_power",
            Model::PumpFlow => "pump_flow",
            Model::FanPower => "fan_power",
            Model::FanFlow => "fan_flow",
            Model::Tower => "tower",
            Model::PumpBank => "pump_bank",
        }
    }

    /// Telemetry columns the fit reads.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Model::Chiller => &[col::EVAPORATOR_LOAD, col::COMPRESSOR_POWER],
            Model::PumpPower => &[col::PUMP_FREQ, col::PUMP_POWER],
            Model::PumpFlow => &[col::PUMP_FREQ, col::PUMP_FLOW],
            Model::FanPower => &[col::FAN_FREQ, col::FAN_POWER],
            Model::FanFlow => &[col::FAN_FREQ, col::FAN_FLOW],
            Model::Tower => &[
                col::TOWER_INLET_TEMP,
                col::WET_BULB,
                col::PUMP_FREQ,
                col::FAN_FREQ,
                col::TOWER_LEAVING_TEMP,
            ],
            Model::PumpBank => &[
                col::PUMP_FREQ,
                col::PUMPS_RUNNING,
                col::CHILLERS_RUNNING,
                col::BANK_FLOW,
            ],
        }
    }

    fn free_coefficients(self) -> usize {
        match self {
            Model::Chiller | Model::Tower => 3,
            Model::PumpBank => 2,
            _ => 1,
        }
    }
}

impl FromStr for Model {
    type Err = CalibrationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CalibrationError::UnknownModel(s.to_string()))
    }
}

/// A numeric table with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Telemetry {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Reads a comma-separated table with a header row.
    pub fn from_reader<R: Read>(source: R) -> Result<Self, CalibrationError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
        let columns = reader.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|v| {
                    v.parse::<f64>().map_err(|e| CalibrationError::Parse {
                        row: i + 1,
                        message: format!("`{v}`: {e}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, CalibrationError> {
        let j = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CalibrationError::MissingColumn(name.to_string()))?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Value of C the chiller fit is normalized to. The curve is invariant
    /// to a common scaling of A–D, so one constant must be pinned.
    pub c_coef: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            c_coef: 1.0,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub model: Model,
    pub coefficients: BTreeMap<String, f64>,
    pub rows: usize,
    pub iterations: usize,
    /// Root-mean-square output residual, in the output column's unit.
    pub rmse: f64,
    pub mean_output: f64,
    /// Model minus measurement, per used row.
    pub residuals: Vec<f64>,
}

impl CalibrationReport {
    /// Writes the fitted coefficients into `target`; pump and fan models go
    /// to the given bank.
    pub fn apply(&self, target: &mut Calibration, bank: Bank) {
        let pf = match bank {
            Bank::Condenser => &mut target.condenser,
            Bank::Chilled => &mut target.chilled,
        };
        for (name, v) in &self.coefficients {
            let v = *v;
            match name.as_str() {
                "a_coef" => target.chiller.a_coef = v,
                "b_coef" => target.chiller.b_coef = v,
                "c_coef" => target.chiller.c_coef = v,
                "d_coef" => target.chiller.d_coef = v,
                "c8" => target.tower.c8 = v,
                "c9" => target.tower.c9 = v,
                "c10" => target.tower.c10 = v,
                "c11" => pf.c11 = v,
                "c12" => pf.c12 = v,
                "c13" => pf.c13 = v,
                "c14" => pf.c14 = v,
                "a1" => pf.a1 = v,
                "a2" => pf.a2 = v,
                _ => {}
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bank {
    Condenser,
    Chilled,
}

/// Linear least squares via SVD, refusing ill-conditioned designs.
fn least_squares(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>, CalibrationError> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < 1e12) {
        return Err(CalibrationError::RankDeficient { condition });
    }
    svd.solve(&b, 0.0)
        .map_err(|_| CalibrationError::RankDeficient { condition })
}

fn require(model: Model, rows: usize) -> Result<(), CalibrationError> {
    let required = 4 * model.free_coefficients();
    if rows < required {
        return Err(CalibrationError::InsufficientData { rows, required });
    }
    Ok(())
}

fn report(
    model: Model,
    coefficients: &[(&str, f64)],
    predicted: &[f64],
    measured: &[f64],
    iterations: usize,
) -> CalibrationReport {
    let residuals: Vec<f64> = predicted.iter().zip(measured).map(|(p, m)| p - m).collect();
    let n = residuals.len().max(1) as f64;
    CalibrationReport {
        model,
        coefficients: coefficients.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        rows: residuals.len(),
        iterations,
        rmse: (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt(),
        mean_output: measured.iter().sum::<f64>() / n,
        residuals,
    }
}

/// Fits `model` to `telemetry`.
pub fn calibrate(
    model: Model,
    telemetry: &Telemetry,
    options: &FitOptions,
) -> Result<CalibrationReport, CalibrationError> {
    let cols: Vec<Vec<f64>> = model
        .columns()
        .iter()
        .map(|c| telemetry.column(c))
        .collect::<Result<_, _>>()?;
    match model {
        Model::PumpPower | Model::FanPower => {
            let name = if model == Model::PumpPower { "c12" } else { "c14" };
            fit_cube(model, name, &cols[0], &cols[1])
        }
        Model::PumpFlow | Model::FanFlow => {
            let name = if model == Model::PumpFlow { "c11" } else { "c13" };
            fit_proportional(model, name, &cols[0], &cols[1])
        }
        Model::Tower => fit_tower(&cols),
        Model::PumpBank => fit_pump_bank(&cols),
        Model::Chiller => fit_chiller(&cols[0], &cols[1], options),
    }
}

/// `P = c·f³`, fitted as `ln P − 3 ln f = ln c`.
fn fit_cube(model: Model, name: &str, f: &[f64], p: &[f64]) -> Result<CalibrationReport, CalibrationError> {
    let used: Vec<(f64, f64)> = f
        .iter()
        .zip(p)
        .filter(|(f, p)| **f > 0.0 && **p > 0.0)
        .map(|(f, p)| (*f, *p))
        .collect();
    require(model, used.len())?;
    let a = DMatrix::from_element(used.len(), 1, 1.0);
    let b = DVector::from_iterator(used.len(), used.iter().map(|(f, p)| p.ln() - 3.0 * f.ln()));
    let c = least_squares(a, b)?[0].exp();
    let predicted: Vec<f64> = used.iter().map(|(f, _)| c * f * f * f).collect();
    let measured: Vec<f64> = used.iter().map(|(_, p)| *p).collect();
    Ok(report(model, &[(name, c)], &predicted, &measured, 0))
}

/// `y = c·f` through the origin.
fn fit_proportional(
    model: Model,
    name: &str,
    f: &[f64],
    y: &[f64],
) -> Result<CalibrationReport, CalibrationError> {
    require(model, f.len())?;
    let a = DMatrix::from_column_slice(f.len(), 1, f);
    let c = least_squares(a, DVector::from_column_slice(y))?[0];
    let predicted: Vec<f64> = f.iter().map(|f| c * f).collect();
    Ok(report(model, &[(name, c)], &predicted, y, 0))
}

/// `ln(−ln(1 − ε)) = ln(−c8) + c9 ln P_pump + c10 ln P_fan`.
fn fit_tower(cols: &[Vec<f64>]) -> Result<CalibrationReport, CalibrationError> {
    let (t_in, wb, pump, fan, t_out) = (&cols[0], &cols[1], &cols[2], &cols[3], &cols[4]);
    let mut design = Vec::new();
    let mut rhs = Vec::new();
    let mut used = Vec::new();
    for i in 0..t_in.len() {
        let approach = t_in[i] - wb[i];
        let eff = (t_in[i] - t_out[i]) / approach;
        if approach > 0.0 && eff > 0.0 && eff < 1.0 && pump[i] > 0.0 && fan[i] > 0.0 {
            design.extend([1.0, pump[i].ln(), fan[i].ln()]);
            rhs.push((-(-eff).ln_1p()).ln());
            used.push(i);
        }
    }
    require(Model::Tower, used.len())?;
    let a = DMatrix::from_row_slice(used.len(), 3, &design);
    let x = least_squares(a, DVector::from_vec(rhs))?;
    let (c8, c9, c10) = (-x[0].exp(), x[1], x[2]);
    let predicted: Vec<f64> = used
        .iter()
        .map(|&i| {
            let eff = -(c8 * pump[i].powf(c9) * fan[i].powf(c10)).exp_m1();
            t_in[i] - (t_in[i] - wb[i]) * eff
        })
        .collect();
    let measured: Vec<f64> = used.iter().map(|&i| t_out[i]).collect();
    Ok(report(
        Model::Tower,
        &[("c8", c8), ("c9", c9), ("c10", c10)],
        &predicted,
        &measured,
        0,
    ))
}

/// `flow = N_p·f·(a1 − a2·(N_p − N_ch))`, linear in (a1, a2).
fn fit_pump_bank(cols: &[Vec<f64>]) -> Result<CalibrationReport, CalibrationError> {
    let (f, np, nch, flow) = (&cols[0], &cols[1], &cols[2], &cols[3]);
    let n = f.len();
    require(Model::PumpBank, n)?;
    let mut design = Vec::with_capacity(2 * n);
    for i in 0..n {
        let total = np[i] * f[i];
        design.extend([total, -total * (np[i] - nch[i])]);
    }
    let x = least_squares(DMatrix::from_row_slice(n, 2, &design), DVector::from_column_slice(flow))?;
    let predicted: Vec<f64> = (0..n)
        .map(|i| np[i] * f[i] * (x[0] - x[1] * (np[i] - nch[i])))
        .collect();
    Ok(report(Model::PumpBank, &[("a1", x[0]), ("a2", x[1])], &predicted, flow, 0))
}

fn chiller_params(x: &DVector<f64>, c: f64) -> ChillerParams {
    ChillerParams {
        a_coef: x[0],
        b_coef: x[1],
        c_coef: c,
        d_coef: x[2],
        cap_chilled: 1.0,
        cap_condenser: 1.0,
    }
}

/// Compressor-power residuals and their Jacobian in (A, B, D).
fn chiller_residuals(
    x: &DVector<f64>,
    c: f64,
    q: &[f64],
    w: &[f64],
) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let params = chiller_params(x, c);
    let n = q.len();
    let mut r = DVector::zeros(n);
    let mut j = DMatrix::zeros(n, 3);
    for i in 0..n {
        let model = compressor_power(q[i], &params).ok()?;
        let den = x[2] * q[i] + c;
        r[i] = model - w[i];
        j[(i, 0)] = 1.0 / den;
        j[(i, 1)] = -q[i] / den;
        j[(i, 2)] = -q[i] * (q[i] + model) / den;
    }
    Some((r, j))
}

fn fit_chiller(q: &[f64], w: &[f64], options: &FitOptions) -> Result<CalibrationReport, CalibrationError> {
    let n = q.len();
    require(Model::Chiller, n)?;
    let c = options.c_coef;
    // Equation-error start: A − B q − D (q² + q W) = C (q + W).
    let mut design = Vec::with_capacity(3 * n);
    for i in 0..n {
        design.extend([1.0, -q[i], -(q[i] * q[i] + q[i] * w[i])]);
    }
    let rhs = DVector::from_iterator(n, (0..n).map(|i| c * (q[i] + w[i])));
    let mut x = least_squares(DMatrix::from_row_slice(n, 3, &design), rhs)?;

    let scale = w.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let Some((mut r, mut jac)) = chiller_residuals(&x, c, q, w) else {
        return Err(CalibrationError::NonConvergence { iterations: 0 });
    };
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = cost <= 1e-28 * scale;
    while !converged && iterations < options.max_iterations {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        if g.amax() <= 1e-14 * scale.sqrt() {
            converged = true;
            break;
        }
        let mut damped = jtj.clone();
        for k in 0..3 {
            damped[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
        }
        let Some(step) = damped.lu().solve(&(-g)) else {
            lambda *= 10.0;
            continue;
        };
        let trial = &x + &step;
        match chiller_residuals(&trial, c, q, w) {
            Some((tr, tj)) if tr.norm_squared() < cost => {
                let new_cost = tr.norm_squared();
                let small_step = step.norm() <= 1e-12 * (x.norm() + 1e-12);
                let small_gain = cost - new_cost <= 1e-15 * cost;
                x = trial;
                r = tr;
                jac = tj;
                cost = new_cost;
                lambda = (lambda * 0.1).max(1e-12);
                converged = small_step || small_gain || cost <= 1e-28 * scale;
            }
            _ => {
                lambda *= 10.0;
                // No downhill direction left at any damping: a minimum.
                converged = lambda > 1e16;
            }
        }
    }
    if !converged {
        return Err(CalibrationError::NonConvergence { iterations });
    }
    let predicted: Vec<f64> = r.iter().zip(w).map(|(r, w)| r + w).collect();
    Ok(report(
        Model::Chiller,
        &[("a_coef", x[0]), ("b_coef", x[1]), ("c_coef", c), ("d_coef", x[2])],
        &predicted,
        w,
        iterations,
    ))
}

/// Input ranges for [`synthesize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisRanges {
    /// Evaporator load, kW.
    pub load: (f64, f64),
    pub pump_freq: (f64, f64),
    pub fan_freq: (f64, f64),
    /// Tower inlet temperature, K.
    pub tower_inlet: (f64, f64),
    /// Inlet minus wet bulb, K.
    pub approach: (f64, f64),
}

impl Default for SynthesisRanges {
    fn default() -> Self {
        Self {
            load: (50.0, 1200.0),
            pump_freq: (15.0, 60.0),
            fan_freq: (6.0, 60.0),
            tower_inlet: (295.0, 310.0),
            approach: (2.0, 12.0),
        }
    }
}

/// Telemetry generated by the forward models from `calibration`.
///
/// Inputs follow an additive low-discrepancy sequence so every fit is well
/// conditioned; each output is multiplied by `1 + noise()`, so a closure
/// returning zero gives exact data. For the tower the noise scales the
/// temperature drop rather than the absolute outlet temperature.
pub fn synthesize(
    model: Model,
    calibration: &Calibration,
    bank: Bank,
    rows: usize,
    ranges: &SynthesisRanges,
    mut noise: impl FnMut() -> f64,
) -> Result<Telemetry, CalibrationError> {
    // Irrational strides; any set without rational relations works.
    const STRIDES: [f64; 4] = [
        0.618_033_988_749_894_9,
        0.754_877_666_246_692_8,
        0.569_840_290_998_053_3,
        0.438_283_925_953_674_5,
    ];
    let pf = match bank {
        Bank::Condenser => &calibration.condenser,
        Bank::Chilled => &calibration.chilled,
    };
    let lerp = |(lo, hi): (f64, f64), u: f64| lo + (hi - lo) * u;
    let mut t = Telemetry::new(model.columns());
    for i in 0..rows {
        let u: Vec<f64> = STRIDES.iter().map(|s| ((i as f64 + 0.5) * s).fract()).collect();
        let row = match model {
            Model::Chiller => {
                let q = lerp(ranges.load, u[0]);
                let params = calibration.chiller.with_capacitance(1.0, 1.0);
                let w = compressor_power(q, &params).map_err(|e| CalibrationError::Parse {
                    row: i + 1,
                    message: e.to_string(),
                })?;
                vec![q, w * (1.0 + noise())]
            }
            Model::PumpPower | Model::FanPower => {
                let range = if model == Model::PumpPower { ranges.pump_freq } else { ranges.fan_freq };
                let f = lerp(range, u[0]);
                let p = if model == Model::PumpPower { pf.pump_power(f) } else { pf.fan_power(f) };
                vec![f, p * (1.0 + noise())]
            }
            Model::PumpFlow | Model::FanFlow => {
                let (range, gain) = if model == Model::PumpFlow {
                    (ranges.pump_freq, pf.c11)
                } else {
                    (ranges.fan_freq, pf.c13)
                };
                let f = lerp(range, u[0]);
                vec![f, gain * f * (1.0 + noise())]
            }
            Model::Tower => {
                let t_in = lerp(ranges.tower_inlet, u[0]);
                let wb = t_in - lerp(ranges.approach, u[1]);
                let pump = lerp(ranges.pump_freq, u[2]);
                let fan = lerp(ranges.fan_freq, u[3]);
                let eff = calibration.tower.effectiveness(pump, fan);
                let t_out = t_in - (t_in - wb) * eff * (1.0 + noise());
                vec![t_in, wb, pump, fan, t_out]
            }
            Model::PumpBank => {
                let f = lerp(ranges.pump_freq, u[0]);
                let np = 1.0 + (u[1] * 3.0).floor().min(2.0);
                let nch = (u[2] * 4.0).floor().min(3.0);
                let flow = np * f * (pf.a1 - pf.a2 * (np - nch));
                vec![f, np, nch, flow * (1.0 + noise())]
            }
        };
        t.push(row);
    }
    Ok(t)
}
