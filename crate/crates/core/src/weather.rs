//! Boundary conditions: outdoor air state and the building load it drives.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::WeatherError;
use crate::units::{celsius_to_kelvin, fahrenheit_to_kelvin, kelvin_to_celsius};

/// Outdoor air state at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherPoint {
    /// Dry-bulb temperature, K.
    pub t_dry_bulb: f64,
    /// Wet-bulb temperature, K.
    pub t_wet_bulb: f64,
    /// Relative humidity as a fraction.
    pub rel_humidity: f64,
}

impl WeatherPoint {
    /// Builds a point from dry bulb and relative humidity, deriving the wet
    /// bulb from Stull's empirical fit.
    pub fn from_dry_bulb(t_dry_bulb: f64, rel_humidity: f64) -> Self {
        let rel_humidity = rel_humidity.clamp(0.0, 1.0);
        Self {
            t_dry_bulb,
            t_wet_bulb: wet_bulb(t_dry_bulb, rel_humidity),
            rel_humidity,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.t_wet_bulb <= self.t_dry_bulb) {
            return Err(format!(
                "wet bulb {} K exceeds dry bulb {} K",
                self.t_wet_bulb, self.t_dry_bulb
            ));
        }
        if !(0.0..=1.0).contains(&self.rel_humidity) {
            return Err(format!("relative humidity {} outside [0, 1]", self.rel_humidity));
        }
        if self.rel_humidity >= 1.0 && (self.t_dry_bulb - self.t_wet_bulb).abs() > 1e-6 {
            return Err("saturated air must have wet bulb equal to dry bulb".into());
        }
        Ok(())
    }
}

/// Wet-bulb temperature (K) from dry bulb (K) and relative humidity
/// (fraction), Stull (2011). Saturated air returns the dry bulb exactly.
pub fn wet_bulb(t_dry_bulb: f64, rel_humidity: f64) -> f64 {
    if rel_humidity >= 1.0 {
        return t_dry_bulb;
    }
    let t = kelvin_to_celsius(t_dry_bulb);
    let rh = (rel_humidity * 100.0).max(0.0);
    let tw = t * (0.151977 * (rh + 8.313659).sqrt()).atan() + (t + rh).atan()
        - (rh - 1.676331).atan()
        + 0.00391838 * rh.powf(1.5) * (0.023101 * rh).atan()
        - 4.686035;
    celsius_to_kelvin(tw).min(t_dry_bulb)
}

/// Time-ordered weather samples; timestamps in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherSeries {
    samples: Vec<(f64, WeatherPoint)>,
}

impl WeatherSeries {
    pub fn new(samples: Vec<(f64, WeatherPoint)>) -> Result<Self, WeatherError> {
        if samples.is_empty() {
            return Err(WeatherError::Empty);
        }
        for (i, (t, p)) in samples.iter().enumerate() {
            if i > 0 && !(*t > samples[i - 1].0) {
                return Err(WeatherError::Unordered { row: i + 1 });
            }
            if p.check().is_err() {
                return Err(WeatherError::Psychrometric {
                    row: i + 1,
                    dry_bulb: p.t_dry_bulb,
                    wet_bulb: p.t_wet_bulb,
                });
            }
        }
        Ok(Self { samples })
    }

    /// Constant weather, usable at any time.
    pub fn constant(point: WeatherPoint) -> Self {
        Self {
            samples: vec![(0.0, point)],
        }
    }

    pub fn samples(&self) -> &[(f64, WeatherPoint)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }
}

/// Linear interpolation of every field; times outside the span clamp to the
/// first or last sample.
pub fn sample(series: &WeatherSeries, t: f64) -> Result<WeatherPoint, WeatherError> {
    let s = &series.samples;
    if s.is_empty() {
        return Err(WeatherError::Empty);
    }
    if t <= s[0].0 {
        return Ok(s[0].1);
    }
    if t >= s[s.len() - 1].0 {
        return Ok(s[s.len() - 1].1);
    }
    let hi = s.partition_point(|(ts, _)| *ts <= t);
    let (t0, p0) = s[hi - 1];
    if t0 == t {
        return Ok(p0);
    }
    let (t1, p1) = s[hi];
    let w = (t - t0) / (t1 - t0);
    let lerp = |a: f64, b: f64| a + (b - a) * w;
    let t_dry_bulb = lerp(p0.t_dry_bulb, p1.t_dry_bulb);
    Ok(WeatherPoint {
        t_dry_bulb,
        // Guard the last ulp so wb ≤ db survives rounding.
        t_wet_bulb: lerp(p0.t_wet_bulb, p1.t_wet_bulb).min(t_dry_bulb),
        rel_humidity: lerp(p0.rel_humidity, p1.rel_humidity),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TempUnit {
    Kelvin,
    Fahrenheit,
    Celsius,
}

fn parse_header(name: &str) -> Result<(String, Option<TempUnit>), String> {
    let name = name.trim();
    match name.split_once('[') {
        None => Ok((name.to_string(), None)),
        Some((base, rest)) => {
            let tag = rest.trim_end_matches(']').trim();
            let unit = match tag {
                "K" | "k" => TempUnit::Kelvin,
                "F" | "degF" | "°F" => TempUnit::Fahrenheit,
                "C" | "degC" | "°C" => TempUnit::Celsius,
                other => return Err(format!("unknown unit tag `{other}`")),
            };
            Ok((base.trim().to_string(), Some(unit)))
        }
    }
}

/// Reads a delimited weather table with columns `timestamp`, `dry_bulb`,
/// `wet_bulb` and `rel_humidity`. Temperature columns may carry a unit tag
/// (`dry_bulb[F]`, `wet_bulb[K]`); untagged temperatures are kelvin.
pub fn load_weather<R: Read>(source: R) -> Result<WeatherSeries, WeatherError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers()?.clone();
    let mut columns = Vec::with_capacity(headers.len());
    for h in headers.iter() {
        columns.push(parse_header(h).map_err(|message| WeatherError::Parse { row: 0, message })?);
    }
    let find = |name: &str| {
        columns
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| WeatherError::MissingColumn(name.to_string()))
    };
    let (ts, db, wb, rh) = (
        find("timestamp")?,
        find("dry_bulb")?,
        find("wet_bulb")?,
        find("rel_humidity")?,
    );
    let to_kelvin = |value: f64, col: usize| match columns[col].1.unwrap_or(TempUnit::Kelvin) {
        TempUnit::Kelvin => value,
        TempUnit::Fahrenheit => fahrenheit_to_kelvin(value),
        TempUnit::Celsius => celsius_to_kelvin(value),
    };

    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let field = |col: usize| -> Result<f64, WeatherError> {
            let raw = record.get(col).unwrap_or("");
            raw.parse::<f64>().map_err(|_| WeatherError::Parse {
                row,
                message: format!("`{raw}` in column `{}` is not a number", columns[col].0),
            })
        };
        let point = WeatherPoint {
            t_dry_bulb: to_kelvin(field(db)?, db),
            t_wet_bulb: to_kelvin(field(wb)?, wb),
            rel_humidity: field(rh)?,
        };
        if let Err(message) = point.check() {
            return Err(if point.t_wet_bulb > point.t_dry_bulb {
                WeatherError::Psychrometric {
                    row,
                    dry_bulb: point.t_dry_bulb,
                    wet_bulb: point.t_wet_bulb,
                }
            } else {
                WeatherError::Parse { row, message }
            });
        }
        samples.push((field(ts)?, point));
    }
    let mut series = samples;
    series.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in 1..series.len() {
        if series[w].0 == series[w - 1].0 {
            return Err(WeatherError::Unordered { row: w + 1 });
        }
    }
    WeatherSeries::new(series)
}

pub fn load_weather_file(path: &Path) -> Result<WeatherSeries, WeatherError> {
    load_weather(std::fs::File::open(path)?)
}

/// Building heat gain: a daily schedule plus a dry-bulb-driven envelope term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    /// kW at evenly spaced times of day, starting at midnight; linear in
    /// between and wrapping around midnight.
    pub schedule: Vec<f64>,
    /// kW per K of dry bulb above the reference.
    pub dry_bulb_gain: f64,
    /// K.
    pub reference_temp: f64,
}

impl LoadProfile {
    pub fn validate(&self) -> Result<(), String> {
        if self.schedule.is_empty() {
            return Err("load schedule is empty".into());
        }
        if self.schedule.iter().any(|v| !(*v >= 0.0)) {
            return Err("load schedule entries must be nonnegative".into());
        }
        if !(self.dry_bulb_gain >= 0.0) {
            return Err("dry-bulb gain must be nonnegative".into());
        }
        Ok(())
    }

    /// Scheduled base load at `t` seconds.
    pub fn schedule_at(&self, t: f64) -> f64 {
        let n = self.schedule.len();
        if n == 1 {
            return self.schedule[0];
        }
        let day = 86_400.0;
        let slot = day / n as f64;
        let phase = t.rem_euclid(day) / slot;
        let i = (phase.floor() as usize).min(n - 1);
        let w = phase - i as f64;
        let a = self.schedule[i];
        let b = self.schedule[(i + 1) % n];
        a + (b - a) * w
    }
}

/// Building load (kW) at time `t` under the given weather.
pub fn load_at(profile: &LoadProfile, weather: &WeatherPoint, t: f64) -> f64 {
    let envelope = profile.dry_bulb_gain * (weather.t_dry_bulb - profile.reference_temp).max(0.0);
    (profile.schedule_at(t) + envelope).max(0.0)
}

/// Mean-reverting perturbation used for randomized weather.
///
/// `x ← x·exp(−dt/τ) + σ·sqrt(1 − exp(−2dt/τ))·z` with `z` a standard
/// normal draw supplied by the caller, so the stationary spread is `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrnsteinUhlenbeck {
    pub correlation_time: f64,
    pub sigma: f64,
    pub value: f64,
}

impl OrnsteinUhlenbeck {
    pub fn new(correlation_time: f64, sigma: f64) -> Self {
        Self {
            correlation_time,
            sigma,
            value: 0.0,
        }
    }

    pub fn advance(&mut self, dt: f64, z: f64) -> f64 {
        let decay = (-dt / self.correlation_time).exp();
        self.value = self.value * decay + self.sigma * (1.0 - decay * decay).sqrt() * z;
        self.value
    }
}
