use std::io::Write;
use std::path::Path;

use coolplant_its::{Environment, TimeStepRecord};
use serde::Serialize;

use crate::error::{io_error, BenchError};
use crate::policy::Policy;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<TimeStepRecord>,
    /// Sum of rewards.
    pub total: f64,
}

/// Resets `env` and runs `policy` until the episode ends.
pub fn run_episode(env: &mut Environment, policy: &mut dyn Policy) -> Result<Trajectory, BenchError> {
    let mut record = env.reset()?;
    let mut records = Vec::with_capacity(env.episode_length() + 1);
    let mut total = 0.0;
    loop {
        let action = policy.act(&record);
        let next = env.step(&action)?;
        total += next.reward.unwrap_or(0.0);
        records.push(std::mem::replace(&mut record, next));
        if record.is_last() {
            records.push(record);
            return Ok(Trajectory { records, total });
        }
    }
}

#[derive(Serialize)]
struct Line<'a> {
    episode: usize,
    #[serde(flatten)]
    record: &'a TimeStepRecord,
}

/// One JSON object per line: a metadata object, then every record tagged
/// with its episode index.
pub fn write_trajectories(
    path: &Path,
    meta: &[(String, String)],
    episodes: &[Trajectory],
) -> Result<(), BenchError> {
    let file = std::fs::File::create(path).map_err(io_error(path))?;
    let mut w = std::io::BufWriter::new(file);
    let header: serde_json::Map<String, serde_json::Value> =
        meta.iter().map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone()))).collect();
    serde_json::to_writer(&mut w, &header)?;
    writeln!(w).map_err(io_error(path))?;
    for (episode, t) in episodes.iter().enumerate() {
        for record in &t.records {
            serde_json::to_writer(&mut w, &Line { episode, record })?;
            writeln!(w).map_err(io_error(path))?;
        }
    }
    w.flush().map_err(io_error(path))
}
