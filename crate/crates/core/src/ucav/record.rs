//! Trajectory export and action-log replay.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::dynamics::UcavState;
use super::missile::Missile;
use super::scenario::Scenario;
use super::UcavEnv;
use crate::env::{Environment, Terminal};
use crate::error::{Error, Result};

/// One JSONL line of an exported flight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub psi: f64,
    pub gamma: f64,
    pub thrust: f64,
    pub load: f64,
    pub bank: f64,
    pub missiles: Vec<[f64; 3]>,
    pub reward: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal: Option<String>,
}

impl TrajectoryRecord {
    pub fn capture(
        step: usize,
        s: &UcavState,
        missiles: &[Missile],
        reward: f64,
        terminal: Option<Terminal>,
    ) -> Self {
        Self {
            step,
            x: s.x,
            y: s.y,
            z: s.z,
            v: s.v,
            psi: s.psi,
            gamma: s.gamma,
            thrust: s.thrust,
            load: s.load,
            bank: s.bank,
            missiles: missiles.iter().filter(|m| m.active).map(|m| m.position).collect(),
            reward,
            terminal: terminal.map(|t| t.as_str().to_string()),
        }
    }
}

pub fn write_trajectory_jsonl<W: Write>(mut w: W, records: &[TrajectoryRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trajectory_jsonl<R: BufRead>(r: R) -> Result<Vec<TrajectoryRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::format(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

/// Everything needed to reproduce one UCAV episode: the scenario, the env
/// seed, how many resets preceded the episode, and the actions taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionLog {
    pub scenario: Scenario,
    pub seed: u64,
    /// Number of earlier episodes on the same env, which advance its RNG.
    #[serde(default)]
    pub episode_index: usize,
    pub actions: Vec<usize>,
}

impl ActionLog {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("action log is serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let log: ActionLog = serde_json::from_str(text).map_err(|e| Error::config(format!("action log: {e}")))?;
        log.scenario.validate()?;
        Ok(log)
    }
}

/// Re-simulates an action log and returns the recorded trajectory.
pub fn replay(log: &ActionLog) -> Result<Vec<TrajectoryRecord>> {
    let mut env = UcavEnv::new(log.scenario.clone(), log.seed)?;
    for _ in 0..log.episode_index {
        env.reset();
    }
    env.set_recording(true);
    env.reset();
    for (i, &a) in log.actions.iter().enumerate() {
        let step = env.step(a)?;
        if step.done && i + 1 != log.actions.len() {
            return Err(Error::format(format!(
                "episode ended at action {} of {}",
                i + 1,
                log.actions.len()
            )));
        }
    }
    Ok(env.trajectory().to_vec())
}
