//! Cross-seed summaries and checkpoint evaluation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{EnvSpec, ExperimentConfig};
use super::metrics::mean;
use super::run::RunRecord;
use crate::agents::{Agent, AgentVariant};
use crate::env::{Environment, Terminal};
use crate::error::{Error, Result};
use crate::grid::{GridConfig, GridWorld};
use crate::ucav::{write_trajectory_jsonl, ActionLog, Scenario, UcavEnv};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub variant: AgentVariant,
    pub episodes: usize,
    /// Mean extrinsic return over the first and last tenth of the run.
    pub early_return: f64,
    pub late_return: f64,
    pub first_goal: Option<u64>,
    pub goals: usize,
    pub arrivals: usize,
    pub final_shotdown_prob: Option<f64>,
    pub eq_mean: Option<f64>,
    pub eq_literal: Option<f64>,
    pub eq_uniformity: Option<f64>,
    pub window_eq_mean: Option<f64>,
}

pub fn summarize(run: &RunRecord) -> SeedSummary {
    let returns = run.returns();
    let tenth = (returns.len() / 10).max(1).min(returns.len());
    let count = |t| run.rows.iter().filter(|r| r.terminal == Some(t)).count();
    SeedSummary {
        seed: run.seed(),
        variant: run.meta.variant,
        episodes: run.rows.len(),
        early_return: mean(&returns[..tenth]),
        late_return: mean(&returns[returns.len() - tenth..]),
        first_goal: run.first(Terminal::Goal),
        goals: count(Terminal::Goal),
        arrivals: count(Terminal::Arrived),
        final_shotdown_prob: run.rows.last().and_then(|r| r.shotdown_prob),
        eq_mean: run.meta.exploration.map(|s| s.mean),
        eq_literal: run.meta.exploration.map(|s| s.literal),
        eq_uniformity: run.meta.exploration.map(|s| s.uniformity),
        window_eq_mean: run.meta.window_exploration.map(|s| s.mean),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CurveRow {
    episode: usize,
    mean_return: f64,
    worst_return: f64,
    mean_shotdown_prob: Option<f64>,
}

/// Writes `summary.csv`, `summary.json` and `curves.csv` into `out_dir`.
pub fn export_summary(runs: &[RunRecord], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if runs.is_empty() {
        return Err(Error::usage("no runs to export"));
    }
    fs::create_dir_all(out_dir)?;
    let summaries: Vec<SeedSummary> = runs.iter().map(summarize).collect();
    let csv_err = |e: csv::Error| Error::format(e.to_string());

    let summary_csv = out_dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary_csv).map_err(csv_err)?;
    for s in &summaries {
        w.serialize(s).map_err(csv_err)?;
    }
    w.flush()?;

    let summary_json = out_dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summaries).map_err(|e| Error::format(e.to_string()))?;
    fs::write(&summary_json, text + "\n")?;

    let curves = out_dir.join("curves.csv");
    let n = runs.iter().map(|r| r.rows.len()).min().unwrap_or(0);
    let mut w = csv::Writer::from_path(&curves).map_err(csv_err)?;
    for i in 0..n {
        let returns: Vec<f64> = runs.iter().map(|r| r.rows[i].extrinsic_return).collect();
        let shot: Option<Vec<f64>> = runs.iter().map(|r| r.rows[i].shotdown_prob).collect();
        w.serialize(CurveRow {
            episode: i + 1,
            mean_return: mean(&returns),
            worst_return: returns.iter().copied().fold(f64::INFINITY, f64::min),
            mean_shotdown_prob: shot.map(|s| mean(&s)),
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(vec![summary_csv, summary_json, curves])
}

/// Reads an evaluation environment from a TOML file holding an experiment
/// config, a bare grid config, or a UCAV scenario.
pub fn load_env_spec(path: &Path) -> Result<EnvSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    if table.contains_key("grid") || table.contains_key("ucav") {
        ExperimentConfig::load(path)?.env_spec()
    } else if table.contains_key("width") {
        let g: GridConfig = toml::from_str(&text).map_err(|e| Error::config(format!("grid config: {e}")))?;
        g.validate()?;
        Ok(EnvSpec::Grid(g))
    } else {
        Ok(EnvSpec::Ucav(Scenario::from_toml_str(&text)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEpisode {
    pub episode: usize,
    pub extrinsic_return: f64,
    pub length: usize,
    pub terminal: Option<Terminal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub variant: AgentVariant,
    pub greedy: bool,
    pub mean_return: f64,
    pub terminals: BTreeMap<String, usize>,
    pub episodes: Vec<EvalEpisode>,
}

fn rollout<E: Environment>(
    agent: &mut Agent,
    env: &mut E,
    greedy: bool,
    mut after: impl FnMut(&E, usize) -> Result<()>,
    episodes: usize,
) -> Result<Vec<EvalEpisode>> {
    let mut out = Vec::with_capacity(episodes);
    for e in 1..=episodes {
        let mut obs = env.reset();
        let mut ep = EvalEpisode { episode: e, extrinsic_return: 0.0, length: 0, terminal: None };
        loop {
            let a = if greedy { agent.act_greedy(&obs)? } else { agent.act(&obs)? };
            let step = env.step(a)?;
            ep.extrinsic_return += step.reward;
            ep.length += 1;
            obs = step.observation;
            if step.done {
                ep.terminal = step.info.terminal;
                break;
            }
        }
        after(env, e)?;
        out.push(ep);
    }
    Ok(out)
}

/// Runs the agent without learning. UCAV flights are written to `out`
/// as trajectory JSONL plus replayable action logs.
pub fn evaluate(
    agent: &mut Agent,
    env: &EnvSpec,
    episodes: usize,
    seed: u64,
    greedy: bool,
    out: Option<&Path>,
) -> Result<EvalReport> {
    if episodes == 0 {
        return Err(Error::config("episodes must be positive"));
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    let results = match env {
        EnvSpec::Grid(g) => {
            let mut env = GridWorld::new(g.clone())?;
            check_shapes(agent, &env)?;
            rollout(agent, &mut env, greedy, |_, _| Ok(()), episodes)?
        }
        EnvSpec::Ucav(s) => {
            let mut env = UcavEnv::new(s.clone(), seed)?;
            check_shapes(agent, &env)?;
            env.set_recording(out.is_some());
            let write = |env: &UcavEnv, e: usize| -> Result<()> {
                if let Some(dir) = out {
                    let file = fs::File::create(dir.join(format!("eval_ep{e}.jsonl")))?;
                    write_trajectory_jsonl(std::io::BufWriter::new(file), env.trajectory())?;
                    let log = ActionLog {
                        scenario: env.scenario().clone(),
                        seed,
                        episode_index: e - 1,
                        actions: env.actions().to_vec(),
                    };
                    fs::write(dir.join(format!("eval_ep{e}.actions.json")), log.to_json())?;
                }
                Ok(())
            };
            rollout(agent, &mut env, greedy, write, episodes)?
        }
    };
    let mut terminals = BTreeMap::new();
    for r in &results {
        let key = r.terminal.map_or("none", Terminal::as_str).to_string();
        *terminals.entry(key).or_insert(0) += 1;
    }
    let returns: Vec<f64> = results.iter().map(|r| r.extrinsic_return).collect();
    Ok(EvalReport {
        variant: agent.variant(),
        greedy,
        mean_return: mean(&returns),
        terminals,
        episodes: results,
    })
}

fn check_shapes<E: Environment>(agent: &Agent, env: &E) -> Result<()> {
    let p = agent.policy();
    if p.input_len() != env.observation_len() || p.actions() != env.action_count() {
        return Err(Error::config(format!(
            "checkpoint expects {} inputs and {} actions, environment has {} and {}",
            p.input_len(),
            p.actions(),
            env.observation_len(),
            env.action_count()
        )));
    }
    Ok(())
}
