//! Seeded experiment runs and their on-disk layout.
//!
//! A run directory holds `config.toml` and one `seed-<n>/` directory per
//! seed:
//!
//! ```text
//! seed-0/
//!   metrics.csv            one row per episode
//!   meta.json              timing and summary scores
//!   visits.csv             row,col,count over the whole run (grid)
//!   visits_window.csv      same, last `coverage_window` episodes (grid)
//!   loss_map.csv           final predictor error per cell (grid, bonus variants)
//!   maps/                  visits_ep<e>.csv and loss_ep<e>.csv every `map_every`
//!   trajectories/          ep<e>.jsonl and ep<e>.actions.json (UCAV)
//!   trajectory.jsonl       last exported flight (UCAV)
//!   checkpoint/            agent.bin plus DNET network files
//!   error.json             only when the run failed
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{EnvSpec, ExperimentConfig};
use super::metrics::{exploration_score, predictor_loss_map, ExplorationScore, VisitMap};
use crate::agents::{Agent, AgentVariant, EpisodeRecord};
use crate::env::Terminal;
use crate::error::{Error, Result};
use crate::grid::GridWorld;
use crate::ucav::{read_trajectory_jsonl, write_trajectory_jsonl, ActionLog, TrajectoryRecord, UcavEnv};

/// One line of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub episode: u64,
    pub extrinsic_return: f64,
    pub intrinsic_sum: f64,
    pub penalty_count: usize,
    pub sil_updated_fraction: f64,
    pub predictor_loss: Option<f64>,
    pub a2c_loss: f64,
    pub length: usize,
    pub terminal: Option<Terminal>,
    /// Distinct grid cells visited so far.
    pub visited_cells: Option<usize>,
    /// Cumulative shot-down fraction so far.
    pub shotdown_prob: Option<f64>,
}

impl MetricRow {
    fn from_record(r: &EpisodeRecord) -> Self {
        Self {
            episode: r.episode,
            extrinsic_return: r.extrinsic_return,
            intrinsic_sum: r.intrinsic_sum,
            penalty_count: r.penalty_count,
            sil_updated_fraction: r.sil_updated_fraction,
            predictor_loss: r.predictor_loss,
            a2c_loss: r.a2c_loss,
            length: r.length,
            terminal: r.terminal,
            visited_cells: None,
            shotdown_prob: None,
        }
    }
}

/// `meta.json`: everything about a seed run that is not a per-episode row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub name: String,
    pub variant: AgentVariant,
    pub seed: u64,
    pub env: String,
    pub episodes: usize,
    pub elapsed_s: f64,
    /// Cell the quadrants are split around (grid only).
    #[serde(default)]
    pub split: Option<(usize, usize)>,
    #[serde(default)]
    pub exploration: Option<ExplorationScore>,
    #[serde(default)]
    pub window_exploration: Option<ExplorationScore>,
    #[serde(default)]
    pub coverage_window: usize,
}

/// Error manifest left beside partial outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorManifest {
    pub seed: u64,
    pub completed_episodes: usize,
    pub error: String,
}

/// Results of one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub meta: RunMeta,
    pub rows: Vec<MetricRow>,
    pub visits: Option<VisitMap>,
    pub window_visits: Option<VisitMap>,
    pub loss_map: Option<Vec<Vec<f64>>>,
    /// The last exported UCAV flight.
    pub trajectory: Option<Vec<TrajectoryRecord>>,
    pub dir: Option<PathBuf>,
}

impl RunRecord {
    pub fn seed(&self) -> u64 {
        self.meta.seed
    }

    pub fn returns(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.extrinsic_return).collect()
    }

    pub fn terminals(&self) -> Vec<Option<Terminal>> {
        self.rows.iter().map(|r| r.terminal).collect()
    }

    /// First episode that ended with `terminal`.
    pub fn first(&self, terminal: Terminal) -> Option<u64> {
        self.rows.iter().find(|r| r.terminal == Some(terminal)).map(|r| r.episode)
    }

    /// Reads a seed directory written by [`run_experiment`].
    pub fn load(dir: &Path) -> Result<Self> {
        let meta: RunMeta = read_json(&dir.join("meta.json"))?;
        let rows = read_metrics_csv(&dir.join("metrics.csv"))?;
        let opt = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        let visits = opt("visits.csv").map(|p| read_visits_csv(&p)).transpose()?;
        let window_visits = opt("visits_window.csv").map(|p| read_visits_csv(&p)).transpose()?;
        let loss_map = opt("loss_map.csv").map(|p| read_grid_csv(&p)).transpose()?;
        let trajectory = opt("trajectory.jsonl")
            .map(|p| read_trajectory_jsonl(std::io::BufReader::new(fs::File::open(p)?)))
            .transpose()?;
        let record = Self { meta, rows, visits, window_visits, loss_map, trajectory, dir: Some(dir.to_path_buf()) };
        record.check_contiguous()?;
        Ok(record)
    }

    fn check_contiguous(&self) -> Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            if r.episode != i as u64 + 1 {
                return Err(Error::format(format!("episode {} found at row {}", r.episode, i + 1)));
            }
        }
        Ok(())
    }
}

/// Loads every `seed-*` directory under `run_dir`, ordered by seed.
pub fn load_runs(run_dir: &Path) -> Result<Vec<RunRecord>> {
    let entries = fs::read_dir(run_dir)
        .map_err(|e| Error::config(format!("cannot read run directory {}: {e}", run_dir.display())))?;
    let mut runs = Vec::new();
    for entry in entries {
        let path = entry?.path();
        let is_seed = path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("seed-"));
        if is_seed && path.join("meta.json").exists() {
            runs.push(RunRecord::load(&path)?);
        }
    }
    if runs.is_empty() {
        return Err(Error::config(format!("no seed runs under {}", run_dir.display())));
    }
    runs.sort_by_key(|r| r.meta.seed);
    Ok(runs)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::format(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::format(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::format(e.to_string())
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

/// Long-format visit counts: `row,col,count` with `row = y`, `col = x`.
pub fn write_visits_csv(path: &Path, visits: &VisitMap) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["row", "col", "count"]).map_err(csv_err)?;
    for y in 0..visits.height {
        for x in 0..visits.width {
            w.write_record(&[y.to_string(), x.to_string(), visits.get(x, y).to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_visits_csv(path: &Path) -> Result<VisitMap> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut cells = Vec::new();
    for rec in r.deserialize::<(usize, usize, u64)>() {
        cells.push(rec.map_err(csv_err)?);
    }
    let height = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let width = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    let mut map = VisitMap::new(width, height);
    for (row, col, count) in cells {
        map.counts[row * width + col] = count;
    }
    Ok(map)
}

/// A numeric grid as headerless CSV, one line per row.
pub fn write_grid_csv(path: &Path, grid: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    for row in grid {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

/// Writes the agent and its networks to `dir`.
pub fn write_checkpoint(dir: &Path, agent: &Agent) -> Result<()> {
    fs::create_dir_all(dir)?;
    agent.save(&dir.join("agent.bin"))?;
    fs::write(dir.join("policy.dnet"), agent.policy().net().to_bytes())?;
    if let Some(rnd) = agent.rnd() {
        fs::write(dir.join("rnd_target.dnet"), rnd.target().to_bytes())?;
        fs::write(dir.join("rnd_predictor.dnet"), rnd.predictor().to_bytes())?;
    }
    Ok(())
}

pub fn seed_dir(root: &Path, seed: u64) -> PathBuf {
    root.join(format!("seed-{seed}"))
}

/// Trains every configured seed and returns one record per seed, in
/// seed-list order. With an output directory, results are also written to
/// disk; a failing seed leaves its partial outputs and an `error.json`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let env = config.env_spec()?;
    if let Some(root) = &config.output_dir {
        fs::create_dir_all(root)?;
        let mut resolved = config.clone();
        if let (EnvSpec::Ucav(s), Some(u)) = (&env, resolved.ucav.as_mut()) {
            u.scenario_file = None;
            u.scenario = Some(s.clone());
            fs::write(root.join("scenario.toml"), s.to_toml_string())?;
        }
        resolved.output_dir = None;
        fs::write(root.join("config.toml"), resolved.to_toml_string())?;
    }

    let workers = config.workers.min(config.seeds.len());
    let results: Vec<Result<RunRecord>> = if workers <= 1 {
        config.seeds.iter().map(|&s| run_seed(config, &env, s)).collect()
    } else {
        let mut slots: Vec<Option<Result<RunRecord>>> = (0..config.seeds.len()).map(|_| None).collect();
        std::thread::scope(|scope| {
            for (w, chunk) in slots.chunks_mut(config.seeds.len().div_ceil(workers)).enumerate() {
                let env = &env;
                let offset = w * config.seeds.len().div_ceil(workers);
                scope.spawn(move || {
                    for (i, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(run_seed(config, env, config.seeds[offset + i]));
                    }
                });
            }
        });
        slots.into_iter().map(|s| s.expect("every slot is filled")).collect()
    };
    results.into_iter().collect()
}

/// Accumulates one seed's outputs while it trains.
struct SeedRun<'a> {
    config: &'a ExperimentConfig,
    seed: u64,
    dir: Option<PathBuf>,
    rows: Vec<MetricRow>,
    visits: Option<VisitMap>,
    window_visits: Option<VisitMap>,
    split: Option<(usize, usize)>,
    loss_map: Option<Vec<Vec<f64>>>,
    trajectory: Option<Vec<TrajectoryRecord>>,
    shot: usize,
    started: Instant,
}

fn run_seed(config: &ExperimentConfig, env: &EnvSpec, seed: u64) -> Result<RunRecord> {
    let dir = config.output_dir.as_ref().map(|root| seed_dir(root, seed));
    if let Some(d) = &dir {
        if d.exists() {
            fs::remove_dir_all(d)?;
        }
        fs::create_dir_all(d)?;
    }
    let mut run = SeedRun {
        config,
        seed,
        dir,
        rows: Vec::with_capacity(config.episodes),
        visits: None,
        window_visits: None,
        split: None,
        loss_map: None,
        trajectory: None,
        shot: 0,
        started: Instant::now(),
    };
    let outcome = match env {
        EnvSpec::Grid(g) => run.grid(GridWorld::new(g.clone())?),
        EnvSpec::Ucav(s) => run.ucav(UcavEnv::new(s.clone(), seed)?),
    };
    match outcome {
        Ok(()) => run.finish(),
        Err(e) => {
            run.abort(&e);
            Err(e)
        }
    }
}

impl SeedRun<'_> {
    fn subdir(&self, name: &str) -> Result<Option<PathBuf>> {
        match &self.dir {
            Some(d) => {
                let p = d.join(name);
                fs::create_dir_all(&p)?;
                Ok(Some(p))
            }
            None => Ok(None),
        }
    }

    fn in_window(&self, episode: usize) -> bool {
        let w = self.config.coverage_window;
        w > 0 && episode + w > self.config.episodes
    }

    fn grid(&mut self, mut env: GridWorld) -> Result<()> {
        let c = env.config().clone();
        let mut agent = Agent::for_env(self.config.variant, self.config.agent.clone(), &env, self.seed)?;
        self.visits = Some(VisitMap::new(c.width, c.height));
        self.window_visits = (self.config.coverage_window > 0).then(|| VisitMap::new(c.width, c.height));
        self.split = Some((c.start[0], c.start[1]));
        let mut cells = Vec::with_capacity(c.max_steps);
        for e in 1..=self.config.episodes {
            cells.clear();
            let rec = agent.train_episode_with(&mut env, |_, _, step| {
                if let Some(cell) = step.info.cell {
                    cells.push(cell);
                }
            })?;
            let in_window = self.in_window(e);
            let visits = self.visits.as_mut().expect("grid runs track visits");
            for &cell in &cells {
                visits.record(cell);
            }
            if in_window {
                let w = self.window_visits.as_mut().expect("window map exists when in window");
                cells.iter().for_each(|&cell| w.record(cell));
            }
            let mut row = MetricRow::from_record(&rec);
            row.visited_cells = Some(visits.visited_cells());
            self.rows.push(row);

            if e % self.config.map_every == 0 {
                if let Some(maps) = self.subdir("maps")? {
                    write_visits_csv(&maps.join(format!("visits_ep{e}.csv")), self.visits.as_ref().unwrap())?;
                    if let Some(rnd) = agent.rnd() {
                        write_grid_csv(&maps.join(format!("loss_ep{e}.csv")), &predictor_loss_map(rnd, &env)?)?;
                    }
                }
            }
        }
        if let Some(rnd) = agent.rnd() {
            self.loss_map = Some(predictor_loss_map(rnd, &env)?);
        }
        self.checkpoint(&agent)
    }

    fn ucav(&mut self, mut env: UcavEnv) -> Result<()> {
        let mut agent = Agent::for_env(self.config.variant, self.config.agent.clone(), &env, self.seed)?;
        let every = self.config.trajectory_every();
        for e in 1..=self.config.episodes {
            let export = e % every == 0 || e == self.config.episodes;
            env.set_recording(export);
            let rec = agent.train_episode(&mut env)?;
            if rec.terminal == Some(Terminal::ShotDown) {
                self.shot += 1;
            }
            let mut row = MetricRow::from_record(&rec);
            row.shotdown_prob = Some(self.shot as f64 / e as f64);
            self.rows.push(row);

            if export {
                let flight = env.trajectory().to_vec();
                if let Some(dir) = self.subdir("trajectories")? {
                    let file = fs::File::create(dir.join(format!("ep{e}.jsonl")))?;
                    write_trajectory_jsonl(std::io::BufWriter::new(file), &flight)?;
                    let log = ActionLog {
                        scenario: env.scenario().clone(),
                        seed: self.seed,
                        episode_index: e - 1,
                        actions: env.actions().to_vec(),
                    };
                    fs::write(dir.join(format!("ep{e}.actions.json")), log.to_json())?;
                }
                self.trajectory = Some(flight);
            }
        }
        self.checkpoint(&agent)
    }

    fn checkpoint(&self, agent: &Agent) -> Result<()> {
        if self.config.checkpoint {
            if let Some(d) = &self.dir {
                write_checkpoint(&d.join("checkpoint"), agent)?;
            }
        }
        Ok(())
    }

    fn meta(&self) -> Result<RunMeta> {
        let score = |v: &Option<VisitMap>| -> Result<Option<ExplorationScore>> {
            match (v, self.split) {
                (Some(v), Some(split)) => exploration_score(v, split).map(Some),
                _ => Ok(None),
            }
        };
        Ok(RunMeta {
            name: self.config.name.clone(),
            variant: self.config.variant,
            seed: self.seed,
            env: if self.split.is_some() { "grid" } else { "ucav" }.to_string(),
            episodes: self.rows.len(),
            elapsed_s: self.started.elapsed().as_secs_f64(),
            split: self.split,
            exploration: score(&self.visits)?,
            window_exploration: score(&self.window_visits)?,
            coverage_window: self.config.coverage_window,
        })
    }

    fn write_outputs(&self, dir: &Path, meta: &RunMeta) -> Result<()> {
        write_metrics_csv(&dir.join("metrics.csv"), &self.rows)?;
        if let Some(v) = &self.visits {
            write_visits_csv(&dir.join("visits.csv"), v)?;
        }
        if let Some(v) = &self.window_visits {
            write_visits_csv(&dir.join("visits_window.csv"), v)?;
        }
        if let Some(m) = &self.loss_map {
            write_grid_csv(&dir.join("loss_map.csv"), m)?;
        }
        if let Some(t) = &self.trajectory {
            write_trajectory_jsonl(std::io::BufWriter::new(fs::File::create(dir.join("trajectory.jsonl"))?), t)?;
        }
        write_json(&dir.join("meta.json"), meta)
    }

    fn finish(self) -> Result<RunRecord> {
        let meta = self.meta()?;
        if let Some(d) = &self.dir {
            self.write_outputs(d, &meta)?;
        }
        Ok(RunRecord {
            meta,
            rows: self.rows,
            visits: self.visits,
            window_visits: self.window_visits,
            loss_map: self.loss_map,
            trajectory: self.trajectory,
            dir: self.dir,
        })
    }

    /// Best-effort write of partial results and the error manifest.
    fn abort(&self, error: &Error) {
        let Some(d) = &self.dir else { return };
        let manifest = ErrorManifest {
            seed: self.seed,
            completed_episodes: self.rows.len(),
            error: error.to_string(),
        };
        if let Err(e) = write_json(&d.join("error.json"), &manifest) {
            log::error!("could not write error manifest for seed {}: {e}", self.seed);
        }
        if let Err(e) = write_metrics_csv(&d.join("metrics.csv"), &self.rows) {
            log::error!("could not write partial metrics for seed {}: {e}", self.seed);
        }
    }
}
