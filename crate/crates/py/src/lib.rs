//! Python bindings.
//!
//! Environments and agents are exposed as classes; experiments run through
//! the same harness as the `aie` binary and come back as plain dicts.
//!
//! ```python
//! import aie
//! env = aie.GridEnv(width=10, height=10, start=(5, 5), goal=(9, 9))
//! agent = aie.Agent.for_env("AIE3", env, seed=0)
//! for _ in range(50):
//!     stats = agent.train_episode(env)
//! ```

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

use aie_core::agents::{Agent as CoreAgent, AgentConfig, AgentVariant, EpisodeRecord};
use aie_core::env::{Environment, Step};
use aie_core::grid::{GridConfig, GridWorld, RewardMode};
use aie_core::harness::{self, ExperimentConfig, VisitMap};
use aie_core::ucav::{ActionLog, Scenario, UcavEnv as CoreUcav};

fn to_py_err(e: aie_core::Error) -> PyErr {
    if e.is_config() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_bound_py_any(py)?,
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_bound_py_any(py)?,
            None => n.as_f64().unwrap_or(f64::NAN).into_bound_py_any(py)?,
        },
        Value::String(s) => s.into_bound_py_any(py)?,
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn episode_dict<'py>(py: Python<'py>, r: &EpisodeRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("episode", r.episode)?;
    d.set_item("extrinsic_return", r.extrinsic_return)?;
    d.set_item("intrinsic_sum", r.intrinsic_sum)?;
    d.set_item("penalty_count", r.penalty_count)?;
    d.set_item("sil_updated_fraction", r.sil_updated_fraction)?;
    d.set_item("predictor_loss", r.predictor_loss)?;
    d.set_item("a2c_loss", r.a2c_loss)?;
    d.set_item("length", r.length)?;
    d.set_item("terminal", r.terminal.map(|t| t.as_str()))?;
    Ok(d)
}

type StepTuple = (Vec<f64>, f64, bool, Option<&'static str>);

fn step_tuple(s: Step) -> StepTuple {
    (s.observation, s.reward, s.done, s.info.terminal.map(|t| t.as_str()))
}

/// 2D grid world with four movement actions.
#[pyclass(module = "aie")]
struct GridEnv {
    inner: GridWorld,
}

#[pymethods]
impl GridEnv {
    #[new]
    #[pyo3(signature = (width=20, height=20, start=(10, 10), goal=Some((19, 19)), mode="sparse", max_steps=200))]
    fn new(
        width: usize,
        height: usize,
        start: (usize, usize),
        goal: Option<(usize, usize)>,
        mode: &str,
        max_steps: usize,
    ) -> PyResult<Self> {
        let mode = match mode {
            "sparse" => RewardMode::Sparse,
            "no_reward" => RewardMode::NoReward,
            other => return Err(PyValueError::new_err(format!("mode must be 'sparse' or 'no_reward', got '{other}'"))),
        };
        let config = GridConfig {
            width,
            height,
            start: [start.0, start.1],
            goal: goal.map(|g| [g.0, g.1]),
            mode,
            max_steps,
            ..GridConfig::default()
        };
        Ok(Self { inner: GridWorld::new(config).map_err(to_py_err)? })
    }

    fn reset(&mut self) -> Vec<f64> {
        self.inner.reset()
    }

    /// Returns `(observation, reward, done, terminal)`.
    fn step(&mut self, action: usize) -> PyResult<StepTuple> {
        self.inner.step(action).map(step_tuple).map_err(to_py_err)
    }

    fn feature(&self) -> Vec<f64> {
        self.inner.feature()
    }

    fn position(&self) -> (usize, usize) {
        self.inner.position()
    }

    #[getter]
    fn action_count(&self) -> usize {
        self.inner.action_count()
    }

    #[getter]
    fn observation_len(&self) -> usize {
        self.inner.observation_len()
    }
}

/// UCAV mission environment. Without a scenario the default battlefield
/// is used.
#[pyclass(module = "aie")]
struct UcavEnv {
    inner: CoreUcav,
}

#[pymethods]
impl UcavEnv {
    #[new]
    #[pyo3(signature = (scenario_toml=None, seed=0))]
    fn new(scenario_toml: Option<&str>, seed: u64) -> PyResult<Self> {
        let scenario = match scenario_toml {
            Some(text) => Scenario::from_toml_str(text).map_err(to_py_err)?,
            None => Scenario::default(),
        };
        let mut inner = CoreUcav::new(scenario, seed).map_err(to_py_err)?;
        inner.set_recording(true);
        Ok(Self { inner })
    }

    fn reset(&mut self) -> Vec<f64> {
        self.inner.reset()
    }

    /// Returns `(observation, reward, done, terminal)`.
    fn step(&mut self, action: usize) -> PyResult<StepTuple> {
        self.inner.step(action).map(step_tuple).map_err(to_py_err)
    }

    fn feature(&self) -> Vec<f64> {
        self.inner.feature()
    }

    /// Current aircraft state as a dict.
    fn state<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serialize_to_py(py, self.inner.state())
    }

    /// Recorded states of the current episode.
    fn trajectory<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serialize_to_py(py, &self.inner.trajectory())
    }

    #[getter]
    fn action_count(&self) -> usize {
        self.inner.action_count()
    }

    #[getter]
    fn observation_len(&self) -> usize {
        self.inner.observation_len()
    }
}

/// A learning agent of one variant (ASIL, AIE1, AIE2, AIE3).
#[pyclass(module = "aie")]
struct Agent {
    inner: CoreAgent,
}

fn agent_config(config_json: Option<&str>) -> PyResult<AgentConfig> {
    match config_json {
        Some(text) => serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("agent config: {e}"))),
        None => Ok(AgentConfig::default()),
    }
}

#[pymethods]
impl Agent {
    #[new]
    #[pyo3(signature = (variant, observation_len, feature_len, actions, seed=0, config_json=None))]
    fn new(
        variant: &str,
        observation_len: usize,
        feature_len: usize,
        actions: usize,
        seed: u64,
        config_json: Option<&str>,
    ) -> PyResult<Self> {
        let variant = AgentVariant::parse(variant).map_err(to_py_err)?;
        let inner = CoreAgent::new(variant, agent_config(config_json)?, observation_len, feature_len, actions, seed)
            .map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Builds an agent shaped for a `GridEnv` or `UcavEnv`.
    #[staticmethod]
    #[pyo3(signature = (variant, env, seed=0, config_json=None))]
    fn for_env(variant: &str, env: &Bound<'_, PyAny>, seed: u64, config_json: Option<&str>) -> PyResult<Self> {
        let variant = AgentVariant::parse(variant).map_err(to_py_err)?;
        let config = agent_config(config_json)?;
        let inner = if let Ok(g) = env.cast::<GridEnv>() {
            CoreAgent::for_env(variant, config, &g.borrow().inner, seed)
        } else if let Ok(u) = env.cast::<UcavEnv>() {
            CoreAgent::for_env(variant, config, &u.borrow().inner, seed)
        } else {
            return Err(PyValueError::new_err("env must be a GridEnv or UcavEnv"));
        };
        Ok(Self { inner: inner.map_err(to_py_err)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: CoreAgent::load(&path).map_err(to_py_err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py_err)
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.inner.variant().as_str()
    }

    #[getter]
    fn episodes(&self) -> u64 {
        self.inner.episodes()
    }

    fn act(&mut self, observation: Vec<f64>) -> PyResult<usize> {
        self.inner.act(&observation).map_err(to_py_err)
    }

    fn act_greedy(&self, observation: Vec<f64>) -> PyResult<usize> {
        self.inner.act_greedy(&observation).map_err(to_py_err)
    }

    /// Trains on one episode of `env` and returns its statistics.
    fn train_episode<'py>(&mut self, py: Python<'py>, env: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyDict>> {
        let record = if let Ok(g) = env.cast::<GridEnv>() {
            self.inner.train_episode(&mut g.borrow_mut().inner)
        } else if let Ok(u) = env.cast::<UcavEnv>() {
            self.inner.train_episode(&mut u.borrow_mut().inner)
        } else {
            return Err(PyValueError::new_err("env must be a GridEnv or UcavEnv"));
        };
        episode_dict(py, &record.map_err(to_py_err)?)
    }
}

/// Runs an experiment from a config path or preset name and returns one
/// summary dict per seed.
#[pyfunction]
#[pyo3(signature = (config, seed=None, episodes=None, out=None, variant=None))]
fn run_experiment<'py>(
    py: Python<'py>,
    config: &str,
    seed: Option<u64>,
    episodes: Option<usize>,
    out: Option<PathBuf>,
    variant: Option<&str>,
) -> PyResult<Bound<'py, PyList>> {
    let mut c = ExperimentConfig::resolve(config).map_err(to_py_err)?;
    let variant = variant.map(AgentVariant::parse).transpose().map_err(to_py_err)?;
    c.override_with(seed, episodes, out, variant).map_err(to_py_err)?;
    let runs = py.detach(|| harness::run_experiment(&c)).map_err(to_py_err)?;
    let list = PyList::empty(py);
    for run in &runs {
        list.append(serialize_to_py(py, &harness::summarize(run))?)?;
    }
    Ok(list)
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    harness::PRESET_NAMES.to_vec()
}

/// Quadrant coverage of `counts[y][x]` around `split` (x, y).
#[pyfunction]
fn exploration_score<'py>(py: Python<'py>, counts: Vec<Vec<u64>>, split: (usize, usize)) -> PyResult<Bound<'py, PyAny>> {
    let height = counts.len();
    let width = counts.first().map_or(0, Vec::len);
    if counts.iter().any(|r| r.len() != width) {
        return Err(PyValueError::new_err("counts must be a rectangular grid"));
    }
    let map = VisitMap { width, height, counts: counts.into_iter().flatten().collect() };
    let score = harness::exploration_score(&map, split).map_err(to_py_err)?;
    serialize_to_py(py, &score)
}

/// Re-simulates a UCAV action log (JSON text) and returns its trajectory.
#[pyfunction]
fn replay<'py>(py: Python<'py>, action_log_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let log = ActionLog::from_json(action_log_json).map_err(to_py_err)?;
    let flight = aie_core::ucav::replay(&log).map_err(to_py_err)?;
    serialize_to_py(py, &flight)
}

#[pymodule]
fn aie(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<GridEnv>()?;
    m.add_class::<UcavEnv>()?;
    m.add_class::<Agent>()?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(exploration_score, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    Ok(())
}
