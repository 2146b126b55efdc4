//! Experiment configuration files and the built-in presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{AgentConfig, AgentVariant};
use crate::error::{Error, Result};
use crate::grid::GridConfig;
use crate::ucav::Scenario;

fn default_map_every() -> usize {
    100
}

fn default_workers() -> usize {
    1
}

fn default_true() -> bool {
    true
}

/// UCAV environment block: a scenario inline or in a separate file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UcavBlock {
    /// Path to a scenario TOML, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    /// Export a trajectory every this many episodes (defaults to `map_every`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    Grid(GridConfig),
    Ucav(Scenario),
}

impl EnvSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            EnvSpec::Grid(_) => "grid",
            EnvSpec::Ucav(_) => "ucav",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub variant: AgentVariant,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    /// Where run directories go. Without one, runs stay in memory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Episode cadence for visit-map, loss-map and trajectory snapshots.
    #[serde(default = "default_map_every")]
    pub map_every: usize,
    /// Exploration scores are also computed over the last this many
    /// episodes. 0 scores only the whole run.
    #[serde(default)]
    pub coverage_window: usize,
    /// Write final network and agent checkpoints.
    #[serde(default = "default_true")]
    pub checkpoint: bool,
    /// Seeds run concurrently on this many threads.
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ucav: Option<UcavBlock>,
    #[serde(default)]
    pub agent: AgentConfig,
    /// Directory that relative paths resolve against; not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

pub const PRESET_NAMES: [&str; 6] = [
    "grid-20",
    "grid-noreward-20",
    "ucav-small",
    "grid-40-full",
    "grid-noreward-40-full",
    "ucav-full",
];

const UCAV_SMALL_SCENARIO: &str = include_str!("../../../../presets/ucav-small.scenario.toml");

fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "grid-20" => include_str!("../../../../presets/grid-20.toml"),
        "grid-noreward-20" => include_str!("../../../../presets/grid-noreward-20.toml"),
        "ucav-small" => include_str!("../../../../presets/ucav-small.toml"),
        "grid-40-full" => include_str!("../../../../presets/grid-40-full.toml"),
        "grid-noreward-40-full" => include_str!("../../../../presets/grid-noreward-40-full.toml"),
        "ucav-full" => include_str!("../../../../presets/ucav-full.toml"),
        _ => return None,
    })
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(format!("experiment config: {e}")))?;
        c.base_dir = base_dir.to_path_buf();
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, &base)
    }

    /// A built-in preset by name.
    pub fn preset(name: &str) -> Result<Self> {
        let text = preset_text(name).ok_or_else(|| {
            Error::config(format!("unknown preset '{name}' (known: {})", PRESET_NAMES.join(", ")))
        })?;
        Self::from_toml_str(text, Path::new(""))
    }

    /// Loads `spec` as a file if it exists, otherwise as a preset name.
    pub fn resolve(spec: &str) -> Result<Self> {
        let path = Path::new(spec);
        if path.exists() {
            Self::load(path)
        } else if let Some(name) = spec.strip_prefix("preset:") {
            Self::preset(name)
        } else if preset_text(spec).is_some() {
            Self::preset(spec)
        } else {
            Err(Error::config(format!("no config file or preset named '{spec}'")))
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("experiment config is serializable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::config("name must not be empty"));
        }
        if self.episodes == 0 {
            return Err(Error::config("episodes must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds must list at least one seed"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::config("seeds must be distinct"));
        }
        if self.map_every == 0 {
            return Err(Error::config("map_every must be positive"));
        }
        if self.coverage_window > self.episodes {
            return Err(Error::config("coverage_window cannot exceed episodes"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers must be positive"));
        }
        self.agent.validate()?;
        match (&self.grid, &self.ucav) {
            (Some(g), None) => g.validate()?,
            (None, Some(u)) => {
                if u.trajectory_every == Some(0) {
                    return Err(Error::config("trajectory_every must be positive"));
                }
                self.scenario()?;
            }
            _ => return Err(Error::config("exactly one of [grid] or [ucav] is required")),
        }
        Ok(())
    }

    fn scenario(&self) -> Result<Scenario> {
        let u = self.ucav.as_ref().ok_or_else(|| Error::config("no [ucav] block"))?;
        match (&u.scenario_file, &u.scenario) {
            (Some(file), None) => {
                // Built-in presets refer to the bundled small scenario.
                if self.base_dir.as_os_str().is_empty() && file == Path::new("ucav-small.scenario.toml") {
                    return Scenario::from_toml_str(UCAV_SMALL_SCENARIO);
                }
                let path = self.base_dir.join(file);
                Scenario::load(&path).map_err(|e| match e {
                    Error::Io(io) => Error::config(format!("scenario file {}: {io}", path.display())),
                    other => other,
                })
            }
            (None, Some(s)) => {
                s.validate()?;
                Ok(s.clone())
            }
            _ => Err(Error::config("[ucav] needs exactly one of scenario_file or scenario")),
        }
    }

    /// The environment this config describes, with scenario files loaded.
    pub fn env_spec(&self) -> Result<EnvSpec> {
        match &self.grid {
            Some(g) => Ok(EnvSpec::Grid(g.clone())),
            None => Ok(EnvSpec::Ucav(self.scenario()?)),
        }
    }

    pub fn trajectory_every(&self) -> usize {
        self.ucav
            .as_ref()
            .and_then(|u| u.trajectory_every)
            .unwrap_or(self.map_every)
    }

    /// Applies command-line overrides and revalidates.
    pub fn override_with(
        &mut self,
        seed: Option<u64>,
        episodes: Option<usize>,
        out: Option<PathBuf>,
        variant: Option<AgentVariant>,
    ) -> Result<()> {
        if let Some(s) = seed {
            self.seeds = vec![s];
        }
        if let Some(e) = episodes {
            self.episodes = e;
            self.coverage_window = self.coverage_window.min(e);
        }
        if let Some(o) = out {
            self.output_dir = Some(o);
        }
        if let Some(v) = variant {
            self.variant = v;
        }
        self.validate()
    }
}

/// The bundled small UCAV scenario.
pub fn ucav_small_scenario() -> Scenario {
    Scenario::from_toml_str(UCAV_SMALL_SCENARIO).expect("bundled scenario is valid")
}
