//! Experiment configs, seeded runs, metrics, exports and figures.

pub mod config;
pub mod export;
pub mod metrics;
pub mod plot;
pub mod run;

pub use config::{ucav_small_scenario, EnvSpec, ExperimentConfig, UcavBlock, PRESET_NAMES};
pub use export::{evaluate, export_summary, load_env_spec, summarize, EvalEpisode, EvalReport, SeedSummary};
pub use metrics::{
    exploration_score, moving_average, predictor_loss_map, score_from_eq, shotdown_curve, ExplorationScore, VisitMap,
};
pub use plot::{emit_plots, render, PlotKind};
pub use run::{load_runs, run_experiment, MetricRow, RunMeta, RunRecord};
