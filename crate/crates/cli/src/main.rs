use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aie_core::agents::{Agent, AgentVariant};
use aie_core::harness::{
    emit_plots, evaluate, export_summary, load_env_spec, load_runs, run_experiment, summarize, ExperimentConfig,
    PlotKind,
};
use aie_core::ucav::{replay, write_trajectory_jsonl, ActionLog};
use aie_core::{Error, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aie", version, about = "Train and inspect exploration agents on the grid and UCAV testbeds")]
struct Cli {
    /// Override the seed list with a single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of episodes to train or evaluate.
    #[arg(long, global = true)]
    episodes: Option<usize>,
    /// Output directory (or file, for `replay`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Agent variant: ASIL, AIE1, AIE2 or AIE3.
    #[arg(long, global = true, value_parser = parse_variant)]
    variant: Option<AgentVariant>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train from a config file or a preset name (e.g. grid-20).
    Train { config: String },
    /// Run a saved agent on a scenario, grid config or experiment config.
    Eval {
        checkpoint: PathBuf,
        scenario: PathBuf,
        /// Take the most probable action instead of sampling.
        #[arg(long)]
        greedy: bool,
    },
    /// Render SVG figures from a run directory. `all` renders every kind
    /// the runs have data for.
    Plot { run_dir: PathBuf, kind: String },
    /// Write cross-seed summaries and mean curves.
    Export { run_dir: PathBuf },
    /// Re-simulate a UCAV action log and print its trajectory as JSONL.
    Replay { action_log: PathBuf },
}

fn parse_variant(s: &str) -> std::result::Result<AgentVariant, String> {
    AgentVariant::parse(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { ref config } => train(config, &cli),
        Command::Eval { ref checkpoint, ref scenario, greedy } => eval(checkpoint, scenario, greedy, &cli),
        Command::Plot { ref run_dir, ref kind } => plot(run_dir, kind, cli.out.as_deref()),
        Command::Export { ref run_dir } => {
            let runs = load_runs(run_dir)?;
            let out = cli.out.clone().unwrap_or_else(|| run_dir.join("export"));
            for f in export_summary(&runs, &out)? {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Replay { ref action_log } => {
            let text = std::fs::read_to_string(action_log)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", action_log.display())))?;
            let flight = replay(&ActionLog::from_json(&text)?)?;
            match &cli.out {
                Some(path) => write_trajectory_jsonl(std::io::BufWriter::new(std::fs::File::create(path)?), &flight),
                None => write_trajectory_jsonl(std::io::stdout().lock(), &flight),
            }
        }
    }
}

fn train(spec: &str, cli: &Cli) -> Result<()> {
    let mut config = ExperimentConfig::resolve(spec)?;
    let out = cli
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(|d| config.base_dir.join(d)))
        .unwrap_or_else(|| PathBuf::from("runs").join(&config.name));
    config.override_with(cli.seed, cli.episodes, Some(out.clone()), cli.variant)?;
    log::info!(
        "training {} ({}) for {} episodes on seeds {:?} -> {}",
        config.name,
        config.variant,
        config.episodes,
        config.seeds,
        out.display()
    );
    for run in run_experiment(&config)? {
        let s = summarize(&run);
        let mut line = format!(
            "seed {} return {:.3} -> {:.3} ({:.1}s)",
            s.seed, s.early_return, s.late_return, run.meta.elapsed_s
        );
        if let Some(g) = s.first_goal {
            line += &format!(" first_goal {g}");
        }
        if let Some(eq) = s.eq_mean {
            line += &format!(" eq_mean {eq:.3}");
        }
        if let Some(p) = s.final_shotdown_prob {
            line += &format!(" shotdown {p:.3}");
        }
        println!("{line}");
    }
    Ok(())
}

/// Accepts `agent.bin`, a `checkpoint/` directory or a seed directory.
fn checkpoint_file(path: &Path) -> PathBuf {
    if path.is_dir() {
        let direct = path.join("agent.bin");
        if direct.exists() {
            return direct;
        }
        return path.join("checkpoint").join("agent.bin");
    }
    path.to_path_buf()
}

fn eval(checkpoint: &Path, scenario: &Path, greedy: bool, cli: &Cli) -> Result<()> {
    let file = checkpoint_file(checkpoint);
    let mut agent = Agent::load(&file).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot read checkpoint {}: {io}", file.display())),
        other => other,
    })?;
    if let Some(v) = cli.variant {
        if v != agent.variant() {
            return Err(Error::Config(format!("checkpoint holds a {} agent, not {v}", agent.variant())));
        }
    }
    let env = load_env_spec(scenario)?;
    let report = evaluate(&mut agent, &env, cli.episodes.unwrap_or(10), cli.seed.unwrap_or(0), greedy, cli.out.as_deref())?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(dir) = &cli.out {
        std::fs::write(dir.join("eval.json"), format!("{json}\n"))?;
    }
    println!("{json}");
    Ok(())
}

fn plot(run_dir: &Path, kind: &str, out: Option<&Path>) -> Result<()> {
    let runs = load_runs(run_dir)?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| run_dir.join("plots"));
    if kind == "all" {
        for k in PlotKind::ALL {
            match emit_plots(&runs, k, &out) {
                Ok(files) => files.iter().for_each(|f| println!("{}", f.display())),
                Err(Error::Usage(msg)) => log::info!("skipping {}: {msg}", k.as_str()),
                Err(e) => return Err(e),
            }
        }
        return Ok(());
    }
    let files = emit_plots(&runs, PlotKind::parse(kind)?, &out).map_err(|e| match e {
        Error::Usage(msg) => Error::Config(msg),
        other => other,
    })?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}
