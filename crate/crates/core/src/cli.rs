//! The `satfl` command-line tool.
//!
//! ```text
//! satfl simulate <config>... [--seed N] [--out PATH] [--events PATH] [--jobs N]
//! satfl windows <config> --horizon S [--out PATH]
//! satfl baseline <config> --epochs N [--seed N]
//! satfl partition <config> --summary
//! ```
//!
//! Exit codes: 2 for configuration or schema errors, 3 for missing or
//! malformed data, 4 when training diverges, 1 for anything else.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig, DATA_DIR_ENV};
use crate::learning::{evaluate, train_centralized, LearningError};
use crate::orbital::ContactPlan;
use crate::simulator::{simulate, write_event_log, write_metrics_csv, SimError, SimOutcome};

#[derive(Debug, Parser)]
#[command(
    name = "satfl",
    version,
    about = "Federated learning over LEO satellite contact windows"
)]
pub struct Cli {
    /// Directory that relative data paths are resolved against.
    #[arg(long, global = true, env = DATA_DIR_ENV, default_value = "data")]
    pub data_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run scenarios and write a metrics CSV for each.
    Simulate(SimulateArgs),
    /// Print the predicted contact windows as `sat_id,rise_s,set_s`.
    Windows {
        config: PathBuf,
        #[arg(long)]
        horizon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train centrally on the pooled training set.
    Baseline {
        config: PathBuf,
        #[arg(long)]
        epochs: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Show how the training set is split across satellites.
    Partition {
        config: PathBuf,
        #[arg(long)]
        summary: bool,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(required = true)]
    pub configs: Vec<PathBuf>,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Metrics CSV path; only valid with a single config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Protocol event log path; only valid with a single config.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Number of scenario files simulated in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Config {
        path: PathBuf,
        #[source]
        source: ConfigError,
    },
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Output { .. } => 1,
            CliError::Config { source, .. } => config_exit_code(source),
        }
    }
}

fn learning_exit_code(e: &LearningError) -> i32 {
    match e {
        LearningError::Diverged { .. } => 4,
        LearningError::Idx(_) | LearningError::EmptyDataset => 3,
        _ => 2,
    }
}

fn config_exit_code(e: &ConfigError) -> i32 {
    match e {
        ConfigError::Parse(_) | ConfigError::Invalid(_) | ConfigError::Orbital(_) => 2,
        ConfigError::Io { .. } | ConfigError::MissingData(_) => 3,
        ConfigError::Learning(l) | ConfigError::Simulation(SimError::Learning(l)) => {
            learning_exit_code(l)
        }
        ConfigError::Simulation(SimError::InvalidScenario(_) | SimError::Orbital(_)) => 2,
        _ => 1,
    }
}

fn with_path<T>(path: &Path, r: Result<T, ConfigError>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

fn create_file(path: &Path) -> Result<io::BufWriter<fs::File>, CliError> {
    let wrap = |source| CliError::Output {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(wrap)?;
    }
    fs::File::create(path).map(io::BufWriter::new).map_err(wrap)
}

/// Runs one scenario file and writes its outputs; returns the metrics path.
pub fn simulate_file(
    config_path: &Path,
    data_dir: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
    events: Option<&Path>,
) -> Result<(PathBuf, SimOutcome), CliError> {
    let mut cfg = with_path(config_path, ScenarioConfig::load(config_path))?;
    if let Some(seed) = seed {
        cfg.simulation.seed = seed;
    }
    let scenario = with_path(config_path, cfg.build_scenario_in(data_dir))?;
    let outcome = with_path(config_path, simulate(&scenario).map_err(ConfigError::from))?;

    let metrics_path = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.simulation.output.clone())
        .unwrap_or_else(|| {
            config_path
                .with_extension("csv")
                .file_name()
                .unwrap()
                .into()
        });
    let mut w = create_file(&metrics_path)?;
    write_metrics_csv(&outcome.records, &mut w)
        .and_then(|_| w.flush())
        .map_err(|source| CliError::Output {
            path: metrics_path.clone(),
            source,
        })?;

    if let Some(events_path) = events
        .map(Path::to_path_buf)
        .or_else(|| cfg.simulation.event_log.clone())
    {
        let mut w = create_file(&events_path)?;
        write_event_log(&outcome.events, &mut w)
            .and_then(|_| w.flush())
            .map_err(|source| CliError::Output {
                path: events_path.clone(),
                source,
            })?;
    }
    Ok((metrics_path, outcome))
}

fn cmd_simulate(args: &SimulateArgs, data_dir: &Path) -> Result<(), CliError> {
    if args.configs.len() > 1 && (args.out.is_some() || args.events.is_some()) {
        return Err(CliError::Usage(
            "--out and --events need a single config".into(),
        ));
    }
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let run_one = |path: &PathBuf| {
        simulate_file(
            path,
            data_dir,
            args.seed,
            args.out.as_deref(),
            args.events.as_deref(),
        )
    };
    let results: Vec<_> = if args.jobs > 1 && args.configs.len() > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        use rayon::prelude::*;
        pool.install(|| args.configs.par_iter().map(run_one).collect())
    } else {
        args.configs.iter().map(run_one).collect()
    };

    let mut first_err = None;
    for (path, result) in args.configs.iter().zip(results) {
        match result {
            Ok((written, outcome)) => println!(
                "{}: {} records, final accuracy {:.4} -> {}",
                path.display(),
                outcome.records.len(),
                outcome.final_accuracy(),
                written.display()
            ),
            Err(e) => {
                eprintln!("error: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn cmd_windows(config: &Path, horizon: f64, out: Option<&Path>) -> Result<(), CliError> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(CliError::Usage(format!(
            "--horizon {horizon} must be positive"
        )));
    }
    let cfg = with_path(config, ScenarioConfig::load(config))?;
    let sats = with_path(config, cfg.satellites())?;
    let specs: Vec<_> = sats.iter().map(|(s, _)| *s).collect();
    let gs = cfg.ground_station.to_ground_station();
    let plan = with_path(
        config,
        ContactPlan::compute(&gs, &specs, 0.0, horizon).map_err(ConfigError::from),
    )?;
    let mut text = String::from("sat_id,rise_s,set_s\n");
    for w in plan.iter() {
        text.push_str(&format!(
            "{},{:.3},{:.3}\n",
            w.satellite_id, w.rise_time, w.set_time
        ));
    }
    match out {
        Some(path) => {
            let mut f = create_file(path)?;
            f.write_all(text.as_bytes())
                .and_then(|_| f.flush())
                .map_err(|source| CliError::Output {
                    path: path.to_path_buf(),
                    source,
                })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_baseline(
    config: &Path,
    data_dir: &Path,
    epochs: usize,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let cfg = with_path(config, ScenarioConfig::load(config))?;
    with_path(config, cfg.validate())?;
    let (train, test) = with_path(config, cfg.load_data(data_dir))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(cfg.simulation.seed));
    let model = with_path(
        config,
        train_centralized(&train, &cfg.training, epochs, &mut rng).map_err(ConfigError::from),
    )?;
    let eval = with_path(config, evaluate(&model, &test).map_err(ConfigError::from))?;
    println!(
        "epochs={epochs} accuracy={:.4} loss={:.4}",
        eval.accuracy, eval.loss
    );
    Ok(())
}

fn cmd_partition(config: &Path, data_dir: &Path, summary: bool) -> Result<(), CliError> {
    let cfg = with_path(config, ScenarioConfig::load(config))?;
    with_path(config, cfg.validate())?;
    let sats = with_path(config, cfg.satellites())?;
    let (train, _) = with_path(config, cfg.load_data(data_dir))?;
    let parts = with_path(config, cfg.partition_data(&train, &sats))?;
    if summary {
        let classes = train.class_count();
        let header: Vec<String> = (0..classes).map(|c| format!("class_{c}")).collect();
        println!("sat_id,shell,samples,{}", header.join(","));
        for (sat, shell) in &sats {
            let data = &parts[&sat.id];
            let hist: Vec<String> = data
                .class_histogram()
                .iter()
                .map(usize::to_string)
                .collect();
            println!("{},{},{},{}", sat.id, shell, data.len(), hist.join(","));
        }
    } else {
        let total: usize = parts.values().map(|d| d.len()).sum();
        println!(
            "{} satellites, {} samples assigned of {}",
            parts.len(),
            total,
            train.len()
        );
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(args, &cli.data_dir),
        Command::Windows {
            config,
            horizon,
            out,
        } => cmd_windows(config, *horizon, out.as_deref()),
        Command::Baseline {
            config,
            epochs,
            seed,
        } => cmd_baseline(config, &cli.data_dir, *epochs, *seed),
        Command::Partition { config, summary } => cmd_partition(config, &cli.data_dir, *summary),
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            if !matches!(cli.command, Command::Simulate(_)) {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    }
}
