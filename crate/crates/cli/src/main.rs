//! `cohradar`: run sweeps, Monte Carlo batches, spectra and plan summaries
//! from JSON scenario files.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cohradar_core::estimator::DEFAULT_F_THRESHOLD;
use cohradar_core::DEFAULT_CARRIER_HZ;
use log::LevelFilter;

use crate::commands::{AnalyzeArgs, Output};
use crate::config::{ModeName, PlanConfig, ScenarioConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "cohradar", version, about = "Partially coherent radar simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`, default `.`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Phase and noise seed, overriding both config seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeName>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// One sweep; writes sweep.csv and sweep.json.
    Sweep,
    /// Repeated sweeps with oracle comparison; writes montecarlo.csv and
    /// montecarlo.json.
    Montecarlo {
        /// Also write each trial as trial_NNNN.csv.
        #[arg(long)]
        write_trials: bool,
    },
    /// Breakpoint ranging over sweep CSV files; writes analysis.json.
    Analyze {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Number of targets; chosen by F-test on the mean curve when absent.
        #[arg(long)]
        targets: Option<usize>,
        #[arg(long, default_value_t = 2)]
        max_targets: usize,
        /// Round-trip cable and component path, meters; defaults to the
        /// config value or 0.
        #[arg(long)]
        delay_offset: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_F_THRESHOLD)]
        threshold: f64,
    },
    /// Sweep time and bandwidth figures, printed as JSON.
    Plan(PlanArgs),
    /// Transmit spectra at selected sweep points.
    Spectrum {
        /// Sample rate, Hz; overrides `fs_hz`.
        #[arg(long)]
        fs: Option<f64>,
    },
}

#[derive(Args)]
struct PlanArgs {
    /// Physical target separation, meters, for the resolution ratio.
    #[arg(long)]
    separation_m: Option<f64>,
    #[arg(long)]
    tau0_s: Option<f64>,
    #[arg(long)]
    delta_tau_s: Option<f64>,
    #[arg(long)]
    l0_m: Option<f64>,
    #[arg(long)]
    span_m: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    pulses: Option<usize>,
    #[arg(long)]
    carrier_hz: Option<f64>,
}

impl PlanArgs {
    fn has_plan_fields(&self) -> bool {
        self.tau0_s.is_some()
            || self.delta_tau_s.is_some()
            || self.l0_m.is_some()
            || self.span_m.is_some()
            || self.points.is_some()
            || self.pulses.is_some()
            || self.carrier_hz.is_some()
    }

    fn to_config(&self) -> Result<ScenarioConfig, CliError> {
        let missing = |name: &str| CliError::Schema(format!("plan: --{name} is required without --config"));
        let plan = PlanConfig {
            tau0_s: self.tau0_s,
            delta_tau_s: self.delta_tau_s,
            l0_m: self.l0_m,
            span_m: self.span_m,
            points: self.points.ok_or_else(|| missing("points"))?,
            pulses: self.pulses.ok_or_else(|| missing("pulses"))?,
            carrier_hz: self.carrier_hz.unwrap_or(DEFAULT_CARRIER_HZ),
            seed: 0,
        };
        let text = serde_json::to_string(&serde_json::json!({ "plan": plan }))?;
        ScenarioConfig::parse(&text)
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("COHRADAR_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Schema(format!("COHRADAR_THREADS: expected a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Precondition(e.to_string()))
}

fn load(common: &Common) -> Result<ScenarioConfig, CliError> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Schema("--config is required for this command".into()))?;
    let mut cfg = ScenarioConfig::load(path)?;
    cfg.apply_overrides(common.seed, common.mode, common.trials);
    Ok(cfg)
}

fn output(common: &Common, cfg: Option<&ScenarioConfig>) -> Result<Output, CliError> {
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    Output::new(dir)
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let common = &cli.common;
    match cli.command {
        Command::Sweep => {
            let cfg = load(common)?;
            commands::sweep(&cfg, &output(common, Some(&cfg))?)
        }
        Command::Montecarlo { write_trials } => {
            let cfg = load(common)?;
            commands::montecarlo(&cfg, &output(common, Some(&cfg))?, write_trials)
        }
        Command::Analyze {
            files,
            targets,
            max_targets,
            delay_offset,
            threshold,
        } => {
            let cfg = common.config.as_ref().map(|_| load(common)).transpose()?;
            let delay_offset_m = delay_offset
                .or_else(|| cfg.as_ref().map(|c| c.delay_offset_m))
                .unwrap_or(0.0);
            let args = AnalyzeArgs {
                files,
                targets,
                max_targets,
                delay_offset_m,
                threshold,
            };
            commands::analyze(&args, &output(common, cfg.as_ref())?)
        }
        Command::Plan(args) => {
            let cfg = match (&common.config, args.has_plan_fields()) {
                (Some(_), true) => {
                    return Err(CliError::Schema("plan: give either --config or plan flags, not both".into()))
                }
                (Some(_), false) => load(common)?,
                (None, _) => args.to_config()?,
            };
            let out = match &common.out {
                Some(_) => Some(output(common, Some(&cfg))?),
                None => None,
            };
            commands::plan(&cfg, args.separation_m, out.as_ref())
        }
        Command::Spectrum { fs } => {
            let mut cfg = load(common)?;
            if fs.is_some() {
                cfg.fs_hz = fs;
            }
            commands::spectrum(&cfg, &output(common, Some(&cfg))?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let level = if cli.common.quiet { LevelFilter::Error } else { LevelFilter::Info };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cohradar: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
