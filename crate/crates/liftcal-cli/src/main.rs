use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use liftcal_cli::config::{ExperimentConfig, Mode};
use liftcal_cli::{dump_tracking, run_sweep, run_validate, HarnessError};

#[derive(Parser)]
#[command(
    name = "liftcal",
    version,
    about = "Pulse-level gate calibration experiments against a simulated device"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded Monte Carlo sweep over error magnitudes
    Sweep(SweepArgs),
    /// Dump reference-vs-rollout trajectories for a single trial
    Track(TrackArgs),
    /// Run the built-in property checks
    Validate,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file mirroring the sweep configuration fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overridden by the LIFTCAL_SEED environment variable)
    #[arg(long)]
    seed: Option<u64>,
    /// Rollout budget per trial
    #[arg(long)]
    max_rollouts: Option<usize>,
    /// Gate fidelity at which a trial terminates
    #[arg(long)]
    target_fidelity: Option<f64>,
    /// Control-rate regularization weight of the learning controller
    #[arg(long)]
    lambda: Option<f64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mean error magnitudes, comma separated
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Trials per error magnitude
    #[arg(long)]
    trials: Option<usize>,
    /// Calibration mode: lift, ilc-only, or both
    #[arg(long)]
    mode: Option<String>,
    /// Worker pool size (0 = one worker per core)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mean error magnitude of the trial
    #[arg(long)]
    eps: f64,
}

fn build_config(common: &CommonArgs) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Ok(env_seed) = std::env::var("LIFTCAL_SEED") {
        cfg.master_seed = env_seed.parse().map_err(|_| {
            HarnessError::Config(format!("LIFTCAL_SEED is not a valid seed: '{env_seed}'"))
        })?;
    }
    if let Some(n) = common.max_rollouts {
        cfg.lift.max_rollouts = n;
    }
    if let Some(f) = common.target_fidelity {
        cfg.lift.target_fidelity = f;
    }
    if let Some(l) = common.lambda {
        cfg.lift.lambda = l;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn sweep(args: &SweepArgs) -> Result<(), HarnessError> {
    let mut cfg = build_config(&args.common)?;
    if let Some(eps) = &args.eps {
        cfg.eps_levels = eps.clone();
    }
    if let Some(trials) = args.trials {
        cfg.trials_per_level = trials;
    }
    if let Some(mode) = &args.mode {
        cfg.mode = Mode::parse(mode)?;
    }
    cfg.check()?;
    let summary = run_sweep(&cfg, args.jobs)?;
    for eps in &summary.per_eps {
        for (tag, stats) in &eps.modes {
            println!(
                "eps {:>5}: {:8} converged {:5.1}% | median terminal infidelity {:.3e} | median rollouts {}",
                eps.eps_mean,
                tag,
                100.0 * stats.convergence_rate,
                stats.median_terminal_infidelity,
                stats.median_rollouts_used,
            );
        }
    }
    println!(
        "wrote {} and {}",
        cfg.output_dir.join("trials.csv").display(),
        cfg.output_dir.join("summary.json").display()
    );
    Ok(())
}

fn track(args: &TrackArgs) -> Result<(), HarnessError> {
    let cfg = build_config(&args.common)?;
    cfg.check()?;
    let seed = liftcal_cli::trial_seed(cfg.master_seed, 0, 0);
    let report = dump_tracking(&cfg, args.eps, seed)?;
    for (stage, path) in &report.written {
        println!("stage {stage}: {}", path.display());
    }
    for (stage, note) in &report.omitted {
        println!("stage {stage}: {note}");
    }
    println!("manifest: {}", report.manifest_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep(args) => sweep(args),
        Command::Track(args) => track(args),
        Command::Validate => match run_validate() {
            Ok(true) => Ok(()),
            Ok(false) => {
                eprintln!("validation failed");
                return ExitCode::from(3);
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
