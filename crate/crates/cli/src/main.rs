//! `cbsim` — run coordinated-beamforming sweeps, closed-form bounds, and
//! config validation from the command line.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 numerical
//! failure rate above 50% during a sweep.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cbsim_core::config::parse_config;
use cbsim_core::report::{emit_bounds_csv, emit_csv};
use cbsim_core::simulate::run_sweep;
use cbsim_core::Error;

#[derive(Parser)]
#[command(name = "cbsim", version, about = "Downlink coordinated beamforming simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep described by a config file and write CSV.
    Run(RunArgs),
    /// Evaluate the closed-form two-cell coordination bounds over an SNR grid.
    Bounds(BoundsArgs),
    /// Parse and validate a config file without running it.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config file (flat `key = value` format).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides any `seed` key in the config.
    #[arg(long)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Override the config's trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (0 = all cores). The CBSIM_WORKERS environment
    /// variable takes precedence.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Comma-separated SNR grid in dB.
    #[arg(long = "snr-db", value_delimiter = ',', required = true)]
    snr_db: Vec<f64>,
    /// Relative intra-cluster interference power.
    #[arg(long)]
    alpha: f64,
    /// Relative out-of-cluster interference power.
    #[arg(long)]
    beta: f64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::Validation(_) | Error::InvalidArgument(_) => 2,
        Error::NumericalFailure(_) => 3,
        Error::Unsupported(_) => 2,
    }
}

fn read_config(path: &PathBuf) -> Result<String, ExitCode> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(1)
    })
}

fn write_output(path: &PathBuf, text: &str) -> Result<(), ExitCode> {
    std::fs::write(path, text).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        ExitCode::from(1)
    })
}

fn effective_workers(flag: Option<usize>) -> Option<usize> {
    match std::env::var("CBSIM_WORKERS") {
        Ok(value) => match value.parse::<usize>() {
            Ok(n) => Some(n),
            Err(_) => {
                eprintln!("warning: ignoring unparsable CBSIM_WORKERS='{value}'");
                flag
            }
        },
        Err(_) => flag,
    }
}

fn run(args: RunArgs) -> ExitCode {
    let text = match read_config(&args.config) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let (cfg, mut scenario, schemes) = match parse_config(&text) {
        Ok(parsed) => parsed,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e));
        }
    };
    scenario.master_seed = args.seed;
    if let Some(trials) = args.trials {
        scenario.trials = trials;
    }
    if let Err(e) = scenario.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(exit_code_for(&e));
    }
    let workers = effective_workers(args.workers);
    let table = match run_sweep(&cfg, &scenario, &schemes, workers) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e));
        }
    };
    for failure in &table.failures {
        eprintln!(
            "warning: {} snr={} trial={} failed: {}",
            failure.scheme.name(),
            failure.snr_db,
            failure.trial,
            failure.message
        );
    }
    if let Err(code) = write_output(&args.out, &emit_csv(&table)) {
        return code;
    }
    eprintln!(
        "wrote {} trial rows ({} failures) to {}",
        table.trials.len(),
        table.failures.len(),
        args.out.display()
    );
    if table.failure_rate() > 0.5 {
        eprintln!("error: numerical failure rate above 50%");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}

fn bounds(args: BoundsArgs) -> ExitCode {
    match emit_bounds_csv(&args.snr_db, args.alpha, args.beta) {
        Ok(csv) => match write_output(&args.out, &csv) {
            Ok(()) => ExitCode::SUCCESS,
            Err(code) => code,
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn validate(args: ValidateArgs) -> ExitCode {
    let text = match read_config(&args.config) {
        Ok(t) => t,
        Err(code) => return code,
    };
    match parse_config(&text) {
        Ok((cfg, scenario, schemes)) => {
            println!(
                "ok: B={} nT={:?} nR={:?} alpha={} beta={} np={} snr points={} trials={} schemes={}",
                cfg.n_bs,
                cfg.n_tx,
                cfg.n_rx,
                scenario.alpha,
                scenario.beta,
                scenario.pilots,
                scenario.snr_db.len(),
                scenario.trials,
                schemes
                    .iter()
                    .map(|s| s.name())
                    .collect::<Vec<_>>()
                    .join(",")
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Bounds(args) => bounds(args),
        Command::Validate(args) => validate(args),
    }
}
