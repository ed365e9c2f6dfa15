use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::error;
use sampdisc::experiment::{run_experiment, summary_table, ExperimentConfig, Overrides};
use sampdisc::Error;

/// Run a sampling-discretization experiment described by a JSON config.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.json and series.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_exponent)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Tolerance override, e.g. `--tolerance restarts=16`; repeatable.
    #[arg(long = "tolerance", value_name = "KEY=VAL")]
    tolerances: Vec<String>,
}

fn parse_exponent(s: &str) -> Result<f64, String> {
    match s {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => s.parse().map_err(|e| format!("{e}")),
    }
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BUDGET: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config { .. } => EXIT_CONFIG,
        Error::BudgetExhausted { .. } | Error::SearchFailed { .. } => EXIT_BUDGET,
        _ => EXIT_FAILURE,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let mut config = ExperimentConfig::from_file(&cli.config)?;
    config.apply(&Overrides {
        seed: cli.seed,
        out: cli.out,
        p: cli.p,
        q: cli.q,
        eps: cli.eps,
        trials: cli.trials,
        threshold: cli.threshold,
        tolerances: cli.tolerances,
    })?;
    let report = run_experiment(&config)?;
    print!("{}", summary_table(&report));
    Ok(if report.summary.exhausted { EXIT_BUDGET } else { 0 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
