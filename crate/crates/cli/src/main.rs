use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gsa_cli::{run_casestudy, run_report, run_verify, CliError, Mode, RunConfig};
use gsa_digits::casestudy::Method;

/// Global sensitivity analysis benchmarks and the digit-classification case study.
#[derive(Debug, Parser)]
#[command(name = "gsa", version)]
struct Args {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// verify, casestudy or report.
    #[arg(long)]
    mode: Option<Mode>,
    /// Method to run; repeat to select several. Replaces the configured list.
    #[arg(long = "method")]
    methods: Vec<Method>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Most model evaluations any one method may spend.
    #[arg(long)]
    budget: Option<usize>,
}

fn configure(args: Args) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(mode) = args.mode {
        config.mode = mode;
    }
    if !args.methods.is_empty() {
        config.methods = args.methods;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = args.out {
        config.out = out;
    }
    if let Some(budget) = args.budget {
        config.budget = budget;
    }
    config.validate()?;
    Ok(config)
}

fn run(config: &RunConfig) -> Result<bool, CliError> {
    match config.mode {
        Mode::Verify => {
            let report = run_verify(&config.methods, &config.verify.benchmarks, &config.verify_sizes(), config.seed)?;
            report.write(&config.out.join("verify"))?;
            print!("{}", report.to_text());
            Ok(report.passed())
        }
        Mode::Casestudy => {
            let outcome = run_casestudy(config)?;
            print!("{}", outcome.comparison.to_text());
            println!("artifacts written to {}", config.out.display());
            Ok(true)
        }
        Mode::Report => {
            print!("{}", run_report(&config.out)?.to_text());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let result = configure(Args::parse()).and_then(|c| run(&c));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
