//! Command line front end: computes approximation complexities of additive
//! random fields from a JSON run configuration and emits CSV.
//!
//! Exit codes: 0 success, 1 io failure, 2 configuration error, 3 regime
//! error on every grid point, 4 resource cap hit.

mod config;
mod run;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::CliError;
use run::RunOutput;

#[derive(Parser)]
#[command(
    name = "addfield",
    version,
    about = "Average-case approximation complexity of additive random fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One count at a single (d, eps) point
    Complexity(CommonArgs),
    /// One counting method over the (d, eps) grid
    Curve(CommonArgs),
    /// Exact, reduced, and integral counts next to the asymptotic prediction
    Compare(CommonArgs),
    /// Per-dimension regime diagnostics and limit-distribution distances
    Diagnose(CommonArgs),
    /// Top of the merged eigenvalue spectrum with source indices
    Spectrum(SpectrumArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to available parallelism)
    #[arg(long)]
    threads: Option<usize>,
    /// Override the configured method
    #[arg(long)]
    method: Option<String>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of leading eigenvalues to list
    #[arg(long, default_value_t = 20)]
    top: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode, CliError> {
    let common = match &cli.command {
        Command::Complexity(args)
        | Command::Curve(args)
        | Command::Compare(args)
        | Command::Diagnose(args) => args,
        Command::Spectrum(args) => &args.common,
    };
    let mut settings = config::load(&common.config)?;
    if let Some(name) = &common.method {
        settings.method = name.parse()?;
    }
    let pool = build_pool(common.threads)?;
    let output: RunOutput = pool.install(|| match &cli.command {
        Command::Complexity(_) => run::run_complexity(&settings),
        Command::Curve(_) => run::run_curve(&settings),
        Command::Compare(_) => run::run_compare(&settings),
        Command::Diagnose(_) => run::run_diagnose(&settings),
        Command::Spectrum(args) => run::run_spectrum(&settings, args.top),
    })?;
    write_output(common.out.as_deref(), &output.csv)?;
    if output.all_regime {
        eprintln!("regime error: every grid point fell outside the applicable regime");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn build_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn write_output(path: Option<&Path>, csv: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, csv)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(csv.as_bytes())
            .map_err(|e| CliError::Io(format!("writing standard output: {e}"))),
    }
}
