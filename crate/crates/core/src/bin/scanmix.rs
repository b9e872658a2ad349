use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scanmix::harness::{run_scenario, ExperimentConfig, OutputFormat, Scenario};

#[derive(Parser)]
#[command(name = "scanmix", version, about = "Scan-dynamics mixing experiments for the mean-field Ising model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Export exact lumped kernels.
    Kernel,
    /// High-temperature cutoff profiles.
    Profile,
    /// Mixing-time scaling at the critical temperature.
    Critical,
    /// Restricted dynamics at low temperature.
    Restricted,
    /// Property suite; exits with status 1 if any check fails.
    Properties {
        /// Run the suite against the wrong local field (self-spin included).
        #[arg(long)]
        inject_self_spin: bool,
    },
    /// Per-step trace of a coupled pair.
    Couple,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; scenario defaults are used without it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; every replica stream is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads [default: config `workers`, else all cores].
    #[arg(long, global = true, env = "SCANMIX_WORKERS")]
    workers: Option<usize>,
    /// Output directory [default: config `out`, else ./results].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Record wall time per job in the results (output is then not reproducible).
    #[arg(long, global = true)]
    timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> scanmix::Result<bool> {
    let scenario = match cli.command {
        Command::Kernel => Scenario::KernelExport,
        Command::Profile => Scenario::CutoffProfile,
        Command::Critical => Scenario::CriticalScaling,
        Command::Restricted => Scenario::RestrictedScaling,
        Command::Properties { .. } => Scenario::PropertySuite,
        Command::Couple => Scenario::CoupleTrace,
    };
    let mut config = match &cli.common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::defaults(scenario),
    };
    if config.scenario != scenario {
        return Err(scanmix::Error::Config(format!(
            "config is for scenario {} but the subcommand runs {scenario}",
            config.scenario
        )));
    }
    if let Command::Properties { inject_self_spin: true } = cli.command {
        config.inject_self_spin = true;
    }
    if let Some(seed) = cli.common.seed {
        config.seed = seed;
    }
    if let Some(format) = cli.common.format {
        config.format = match format {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    config.record_timing |= cli.common.timing;
    let workers = cli
        .common
        .workers
        .or(config.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(scanmix::Error::Config("workers must be positive".into()));
    }
    let out = cli.common.out.or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("results"));
    let result = run_scenario(&config, workers, &out)?;
    for f in &result.files {
        println!("{}", f.display());
    }
    if !result.passed {
        eprintln!("property suite reported failures; see the report file");
    }
    Ok(result.passed)
}
