use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flowdecomp_cli::config::Study;
use flowdecomp_cli::{pipeline, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "flowdecomp", version, about = "Decompose regional labor-supply-shock effects into worker flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (`key = value` with `[section]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the simulator and the bootstrap.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Bootstrap replications (0 for analytic standard errors).
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated studies, or `all`.
    #[arg(long, global = true)]
    study: Option<String>,
    #[arg(long, global = true)]
    base_year: Option<i32>,
    #[arg(long, global = true)]
    end_year: Option<i32>,
    /// Input directory for `estimate` and `report` (defaults to --out).
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Monte Carlo replications for `validate`.
    #[arg(long, global = true)]
    replications: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Simulate a panel and write spells, municipalities, tasks and truth.
    Simulate,
    /// Run studies on a panel and write tables and CSVs.
    Estimate,
    /// Compare estimate CSVs with the simulator's ground truth.
    Report,
    /// Monte Carlo check of the estimators against ground truth.
    Validate,
}

fn config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.sim.seed = s;
        cfg.bootstrap_seed = s;
    }
    if let Some(r) = cli.reps {
        cfg.bootstrap_reps = r;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = &cli.study {
        cfg.studies = Study::parse_list(s)?;
    }
    if let Some(y) = cli.base_year {
        cfg.base_year = y;
    }
    if let Some(y) = cli.end_year {
        cfg.end_year = y;
    }
    if let Some(d) = &cli.data {
        cfg.data_dir = Some(d.clone());
    }
    if let Some(n) = cli.replications {
        cfg.replications = n;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = config(cli)?;
    match cli.command {
        Command::Simulate => pipeline::run_simulate(&cfg),
        Command::Estimate => pipeline::run_estimate(&cfg),
        Command::Report => pipeline::run_report(&cfg),
        Command::Validate => pipeline::run_validate(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("flowdecomp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
