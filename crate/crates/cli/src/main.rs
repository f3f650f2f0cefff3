//! `fracvar`: evaluate fractional operators and run limit experiments from
//! a TOML configuration.

mod config;
mod exit;
mod report;
mod run;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentKind, RunConfig};
use exit::CliError;
use run::RunContext;

#[derive(Parser, Debug)]
#[command(
    name = "fracvar",
    version,
    about = "Fractional gradients, variations and their limits on grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long, env = "FRACVAR_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "FRACVAR_OUT")]
    out: Option<PathBuf>,
    /// Leave timing and thread metadata out of every output file.
    #[arg(long, env = "FRACVAR_DETERMINISTIC")]
    deterministic: bool,
    /// Worker threads (default: all cores).
    #[arg(long, env = "FRACVAR_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Apply one operator to the configured input.
    Eval(Common),
    /// Run the configured limit experiments.
    Sweep(Common),
    /// Run the Γ-limit falsification check.
    Gamma(Common),
    /// Merge report files into one table.
    Report {
        /// JSON reports or CSV row files.
        inputs: Vec<PathBuf>,
        #[arg(long, env = "FRACVAR_OUT", default_value = ".")]
        out: PathBuf,
    },
}

fn setup(common: &Common) -> Result<(RunConfig, RunContext), CliError> {
    let env: BTreeMap<String, String> = std::env::vars().collect();
    let cfg = RunConfig::load(common.config.as_deref(), &env)?;
    if common.threads == Some(0) {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    if let Some(k) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = RunContext {
        out,
        deterministic: common.deterministic,
        threads: rayon::current_num_threads(),
        started: Instant::now(),
    };
    Ok((cfg, ctx))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Eval(c) => {
            let (cfg, ctx) = setup(&c)?;
            run::eval(&cfg, &ctx)
        }
        Command::Sweep(c) => {
            let (cfg, ctx) = setup(&c)?;
            run::sweep(&cfg, &cfg.experiment.list(), &ctx).map(|_| ())
        }
        Command::Gamma(c) => {
            let (cfg, ctx) = setup(&c)?;
            let reports = run::sweep(&cfg, &[ExperimentKind::Gamma], &ctx)?;
            for note in reports.iter().flat_map(|r| &r.notes) {
                println!("{note}");
            }
            Ok(())
        }
        Command::Report { inputs, out } => {
            let (_, text) = report::merge(&inputs, &out)?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::from(exit::EXIT_PASS as u8),
        Err(e) => {
            eprintln!("fracvar: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
