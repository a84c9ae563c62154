use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sr_mcmc::chains::DeleteFactor;
use sr_mcmc_cli::commands;
use sr_mcmc_cli::config::{RunConfig, SEED_ENV};
use sr_mcmc_cli::error::{CliError, EXIT_CONFIG};

/// Samplers and exact checks for strongly Rayleigh measures and DPPs.
#[derive(Parser)]
#[command(name = "sr-mcmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run chains and write one JSONL transcript per chain.
    Sample(Common),
    /// Enumerate the distribution, marginals and log-submodularity verdict.
    Exact(Common),
    /// Verify stationarity, lumping and mixing-time bounds exactly.
    Check {
        #[command(flatten)]
        common: Common,
        /// Use the delete factor |S|/(N-|S|+1) in the projection chain;
        /// the stationarity check is then expected to fail.
        #[arg(long)]
        paper_literal_delete: bool,
    },
    /// Print the mixing-time bounds for the configured initial set.
    Bound(Common),
    /// Compare chains by PSRF convergence and write CSV tables.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Overrides SR_MCMC_SEED and the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, u64), CliError> {
        let cfg = RunConfig::load(&self.config)?;
        let env = std::env::var(SEED_ENV).ok();
        let seed = cfg.resolve_seed(self.seed, env.as_deref())?;
        Ok((cfg, seed))
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Sample(c) => {
            let (cfg, seed) = c.load()?;
            commands::sample(&cfg, &c.out, seed)
        }
        Command::Exact(c) => {
            let (cfg, _) = c.load()?;
            commands::exact(&cfg, &c.out)
        }
        Command::Check { common, paper_literal_delete } => {
            let (cfg, _) = common.load()?;
            let factor = if paper_literal_delete { DeleteFactor::Inverted } else { DeleteFactor::Balanced };
            commands::check(&cfg, &common.out, factor)
        }
        Command::Bound(c) => {
            let (cfg, seed) = c.load()?;
            commands::bound(&cfg, &c.out, seed)
        }
        Command::Compare(c) => {
            let (cfg, seed) = c.load()?;
            commands::compare(&cfg, &c.out, seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
