mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use psrecon::{Error, Result};

use config::RunConfig;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "psrecon", version, about = "Reconstruction of harmonic functions from hyperbolic point processes")]
struct Cli {
    /// `key = value` run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path, `-` for stdout; overrides the config.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads (speed only); falls back to PSRECON_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Restrict `verify` to a group or to checks whose name contains this text.
    #[arg(long, global = true)]
    filter: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the deterministic verification suite.
    Verify {
        /// Relative perturbation of every closed-form reference (sensitivity test).
        #[arg(long, default_value_t = 0.0, hide = true)]
        perturb: f64,
    },
    /// Draw one configuration and write it as CSV.
    Sample,
    /// Write a reconstruction trace over an exponent grid.
    Reconstruct,
    /// Variance reports, scans and closed-form ratio tables.
    Variance,
    /// Compare empirical boundary measures with the conformal density.
    Psmeasure,
    /// List the accepted configuration keys.
    Keys,
}

fn threads(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("PSRECON_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Usage(format!("PSRECON_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    if let Some(out) = &cli.out {
        cfg.set("out", out)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = threads(cli.threads)? {
        if n == 0 {
            return Err(Error::Usage("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Usage(format!("cannot size the thread pool: {e}")))?;
    }
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Verify { perturb } => commands::verify(cli.filter.clone(), perturb, cfg.out()),
        Command::Sample => commands::sample(&cfg).map(|_| true),
        Command::Reconstruct => commands::reconstruct(&cfg).map(|_| true),
        Command::Variance => commands::variance(&cfg).map(|_| true),
        Command::Psmeasure => commands::psmeasure(&cfg).map(|_| true),
        Command::Keys => {
            for (k, doc) in config::KEYS {
                println!("{k:<16} {doc}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY_FAILED),
        Err(e) => {
            eprintln!("psrecon: {e}");
            ExitCode::from(if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE })
        }
    }
}
