//! `volcomp`: config-driven runs of the volume comparison pipeline.
//!
//! Exit codes: 0 success, 1 internal failure, 2 hypothesis or domain error
//! (including inapplicable verdicts), 3 configuration error, 4 a checked
//! conclusion failed.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Format;
use output::Output;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_CONCLUSION: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] volcomp::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(e) if e.is_hypothesis_or_domain() => EXIT_HYPOTHESIS,
            CliError::Core(_) | CliError::Io(_) => EXIT_INTERNAL,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "volcomp", version, about = "Volume comparison of polar sets in semi-Riemannian metrics")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format; overrides `output.format`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for direction solves.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Monte-Carlo seed (oracle only); overrides `oracle.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Volume of the set and of its model counterpart.
    Volume,
    /// Run the theorem check selected in `[theorem]`.
    Verify,
    /// Ratio curve `V(r)` over `theorem.r_grid`.
    Ratio,
    /// Small-`t` expansion fits along `expand.directions`.
    Expand,
    /// Exact ratio-sum counterexample arithmetic.
    Counterexample,
    /// Scan `search.cuts` for increases of the ratio curve.
    Search,
    /// Polar volume against the Monte-Carlo coordinate oracle.
    Oracle,
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    if cli.seed.is_some() && cli.command != Command::Oracle {
        return Err(CliError::Config("--seed applies to the oracle command only".into()));
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    }
    let loaded = match (&cli.config, cli.command) {
        (None, Command::Counterexample) => None,
        (None, _) => return Err(CliError::Config("--config is required for this command".into())),
        (Some(path), _) => Some(config::load(path)?),
    };
    let (dir, format) = match &loaded {
        Some(l) => (
            cli.out.clone().or_else(|| l.config.output.dir.clone().map(PathBuf::from)),
            cli.format.or(l.config.output.format),
        ),
        None => (cli.out.clone(), cli.format),
    };
    let hash = loaded.as_ref().map(|l| l.hash.clone()).unwrap_or_default();
    let mut out = Output::new(dir.unwrap_or_else(|| PathBuf::from(".")), format.unwrap_or(Format::Both), hash)?;
    let code = match (cli.command, &loaded) {
        (Command::Counterexample, _) => commands::counterexample(&mut out)?,
        (cmd, Some(l)) => {
            let cfg = &l.config;
            match cmd {
                Command::Volume => commands::volume(cfg, &mut out)?,
                Command::Verify => commands::verify(cfg, &mut out)?,
                Command::Ratio => commands::ratio(cfg, &mut out)?,
                Command::Expand => commands::expand(cfg, &mut out)?,
                Command::Search => commands::search(cfg, &mut out)?,
                Command::Oracle => commands::oracle(cfg, cli.seed.unwrap_or(cfg.oracle.seed), &mut out)?,
                Command::Counterexample => unreachable!(),
            }
        }
        (_, None) => unreachable!(),
    };
    for path in &out.written {
        eprintln!("wrote {}", path.display());
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("volcomp: {e}");
            e.code()
        }
    };
    ExitCode::from(code as u8)
}
