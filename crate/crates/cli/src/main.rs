//! Command-line front-end: reads a TOML run configuration, runs one analysis
//! and writes CSV tables, `report.txt` and `manifest.toml`.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Artifacts;

#[derive(Parser)]
#[command(
    name = "slriesz",
    version,
    about = "Spectra and Riesz-basis diagnostics for regular but not strongly regular Sturm-Liouville problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Theta coefficients, regularity, case and canonical form.
    Classify(Common),
    /// Eigenvalue table over the index range.
    Eigs(Common),
    /// Residuals against the asymptotic formulas.
    Asym(Common),
    /// Eigenfunction pair angles and the Riesz-basis verdict.
    Riesz(Common),
    /// Comparison with the finite-difference pencil.
    Oracle(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    n_min: Option<i64>,
    #[arg(long)]
    n_max: Option<i64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(&self.config)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", self.config.display())))?;
        let mut cfg = RunConfig::parse(&text)?;
        if let Some(dir) = &self.out {
            cfg.output = dir.clone();
        }
        if let Some(n) = self.n_min {
            cfg.n_range[0] = n;
        }
        if let Some(n) = self.n_max {
            cfg.n_range[1] = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

type Handler = fn(&RunConfig) -> Result<Artifacts, CliError>;

fn run(cli: Cli) -> Result<String, CliError> {
    let (name, common, cmd): (&str, &Common, Handler) = match &cli.command {
        Command::Classify(c) => ("classify", c, commands::classify),
        Command::Eigs(c) => ("eigs", c, commands::eigs),
        Command::Asym(c) => ("asym", c, commands::asym),
        Command::Riesz(c) => ("riesz", c, commands::riesz),
        Command::Oracle(c) => ("oracle", c, commands::oracle),
    };
    let cfg = common.load()?;
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let art = cmd(&cfg)?;
    output::write_all(&cfg.output, name, &cfg, &art)?;
    Ok(art.report)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("slriesz: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
