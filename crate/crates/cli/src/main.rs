//! `optotunnel`: command-line driver for the membrane tunneling simulator.
//!
//! Precedence for every setting is command-line flag, then config file, then
//! built-in default. Exit status is 0 on success, 1 when the input is
//! invalid and 2 when a computation fails.

mod commands;
mod config;
mod output;
mod svg;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Format, RunConfig};

/// Input that fails validation (exit status 1).
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Parser)]
#[command(name = "optotunnel", version, about = "Membrane tunneling in a cavity-induced double well")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample U(x) and summarize the well geometry.
    Potential(Common),
    /// Lowest eigenstates of the stationary problem.
    Spectrum(Common),
    /// Geometry and tunneling rate over a parameter range.
    Sweep(Common),
    /// One measured trajectory plus the unmeasured reference.
    Trajectory(Common),
    /// Post-selected ensemble of trajectories.
    Ensemble(Common),
    /// Well-crossing probability against pulse rate.
    Zeno(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `measurement.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps and ensembles.
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated list of output formats.
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
}

fn context(common: &Common) -> anyhow::Result<commands::Context> {
    let mut config = match &common.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        if let Some(m) = config.measurement.as_mut() {
            m.seed = seed;
        }
    }
    config.validate()?;
    let out = common
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let formats: BTreeSet<Format> = common
        .format
        .clone()
        .or_else(|| config.output.formats.clone())
        .unwrap_or_else(|| vec![Format::Csv, Format::Json, Format::Svg])
        .into_iter()
        .collect();
    Ok(commands::Context {
        config,
        out,
        formats,
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (common, action): (&Common, fn(&commands::Context) -> anyhow::Result<()>) = match &cli.command {
        Command::Potential(c) => (c, commands::potential),
        Command::Spectrum(c) => (c, commands::spectrum),
        Command::Sweep(c) => (c, commands::sweep),
        Command::Trajectory(c) => (c, commands::trajectory),
        Command::Ensemble(c) => (c, commands::ensemble),
        Command::Zeno(c) => (c, commands::zeno),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Invalid("`--threads` must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let ctx = context(common)?;
    action(&ctx)
}

fn main() -> ExitCode {
    let no_color = std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty());
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .write_style(if no_color {
            env_logger::WriteStyle::Never
        } else {
            env_logger::WriteStyle::Auto
        })
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Invalid>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
