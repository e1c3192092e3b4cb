//! Command-line front end: `ingest`, `diagnose`, `fit`, `backtest` and
//! `simulate`, driven by one TOML config with flag overrides.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{cmd_backtest, cmd_diagnose, cmd_fit, cmd_ingest, cmd_simulate, write_atomic, Written};
pub use config::{
    DataConfig, DiagnoseConfig, ModelConfig, Overrides, PredictSection, RunConfig, SessionConfig, SimulateConfig,
};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "gchp", version, about = "Compound Hawkes mid-price modelling toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Input layout: levels-10 or lobster-like.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Comma-separated model kinds, e.g. DO,2SDO,4DO,NSDO.
    #[arg(long, global = true, value_delimiter = ',')]
    pub kinds: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub method: Option<String>,
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Training window, seconds.
    #[arg(long, global = true)]
    pub train: Option<f64>,
    /// Test window, seconds.
    #[arg(long, global = true)]
    pub test: Option<f64>,
    /// Walk-forward step, seconds.
    #[arg(long, global = true)]
    pub step: Option<f64>,
    #[arg(long, global = true)]
    pub alpha3: Option<f64>,
    #[arg(long, global = true)]
    pub alpha2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Parse book files into canonical per-session event files.
    Ingest,
    /// Clustering, inter-arrival and autocorrelation tables.
    Diagnose,
    /// Fit every model kind per session and pick the best.
    Fit,
    /// Walk-forward prediction backtest.
    Backtest,
    /// Generate synthetic book and event files.
    Simulate,
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            format: self.format.clone(),
            kinds: self.kinds.clone(),
            method: self.method.clone(),
            paths: self.paths,
            train: self.train,
            test: self.test,
            step: self.step,
            alpha3: self.alpha3,
            alpha2: self.alpha2,
        }
    }

    /// The effective configuration: file (or defaults), then flags.
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(&self.overrides());
        Ok(cfg)
    }
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Written> {
    match command {
        Command::Ingest => cmd_ingest(cfg),
        Command::Diagnose => cmd_diagnose(cfg),
        Command::Fit => cmd_fit(cfg),
        Command::Backtest => cmd_backtest(cfg),
        Command::Simulate => cmd_simulate(cfg),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = cli.run_config().and_then(|cfg| run(cli.command, &cfg));
    match outcome {
        Ok(written) => {
            for f in &written.files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            report_chain(&e);
            e.exit_code()
        }
    }
}

fn report_chain(e: &Error) {
    let mut source = std::error::Error::source(e);
    while let Some(s) = source {
        eprintln!("  caused by: {s}");
        source = s.source();
    }
}
