//! Command-line front end: `hmmcredit <command> [--config PATH] ...`.
//!
//! Exit codes: 0 success, 1 a validation check failed, 2 configuration or
//! usage error, 3 bad input data, 4 numerical degeneracy.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::{
    ChainSection, IntensitySection, MgfModeName, NumericsSection, ObservationSection, PortfolioSection,
    PricingSection, ResamplingName, RunConfig, SelectorName, Variant,
};

use crate::dist::DistError;
use crate::filter::{FilterError, HistoryError};
use crate::mc::McError;
use crate::pricing::PricingError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("{0} validation check(s) failed")]
    ValidationFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ValidationFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<HistoryError> for CliError {
    fn from(e: HistoryError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        match e {
            FilterError::DegenerateEvidence { .. } | FilterError::InvalidPosterior | FilterError::Chain(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<DistError> for CliError {
    fn from(e: DistError) -> Self {
        match e {
            DistError::Filter(f) => f.into(),
            DistError::Quad(_) | DistError::Chain(_) => CliError::Numerical(e.to_string()),
            DistError::Mc(m) => m.into(),
            DistError::NotSymmetric | DistError::DimensionTooLarge(_) => CliError::Config(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            McError::DegenerateEvidence(_) | McError::Chain(_) => CliError::Numerical(e.to_string()),
            McError::NoPaths | McError::InvalidHorizon { .. } => CliError::Config(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<PricingError> for CliError {
    fn from(e: PricingError) -> Self {
        match e {
            PricingError::Dist(d) => d.into(),
            PricingError::Filter(f) => f.into(),
            PricingError::History(h) => h.into(),
            PricingError::ZeroAnnuity | PricingError::Quad(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hmmcredit", version, about = "Hidden-state contagion credit model: filtering, default-time laws, simulation and pricing")]
pub struct Cli {
    /// TOML configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `numerics.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the main output here (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Combine observation and default exposures through separate moment
    /// matrices instead of one joint matrix.
    #[arg(long, global = true)]
    pub paper_literal: bool,
    /// After n observation jumps use rate table `1 - (y0 + n) mod 2`.
    #[arg(long, global = true)]
    pub literal_c: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Posterior of the hidden state after each event: `time,p_x0,p_x1`.
    Filter {
        /// Event CSV with header `time,kind,obligor`.
        #[arg(long)]
        events: Option<PathBuf>,
        /// End of the observation window; defaults to `pricing.t`.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Premium of the three-name CDS, or a sensitivity table.
    PriceCds {
        /// One-at-a-time sweep, `NAME=START:STOP:STEPS` with NAME in a, b, c.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Daily kth-to-default basket values: `day,value,scenario`.
    PriceBasket {
        #[arg(long)]
        events: Option<PathBuf>,
        /// Label written in the scenario column.
        #[arg(long, default_value = "base")]
        scenario: String,
    },
    /// Default times by total hazard construction: `path_id,obligor,default_time`.
    Simulate {
        /// Overrides `numerics.mc_paths`.
        #[arg(long)]
        paths: Option<usize>,
        /// Overrides `pricing.T`.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Joint density of the survivors' default times at `pricing.t`.
    Density {
        /// Comma-separated `obligor:time` pairs, one per survivor.
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<String>,
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Law of the number of defaults: `s,k,interval_prob,survival`.
    Ordered {
        /// Comma-separated evaluation times.
        #[arg(long, value_delimiter = ',', required = true)]
        at: Vec<f64>,
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Run the self-check suite: `check,measured,limit,result`.
    Validate {
        /// Paths per simulation check.
        #[arg(long, default_value_t = 20_000)]
        paths: usize,
        /// Scale the joint density by 1.01 to confirm the suite can fail.
        #[arg(long)]
        negative_control: bool,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hmmcredit: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.numerics.seed = seed;
    }
    if cli.paper_literal {
        cfg.numerics.mgf_mode = MgfModeName::PaperLiteral;
    }
    if cli.literal_c {
        cfg.observation.selector = SelectorName::LiteralParity;
    }
    let output = match &cli.command {
        Command::Filter { events, horizon } => commands::filter(&cfg, events.as_deref(), *horizon)?,
        Command::PriceCds { sweep } => commands::price_cds(&cfg, sweep.as_deref())?,
        Command::PriceBasket { events, scenario } => commands::price_basket(&cfg, events.as_deref(), scenario)?,
        Command::Simulate { paths, horizon } => commands::simulate(&cfg, *paths, *horizon)?,
        Command::Density { times, events } => commands::density(&cfg, times, events.as_deref())?,
        Command::Ordered { at, events } => commands::ordered(&cfg, at, events.as_deref())?,
        Command::Validate { paths, negative_control } => {
            let (report, failed) = commands::validate(&cfg, *paths, *negative_control)?;
            write_output(cli.out.as_deref(), &report)?;
            return match failed {
                0 => Ok(()),
                n => Err(CliError::ValidationFailed(n)),
            };
        }
    };
    write_output(cli.out.as_deref(), &output)
}

/// Writes to `path` through a temporary file in the same directory, or to
/// stdout.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Input(format!("cannot write output: {e}"));
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes()).map_err(io)?;
            out.flush().map_err(io)
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
            tmp.write_all(content.as_bytes()).map_err(io)?;
            tmp.as_file().sync_all().map_err(io)?;
            tmp.persist(p).map_err(|e| io(e.error))?;
            Ok(())
        }
    }
}
