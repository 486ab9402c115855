//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation or runtime failure, 2 usage or
//! configuration error.

pub mod commands;
pub mod config;
pub mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{default_tau_grid, tau_grid, SystemConfig};
use crate::error::{Error, Result};
use crate::fading::FadingParams;
use crate::sim::{HarvestCap, SimOptions};
use crate::validation::ValidateOptions;

pub use commands::{cmd_analyze, cmd_range, cmd_simulate, cmd_simulate_with, cmd_validate};
pub use config::{load_config, parse_config};
pub use report::{read_csv, CsvRow, ReportRow, RunReport};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "ehcr",
    version,
    about = "Wireless-powered cognitive radio performance analysis and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form metrics over a τ grid.
    Analyze(SweepArgs),
    /// Closed-form metrics plus Monte Carlo estimates.
    Simulate(SimulateArgs),
    /// Run every invariant suite; exit 1 if any fails.
    Validate(ValidateArgs),
    /// Print the effective harvesting range in metres.
    Range(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CapArg {
    Capacity,
    Strict,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// key = value configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Number of beacon antennas (sets μ of the PB→ST link).
    #[arg(long = "L", value_name = "INT", value_parser = clap::value_parser!(u32).range(1..))]
    pub antennas: Option<u32>,
    /// Ignore amplifier inefficiency and circuit power.
    #[arg(long, conflicts_with = "non_ideal")]
    pub ideal: bool,
    /// Include amplifier inefficiency and circuit power.
    #[arg(long)]
    pub non_ideal: bool,
    /// Target rate in bps/Hz.
    #[arg(long, value_name = "R")]
    pub rate: Option<f64>,
    /// Single switching time, overriding the config.
    #[arg(long, value_name = "TAU")]
    pub tau: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// τ grid as start:stop:step, or a single value.
    #[arg(long, value_name = "a:b:step")]
    pub tau_grid: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, value_name = "N", default_value_t = commands::DEFAULT_PLACEMENTS,
          value_parser = clap::value_parser!(u64).range(1..))]
    pub placements: u64,
    #[arg(long, value_name = "N", default_value_t = commands::DEFAULT_SLOTS,
          value_parser = clap::value_parser!(u64).range(1..))]
    pub slots: u64,
    #[arg(long, value_name = "N", default_value_t = commands::DEFAULT_SEED)]
    pub seed: u64,
    /// Per-frame harvest limit.
    #[arg(long, value_enum, default_value_t = CapArg::Capacity)]
    pub harvest_cap: CapArg,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_name = "N", default_value_t = ValidateOptions::default().seed)]
    pub seed: u64,
    /// Write the full report here as well.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Test hook: scale Ω of both links before the fading suites.
    #[arg(long, value_name = "FACTOR", hide = true)]
    pub inject_omega_fault: Option<f64>,
}

/// Loads the config file (or defaults) and applies flag overrides.
pub fn resolve_config(args: &CommonArgs) -> Result<SystemConfig> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path).map_err(|e| match e {
            Error::Io(io) => Error::InvalidConfig(format!("cannot read {}: {io}", path.display())),
            other => other,
        })?,
        None => SystemConfig::reference_defaults(),
    };
    if let Some(l) = args.antennas {
        let f = &cfg.fading_pb_st;
        cfg.fading_pb_st = FadingParams::new(f.k(), l, f.m())?;
    }
    if args.ideal {
        cfg.ideal = true;
    }
    if args.non_ideal {
        cfg.ideal = false;
    }
    if let Some(r) = args.rate {
        cfg.rate = r;
    }
    if let Some(t) = args.tau {
        cfg.tau = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `a:b:step` or a single τ. Defaults to 0.05:0.95:0.05.
pub fn parse_tau_grid(
    spec: Option<&str>,
    cfg: &SystemConfig,
    explicit_tau: bool,
) -> Result<Vec<f64>> {
    let bad =
        |s: &str| Error::InvalidConfig(format!("cannot parse tau grid `{s}`, expected a:b:step"));
    match spec {
        None if explicit_tau => Ok(vec![cfg.tau]),
        None => Ok(default_tau_grid()),
        Some(s) => {
            let parts: Vec<&str> = s.split(':').collect();
            let nums: Vec<f64> = parts
                .iter()
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(s))?;
            match nums.as_slice() {
                [t] => tau_grid(*t, *t, 1.0),
                [a, b, step] => tau_grid(*a, *b, *step),
                _ => Err(bad(s)),
            }
        }
    }
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(report: &RunReport, format: Format, path: Option<&PathBuf>) -> Result<()> {
    let mut out = open_output(path)?;
    match format {
        Format::Csv => report.write_csv(&mut out)?,
        Format::Json => {
            out.write_all(report.to_json_string()?.as_bytes())?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn is_usage_error(e: &Error) -> bool {
    matches!(e, Error::InvalidConfig(_) | Error::Parse { .. })
}

fn sweep_inputs(args: &SweepArgs) -> Result<(SystemConfig, Vec<f64>)> {
    let cfg = resolve_config(&args.common)?;
    let grid = parse_tau_grid(args.tau_grid.as_deref(), &cfg, args.common.tau.is_some())?;
    Ok((cfg, grid))
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Analyze(args) => {
            let (cfg, grid) = sweep_inputs(&args)?;
            let report = cmd_analyze(&cfg, &grid)?;
            emit(&report, args.format, args.out.as_ref())?;
            Ok(EXIT_OK)
        }
        Command::Simulate(args) => {
            let (cfg, grid) = sweep_inputs(&args.sweep)?;
            let opts = SimOptions {
                harvest_cap: match args.harvest_cap {
                    CapArg::Capacity => HarvestCap::Capacity,
                    CapArg::Strict => HarvestCap::StrictPerSlot,
                },
            };
            let report =
                cmd_simulate_with(&cfg, &grid, args.placements, args.slots, args.seed, opts)?;
            emit(&report, args.sweep.format, args.sweep.out.as_ref())?;
            Ok(EXIT_OK)
        }
        Command::Validate(args) => {
            let cfg = resolve_config(&args.common)?;
            let opts = ValidateOptions {
                seed: args.seed,
                omega_fault: args.inject_omega_fault,
            };
            let report = cmd_validate(&cfg, opts)?;
            {
                let mut stdout = io::stdout().lock();
                for v in &report.validation {
                    writeln!(stdout, "{v}")?;
                }
            }
            if let Some(path) = &args.out {
                emit(&report, args.format, Some(path))?;
            }
            Ok(if report.all_passed() {
                EXIT_OK
            } else {
                EXIT_FAILURE
            })
        }
        Command::Range(args) => {
            let cfg = resolve_config(&args)?;
            println!("{:e}", cmd_range(&cfg)?);
            Ok(EXIT_OK)
        }
    }
}

/// Entry point shared by the binary.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_usage_error(&e) {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            })
        }
    }
}
