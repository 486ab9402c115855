//! Subcommand bodies. Each returns a [`RunReport`]; printing is left to the caller.

use std::time::Instant;

use crate::analysis::{effective_range, sweep, SystemConfig};
use crate::cli::report::{ReportRow, RunReport};
use crate::error::{Error, Result};
use crate::sim::{run_with, SimOptions};
use crate::validation::{run_all, ValidateOptions};

pub const DEFAULT_PLACEMENTS: u64 = 2000;
pub const DEFAULT_SLOTS: u64 = 2000;
pub const DEFAULT_SEED: u64 = 1;

/// Sorted copy of the grid; rows are always emitted in ascending τ.
fn ordered(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("tau grid is empty".into()));
    }
    let mut out = grid.to_vec();
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

pub fn cmd_analyze(cfg: &SystemConfig, tau_grid: &[f64]) -> Result<RunReport> {
    let start = Instant::now();
    cfg.validate()?;
    let grid = ordered(tau_grid)?;
    let rows = sweep(cfg, &grid)?
        .into_iter()
        .map(|metrics| ReportRow { metrics, sim: None })
        .collect();
    Ok(RunReport {
        config: cfg.clone(),
        rows,
        validation: Vec::new(),
        wall_clock: start.elapsed(),
    })
}

pub fn cmd_simulate(
    cfg: &SystemConfig,
    tau_grid: &[f64],
    n_placements: u64,
    n_slots: u64,
    seed: u64,
) -> Result<RunReport> {
    cmd_simulate_with(
        cfg,
        tau_grid,
        n_placements,
        n_slots,
        seed,
        SimOptions::default(),
    )
}

pub fn cmd_simulate_with(
    cfg: &SystemConfig,
    tau_grid: &[f64],
    n_placements: u64,
    n_slots: u64,
    seed: u64,
    opts: SimOptions,
) -> Result<RunReport> {
    let start = Instant::now();
    let mut report = cmd_analyze(cfg, tau_grid)?;
    for row in &mut report.rows {
        let point = cfg.with_tau(row.metrics.tau);
        row.sim = Some(run_with(&point, n_placements, n_slots, seed, opts)?);
    }
    report.wall_clock = start.elapsed();
    Ok(report)
}

pub fn cmd_validate(cfg: &SystemConfig, opts: ValidateOptions) -> Result<RunReport> {
    let start = Instant::now();
    cfg.validate()?;
    Ok(RunReport {
        config: cfg.clone(),
        rows: Vec::new(),
        validation: run_all(cfg, opts),
        wall_clock: start.elapsed(),
    })
}

pub fn cmd_range(cfg: &SystemConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(effective_range(cfg))
}
