//! Grid sweeps on a bounded worker pool.
//!
//! Every cell is an independent pure computation whose result is placed at
//! its pre-assigned index, so the field does not depend on the number of
//! workers or on scheduling.

use optosync_core::sweep::{lyapunov_cell, sp_bar_cell, CellOutcome};
use optosync_core::{FieldKind, GridSpec, LyapunovConfig, SpBarConfig, SweepField, SystemParams};
use rayon::prelude::*;

/// Number of workers to use when none is requested.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Evaluate `cell(k)` for `k in 0..n` on `workers` threads, in index order.
pub fn map_cells<F>(n: usize, workers: usize, cell: F) -> Vec<CellOutcome>
where
    F: Fn(usize) -> CellOutcome + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("worker pool starts");
    pool.install(|| (0..n).into_par_iter().map(&cell).collect())
}

pub fn sweep_lyapunov(
    base: &SystemParams,
    grid: &GridSpec,
    cfg: &LyapunovConfig,
    workers: usize,
) -> optosync_core::Result<SweepField> {
    grid.validate()?;
    base.validate()?;
    cfg.validate()?;
    let outcomes = map_cells(grid.len(), workers, |k| {
        let (mu, lambda) = grid.point(k);
        lyapunov_cell(base, mu, lambda, cfg)
    });
    Ok(SweepField::from_outcomes(*grid, FieldKind::Lyapunov, outcomes))
}

pub fn sweep_sp_bar(
    base: &SystemParams,
    grid: &GridSpec,
    cfg: &SpBarConfig,
    workers: usize,
) -> optosync_core::Result<SweepField> {
    grid.validate()?;
    base.validate()?;
    cfg.validate()?;
    let outcomes = map_cells(grid.len(), workers, |k| {
        let (mu, lambda) = grid.point(k);
        sp_bar_cell(base, mu, lambda, cfg)
    });
    Ok(SweepField::from_outcomes(*grid, FieldKind::SpBar, outcomes))
}
