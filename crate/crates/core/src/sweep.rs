//! `(mu, lambda)` parameter fields and switch-logic region search.
//!
//! Cells are independent; [`SweepField::from_outcomes`] places results by
//! index, so any evaluation order (serial here, a worker pool in the CLI
//! crate) yields the same field.

use crate::dynamics::{evolve_with, IntegratorConfig, Termination};
use crate::error::{require, Error, Result};
use crate::lyapunov::{largest_lyapunov, Classification, Gate, LyapunovConfig};
use crate::measures::{sp_prime_at, MeasureConfig, WindowMean};
use crate::model::{CovState, SystemParams};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;
use serde::{Deserialize, Serialize};

/// Uniform grid with inclusive endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub mu_min: f64,
    pub mu_max: f64,
    pub mu_steps: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_steps: usize,
}

impl Default for GridSpec {
    /// `mu` in `[0, 0.01]` by `4e-4`, `lambda` in `[0, 0.2]` by `5e-3`.
    fn default() -> Self {
        GridSpec {
            mu_min: 0.0,
            mu_max: 0.01,
            mu_steps: 26,
            lambda_min: 0.0,
            lambda_max: 0.2,
            lambda_steps: 41,
        }
    }
}

fn axis_value(min: f64, max: f64, steps: usize, i: usize) -> f64 {
    if steps == 1 {
        min
    } else {
        min + (max - min) * i as f64 / (steps - 1) as f64
    }
}

impl GridSpec {
    pub fn single(mu: f64, lambda: f64) -> Self {
        GridSpec {
            mu_min: mu,
            mu_max: mu,
            mu_steps: 1,
            lambda_min: lambda,
            lambda_max: lambda,
            lambda_steps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu_min", self.mu_min),
            ("mu_max", self.mu_max),
            ("lambda_min", self.lambda_min),
            ("lambda_max", self.lambda_max),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite { field: name });
            }
        }
        require(self.mu_min >= 0.0, "mu_min", "must be >= 0")?;
        require(self.lambda_min >= 0.0, "lambda_min", "must be >= 0")?;
        require(self.mu_max >= self.mu_min, "mu_max", "must be >= mu_min")?;
        require(self.lambda_max >= self.lambda_min, "lambda_max", "must be >= lambda_min")?;
        require(self.mu_steps >= 1, "mu_steps", "must be >= 1")?;
        require(self.lambda_steps >= 1, "lambda_steps", "must be >= 1")
    }

    pub fn len(&self) -> usize {
        self.mu_steps * self.lambda_steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mu(&self, i: usize) -> f64 {
        axis_value(self.mu_min, self.mu_max, self.mu_steps, i)
    }

    pub fn lambda(&self, j: usize) -> f64 {
        axis_value(self.lambda_min, self.lambda_max, self.lambda_steps, j)
    }

    pub fn mu_step(&self) -> f64 {
        if self.mu_steps > 1 {
            (self.mu_max - self.mu_min) / (self.mu_steps - 1) as f64
        } else {
            0.0
        }
    }

    pub fn lambda_step(&self) -> f64 {
        if self.lambda_steps > 1 {
            (self.lambda_max - self.lambda_min) / (self.lambda_steps - 1) as f64
        } else {
            0.0
        }
    }

    /// Flat cell index, `mu`-major.
    pub fn index(&self, i_mu: usize, i_lambda: usize) -> usize {
        i_mu * self.lambda_steps + i_lambda
    }

    pub fn cell(&self, index: usize) -> (usize, usize) {
        (index / self.lambda_steps, index % self.lambda_steps)
    }

    /// `(mu, lambda)` of a flat cell index.
    pub fn point(&self, index: usize) -> (f64, f64) {
        let (i, j) = self.cell(index);
        (self.mu(i), self.lambda(j))
    }

    /// Grid with every interval halved; coarse points keep their exact
    /// coordinates.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            mu_steps: if self.mu_steps > 1 { 2 * self.mu_steps - 1 } else { 1 },
            lambda_steps: if self.lambda_steps > 1 { 2 * self.lambda_steps - 1 } else { 1 },
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    /// Largest Lyapunov exponent of the phase error.
    Lyapunov,
    /// Time-averaged rotated-frame phase measure.
    SpBar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    Divergent,
    Marginal,
}

/// Result of evaluating one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    /// `NaN` when the cell failed.
    pub value: f64,
    pub status: CellStatus,
    /// Failure description for non-ok cells that did not finish.
    pub failure: Option<String>,
}

impl CellOutcome {
    fn failed(err: Error) -> Self {
        CellOutcome {
            value: f64::NAN,
            status: CellStatus::Divergent,
            failure: Some(err.to_string()),
        }
    }
}

/// One scalar per grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepField {
    pub grid: GridSpec,
    pub kind: FieldKind,
    /// `mu`-major, `NaN` where unset.
    pub values: Vec<f64>,
    pub status: Vec<CellStatus>,
    /// Failure description per cell (`None` for completed cells).
    pub failures: Vec<Option<String>>,
}

impl SweepField {
    pub fn from_outcomes(grid: GridSpec, kind: FieldKind, outcomes: Vec<CellOutcome>) -> Self {
        assert_eq!(outcomes.len(), grid.len(), "one outcome per cell");
        let mut values = Vec::with_capacity(outcomes.len());
        let mut status = Vec::with_capacity(outcomes.len());
        let mut failures = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            values.push(o.value);
            status.push(o.status);
            failures.push(o.failure);
        }
        SweepField {
            grid,
            kind,
            values,
            status,
            failures,
        }
    }

    pub fn value(&self, i_mu: usize, i_lambda: usize) -> f64 {
        self.values[self.grid.index(i_mu, i_lambda)]
    }

    pub fn status_at(&self, i_mu: usize, i_lambda: usize) -> CellStatus {
        self.status[self.grid.index(i_mu, i_lambda)]
    }

    pub fn failed_cells(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&k| self.status[k] == CellStatus::Divergent)
            .collect()
    }

    /// Synchronization class of each cell of a Lyapunov field; `None` for
    /// marginal or failed cells.
    pub fn sync_map(&self) -> Result<Vec<Option<bool>>> {
        if self.kind != FieldKind::Lyapunov {
            return Err(Error::WrongFieldKind);
        }
        Ok(self
            .values
            .iter()
            .zip(&self.status)
            .map(|(v, s)| match s {
                CellStatus::Ok if *v < 0.0 => Some(true),
                CellStatus::Ok if *v > 0.0 => Some(false),
                _ => None,
            })
            .collect())
    }

    /// Flat index of the largest value among ok cells.
    pub fn argmax(&self) -> Option<usize> {
        (0..self.values.len())
            .filter(|&k| self.status[k] == CellStatus::Ok && self.values[k].is_finite())
            .fold(None, |best: Option<usize>, k| match best {
                Some(b) if self.values[b] >= self.values[k] => Some(b),
                _ => Some(k),
            })
    }
}

/// Evaluate one Lyapunov cell.
pub fn lyapunov_cell(base: &SystemParams, mu: f64, lambda: f64, cfg: &LyapunovConfig) -> CellOutcome {
    let params = base.with_coupling(mu, lambda);
    match largest_lyapunov(&params, &cfg.initial_state(), cfg) {
        Ok(r) => CellOutcome {
            value: r.exponent,
            status: if r.classification == Classification::Marginal {
                CellStatus::Marginal
            } else {
                CellStatus::Ok
            },
            failure: None,
        },
        Err(e) => CellOutcome::failed(e),
    }
}

/// Settings of the `S_p'` time-average field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpBarConfig {
    /// Averaging horizon `T`; also the integration horizon.
    pub horizon: f64,
    /// Transient cut; the average runs over `[t_skip, T]`.
    pub t_skip: f64,
    pub theta0: f64,
    pub beta: f64,
    pub dt: f64,
    pub measure: MeasureConfig,
}

impl Default for SpBarConfig {
    fn default() -> Self {
        SpBarConfig {
            horizon: 2000.0,
            t_skip: 0.0,
            theta0: PI / 2.0,
            beta: 1.0,
            dt: IntegratorConfig::DEFAULT_DT,
            measure: MeasureConfig::default(),
        }
    }
}

impl SpBarConfig {
    pub fn validate(&self) -> Result<()> {
        require(self.horizon > 0.0, "horizon", "must be > 0")?;
        require(
            self.t_skip >= 0.0 && self.t_skip < self.horizon,
            "t_skip",
            "must be in [0, horizon)",
        )?;
        require(self.beta > 0.0, "beta", "must be > 0")?;
        require(self.dt > 0.0, "dt", "must be > 0")?;
        self.measure.validate()
    }
}

/// Time-averaged `S_p'` at one parameter point, starting from vacuum
/// fluctuations.
pub fn sp_bar(params: &SystemParams, cfg: &SpBarConfig) -> Result<f64> {
    cfg.validate()?;
    let integ = IntegratorConfig {
        dt: cfg.dt,
        t_end: cfg.horizon,
        ..IntegratorConfig::default()
    };
    let init = crate::model::MeanState::with_phase_offset(cfg.beta, cfg.theta0);
    let mut acc = WindowMean::new(cfg.t_skip, cfg.horizon);
    let end = evolve_with(params, &init, Some(&CovState::vacuum()), &integ, |t, m, c| {
        let c = c.expect("covariance is propagated");
        acc.push(t, sp_prime_at(c, m, &cfg.measure, t)?);
        Ok(())
    })?;
    if let Termination::Diverged { t } = end {
        return Err(Error::Divergence { t });
    }
    acc.finish()
}

/// Evaluate one `S_p'` cell.
pub fn sp_bar_cell(base: &SystemParams, mu: f64, lambda: f64, cfg: &SpBarConfig) -> CellOutcome {
    match sp_bar(&base.with_coupling(mu, lambda), cfg) {
        Ok(v) => CellOutcome {
            value: v,
            status: CellStatus::Ok,
            failure: None,
        },
        Err(e) => CellOutcome::failed(e),
    }
}

/// Serial Lyapunov sweep.
pub fn sweep_lyapunov(base: &SystemParams, grid: &GridSpec, cfg: &LyapunovConfig) -> Result<SweepField> {
    grid.validate()?;
    base.validate()?;
    cfg.validate()?;
    let outcomes = (0..grid.len())
        .map(|k| {
            let (mu, lambda) = grid.point(k);
            lyapunov_cell(base, mu, lambda, cfg)
        })
        .collect();
    Ok(SweepField::from_outcomes(*grid, FieldKind::Lyapunov, outcomes))
}

/// Serial `S_p'` time-average sweep.
pub fn sweep_sp_bar(base: &SystemParams, grid: &GridSpec, cfg: &SpBarConfig) -> Result<SweepField> {
    grid.validate()?;
    base.validate()?;
    cfg.validate()?;
    let outcomes = (0..grid.len())
        .map(|k| {
            let (mu, lambda) = grid.point(k);
            sp_bar_cell(base, mu, lambda, cfg)
        })
        .collect();
    Ok(SweepField::from_outcomes(*grid, FieldKind::SpBar, outcomes))
}

/// Remove isolated misclassifications: an off-axis cell whose class
/// disagrees with every classified off-axis neighbor in its 8-neighborhood
/// (at least two of them) takes the neighbors' class. Cells on the
/// zero-coupling axes are qualitatively distinct and never change;
/// unclassified cells stay unclassified.
pub fn smooth_isolated(grid: &GridSpec, map: &[Option<bool>]) -> Vec<Option<bool>> {
    let (nm, nl) = (grid.mu_steps as isize, grid.lambda_steps as isize);
    let mut out = map.to_vec();
    for i in 0..nm {
        for j in 0..nl {
            if i == 0 || j == 0 {
                continue;
            }
            let k = grid.index(i as usize, j as usize);
            let Some(own) = map[k] else { continue };
            let mut known = 0;
            let mut opposite = 0;
            for di in -1..=1 {
                for dj in -1..=1 {
                    let (a, b) = (i + di, j + dj);
                    if (di, dj) == (0, 0) || a < 1 || b < 1 || a >= nm || b >= nl {
                        continue;
                    }
                    if let Some(v) = map[grid.index(a as usize, b as usize)] {
                        known += 1;
                        if v != own {
                            opposite += 1;
                        }
                    }
                }
            }
            if known >= 2 && opposite == known {
                out[k] = Some(!own);
            }
        }
    }
    out
}

/// A cell `(mu_on, lambda_on)` whose four-corner truth table matches a gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub i_mu: usize,
    pub i_lambda: usize,
    pub mu: f64,
    pub lambda: f64,
}

/// All interior cells whose corners `(0,0), (0,lambda), (mu,0), (mu,lambda)`
/// of the smoothed sync map realize `gate`.
pub fn find_logic_regions(field: &SweepField, gate: Gate) -> Result<Vec<RegionCell>> {
    let Some(pattern) = gate.table() else {
        return Err(Error::InvalidParameter {
            field: "gate",
            reason: "must be AND, OR or XOR".to_string(),
        });
    };
    let map = field.sync_map()?;
    let grid = &field.grid;
    if grid.mu_min != 0.0 {
        return Err(Error::MissingZeroAxis { axis: "mu" });
    }
    if grid.lambda_min != 0.0 {
        return Err(Error::MissingZeroAxis { axis: "lambda" });
    }
    let map = smooth_isolated(grid, &map);
    let at = |i: usize, j: usize| map[grid.index(i, j)];
    let mut cells = Vec::new();
    for i in 1..grid.mu_steps {
        for j in 1..grid.lambda_steps {
            let corners = [at(0, 0), at(0, j), at(i, 0), at(i, j)];
            if corners.iter().zip(pattern).all(|(c, p)| *c == Some(p)) {
                cells.push(RegionCell {
                    i_mu: i,
                    i_lambda: j,
                    mu: grid.mu(i),
                    lambda: grid.lambda(j),
                });
            }
        }
    }
    Ok(cells)
}
