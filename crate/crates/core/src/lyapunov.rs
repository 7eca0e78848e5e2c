//! Largest Lyapunov exponent of the phase error and switch-logic tables.
//!
//! The estimator is the two-trajectory (Benettin) scheme: a reference and a
//! clone whose `B1` phase is offset by `delta0` advance in lockstep. After
//! each renormalization interval the growth of the phase-error separation
//! `|d theta|` is recorded and the clone is reset, either by rescaling its
//! full state deviation along its current direction
//! ([`Renormalization::Rescale`]) or by re-applying a fresh `B1` phase
//! offset to the current reference state ([`Renormalization::Fresh`]). The
//! exponent is the mean per-segment rate after the transient.
//!
//! On limit cycles the rescaled deviation aligns with the neutral
//! time-shift direction of the autonomous flow, whose `theta` projection
//! neither grows nor decays, so `Rescale` tends to zero for locked and
//! unlocked states alike as the horizon grows. `Fresh` measures the
//! contraction of a pure phase-error kick over each interval, which keeps
//! locked states clearly negative; it is the default.

use crate::dynamics::IntegratorConfig;
use crate::error::{require, Error, Result};
use crate::model::{mean_field_rhs_packed, MeanState, SystemParams};
use crate::ode::Rk4;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // float methods come from std when it is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Separations below this count as an exact collapse.
const COLLAPSE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovConfig {
    /// Initial phase perturbation (radians).
    pub delta0: f64,
    /// Time between renormalizations.
    pub renorm_interval: f64,
    /// Initial span excluded from the average.
    pub t_transient: f64,
    /// Accumulation horizon.
    pub t_total: f64,
    /// Initial phase error `arg B1(0) - arg B2(0)` of the reference.
    pub theta0: f64,
    /// Initial mechanical amplitude `|B_j(0)|`.
    pub beta: f64,
    /// RK4 step.
    pub dt: f64,
    /// Any state component above this magnitude aborts the estimate.
    pub overflow_guard: f64,
    /// How the clone is reset after each interval.
    pub renormalization: Renormalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Renormalization {
    /// Rescale the full clone deviation along its current direction.
    Rescale,
    /// Re-perturb the reference's `B1` phase by `delta0`.
    #[default]
    Fresh,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        LyapunovConfig {
            delta0: 1e-6,
            renorm_interval: 20.0 * PI,
            t_transient: 500.0,
            t_total: 5000.0,
            theta0: PI / 2.0,
            beta: 1.0,
            dt: IntegratorConfig::DEFAULT_DT,
            overflow_guard: 1e12,
            renormalization: Renormalization::Fresh,
        }
    }
}

impl LyapunovConfig {
    pub fn validate(&self) -> Result<()> {
        require(self.delta0 > 0.0, "delta0", "must be > 0")?;
        require(self.renorm_interval > 0.0, "renorm_interval", "must be > 0")?;
        require(self.t_transient >= 0.0, "t_transient", "must be >= 0")?;
        require(
            self.t_total > self.t_transient,
            "t_total",
            "must exceed t_transient",
        )?;
        require(
            self.t_total - self.t_transient >= 2.0 * self.renorm_interval,
            "t_total",
            "must leave at least two renormalization intervals after the transient",
        )?;
        require(self.dt > 0.0 && self.dt <= self.renorm_interval, "dt", "must be in (0, renorm_interval]")?;
        require(self.beta > 0.0, "beta", "must be > 0")?;
        require(self.theta0.is_finite(), "theta0", "must be finite")?;
        require(self.overflow_guard > 0.0, "overflow_guard", "must be > 0")
    }

    /// Reference initial state: empty cavities, `B2 = beta`,
    /// `B1 = beta exp(i theta0)`.
    pub fn initial_state(&self) -> MeanState {
        MeanState::with_phase_offset(self.beta, self.theta0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Sync,
    NoSync,
    Marginal,
}

impl Classification {
    /// `exponent + 2 stderr < 0` is sync, `exponent - 2 stderr > 0` is
    /// no-sync, anything in between is marginal.
    pub fn from_estimate(exponent: f64, stderr: f64) -> Self {
        if exponent + 2.0 * stderr < 0.0 {
            Classification::Sync
        } else if exponent - 2.0 * stderr > 0.0 {
            Classification::NoSync
        } else {
            Classification::Marginal
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovResult {
    pub exponent: f64,
    pub stderr: f64,
    pub classification: Classification,
    /// Number of renormalization segments averaged.
    pub segments: usize,
    /// The separation collapsed below `1e-300` in at least one segment.
    pub collapsed: bool,
}

/// A flow together with the observable whose separation is tracked.
pub trait PerturbedFlow {
    fn dim(&self) -> usize;
    fn rhs(&self, y: &[f64], dy: &mut [f64]);
    /// Signed separation of the observable between clone and reference.
    fn separation(&self, reference: &[f64], clone: &[f64]) -> f64;
    /// Write into `clone` the reference state displaced by `delta0` in the
    /// observable.
    fn perturb(&self, reference: &[f64], delta0: f64, clone: &mut [f64]);
}

/// Mean-field dynamics observed through the phase error `theta`.
#[derive(Debug, Clone, Copy)]
pub struct PhaseErrorFlow {
    pub params: SystemParams,
}

impl PerturbedFlow for PhaseErrorFlow {
    fn dim(&self) -> usize {
        MeanState::LEN
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        mean_field_rhs_packed(&self.params, y, dy)
    }

    fn separation(&self, r: &[f64], c: &[f64]) -> f64 {
        // arg[(B1c conj B2c) conj(B1r conj B2r)] = theta_c - theta_r (mod 2 pi)
        let (u_re, u_im) = (c[4] * c[6] + c[5] * c[7], c[5] * c[6] - c[4] * c[7]);
        let (v_re, v_im) = (r[4] * r[6] + r[5] * r[7], r[5] * r[6] - r[4] * r[7]);
        let re = u_re * v_re + u_im * v_im;
        let im = u_im * v_re - u_re * v_im;
        im.atan2(re)
    }

    fn perturb(&self, r: &[f64], delta0: f64, c: &mut [f64]) {
        c.copy_from_slice(r);
        let (s, co) = delta0.sin_cos();
        c[4] = r[4] * co - r[5] * s;
        c[5] = r[4] * s + r[5] * co;
    }
}

/// Scalar linear flow `x' = a x` with exponent exactly `a`, for qualifying
/// the estimator.
#[derive(Debug, Clone, Copy)]
pub struct LinearProbe {
    pub rate: f64,
}

impl PerturbedFlow for LinearProbe {
    fn dim(&self) -> usize {
        1
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        dy[0] = self.rate * y[0];
    }

    fn separation(&self, r: &[f64], c: &[f64]) -> f64 {
        c[0] - r[0]
    }

    fn perturb(&self, r: &[f64], delta0: f64, c: &mut [f64]) {
        c[0] = r[0] + delta0;
    }
}

/// Run the two-trajectory estimator on any [`PerturbedFlow`].
pub fn estimate<F: PerturbedFlow>(flow: &F, init: &[f64], cfg: &LyapunovConfig) -> Result<LyapunovResult> {
    cfg.validate()?;
    let n = flow.dim();
    require(init.len() == n, "init", "dimension mismatch")?;
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { field: "init" });
    }
    let mut reference = init.to_vec();
    let mut clone = vec![0.0; n];
    flow.perturb(&reference, cfg.delta0, &mut clone);

    let steps = (cfg.renorm_interval / cfg.dt - 1e-9).ceil().max(1.0) as usize;
    let h = cfg.renorm_interval / steps as f64;
    let segments = ((cfg.t_total / cfg.renorm_interval) + 1e-9).floor() as usize;
    let mut rk_ref = Rk4::new(n);
    let mut rk_clone = Rk4::new(n);
    let mut f = |y: &[f64], dy: &mut [f64]| flow.rhs(y, dy);

    let mut rates = Vec::new();
    let mut collapsed = false;
    for k in 1..=segments {
        for _ in 0..steps {
            rk_ref.step(&mut f, &mut reference, h);
            rk_clone.step(&mut f, &mut clone, h);
        }
        let t = k as f64 * cfg.renorm_interval;
        if reference.iter().any(|v| !(v.abs() <= cfg.overflow_guard)) {
            return Err(Error::Divergence { t });
        }
        let sep = flow.separation(&reference, &clone).abs();
        let start = t - cfg.renorm_interval;
        if !(sep >= COLLAPSE_FLOOR) || clone.iter().any(|v| !v.is_finite()) {
            collapsed = true;
            if start >= cfg.t_transient {
                rates.push((COLLAPSE_FLOOR / cfg.delta0).ln() / cfg.renorm_interval);
            }
            flow.perturb(&reference, cfg.delta0, &mut clone);
            continue;
        }
        if start >= cfg.t_transient {
            rates.push((sep / cfg.delta0).ln() / cfg.renorm_interval);
        }
        match cfg.renormalization {
            Renormalization::Rescale => {
                let scale = cfg.delta0 / sep;
                for (c, r) in clone.iter_mut().zip(&reference) {
                    *c = r + (*c - r) * scale;
                }
            }
            Renormalization::Fresh => flow.perturb(&reference, cfg.delta0, &mut clone),
        }
    }

    let m = rates.len();
    require(m >= 2, "t_total", "too few segments after the transient")?;
    let exponent = rates.iter().sum::<f64>() / m as f64;
    let var = rates.iter().map(|r| (r - exponent) * (r - exponent)).sum::<f64>() / (m - 1) as f64;
    let stderr = (var / m as f64).sqrt();
    Ok(LyapunovResult {
        exponent,
        stderr,
        classification: Classification::from_estimate(exponent, stderr),
        segments: m,
        collapsed,
    })
}

/// Largest Lyapunov exponent of the phase error `theta(t)`.
pub fn largest_lyapunov(
    params: &SystemParams,
    init: &MeanState,
    cfg: &LyapunovConfig,
) -> Result<LyapunovResult> {
    params.validate()?;
    init.check_finite()?;
    if !(init.b1.norm() > 0.0 && init.b2.norm() > 0.0) {
        return Err(Error::PhaseUndefined {
            t: 0.0,
            mode: if init.b1.norm() > 0.0 { "B2" } else { "B1" },
        });
    }
    estimate(&PhaseErrorFlow { params: *params }, &init.to_array(), cfg)
}

/// Synchronization logic realised by the two switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gate {
    And,
    Or,
    Xor,
    None,
    Indeterminate,
}

impl Gate {
    /// Gate matching a truth table ordered
    /// `[(0, 0), (0, lambda_on), (mu_on, 0), (mu_on, lambda_on)]`, `true`
    /// meaning synchronized.
    pub fn from_table(table: [bool; 4]) -> Gate {
        match table {
            [false, false, false, true] => Gate::And,
            [false, true, true, true] => Gate::Or,
            [false, true, true, false] => Gate::Xor,
            _ => Gate::None,
        }
    }

    pub fn table(&self) -> Option<[bool; 4]> {
        match self {
            Gate::And => Some([false, false, false, true]),
            Gate::Or => Some([false, true, true, true]),
            Gate::Xor => Some([false, true, true, false]),
            Gate::None | Gate::Indeterminate => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::And => "AND",
            Gate::Or => "OR",
            Gate::Xor => "XOR",
            Gate::None => "none",
            Gate::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub mu: f64,
    pub lambda: f64,
    pub result: LyapunovResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicReport {
    /// `[(0, 0), (0, lambda_on), (mu_on, 0), (mu_on, lambda_on)]`.
    pub corners: Vec<Corner>,
    pub gate: Gate,
    /// Corners whose classification was marginal.
    pub marginal: Vec<(f64, f64)>,
}

impl LogicReport {
    pub fn table(&self) -> Vec<Classification> {
        self.corners.iter().map(|c| c.result.classification).collect()
    }
}

/// Four-corner switch truth table at `(mu_on, lambda_on)` using the
/// configured initial state.
pub fn classify_logic(
    base: &SystemParams,
    mu_on: f64,
    lambda_on: f64,
    cfg: &LyapunovConfig,
) -> Result<LogicReport> {
    classify_logic_from(base, &cfg.initial_state(), mu_on, lambda_on, cfg)
}

pub fn classify_logic_from(
    base: &SystemParams,
    init: &MeanState,
    mu_on: f64,
    lambda_on: f64,
    cfg: &LyapunovConfig,
) -> Result<LogicReport> {
    require(mu_on >= 0.0, "mu_on", "must be >= 0")?;
    require(lambda_on >= 0.0, "lambda_on", "must be >= 0")?;
    let points = [(0.0, 0.0), (0.0, lambda_on), (mu_on, 0.0), (mu_on, lambda_on)];
    let mut corners: Vec<Corner> = Vec::with_capacity(4);
    for (mu, lambda) in points {
        // degenerate requests repeat a corner; reuse it
        let result = match corners.iter().find(|c| c.mu == mu && c.lambda == lambda) {
            Some(c) => c.result,
            None => largest_lyapunov(&base.with_coupling(mu, lambda), init, cfg)?,
        };
        corners.push(Corner { mu, lambda, result });
    }
    let marginal: Vec<(f64, f64)> = corners
        .iter()
        .filter(|c| c.result.classification == Classification::Marginal)
        .map(|c| (c.mu, c.lambda))
        .collect();
    let gate = if mu_on == 0.0 && lambda_on == 0.0 {
        Gate::None
    } else if !marginal.is_empty() {
        Gate::Indeterminate
    } else {
        let table: [bool; 4] =
            core::array::from_fn(|k| corners[k].result.classification == Classification::Sync);
        Gate::from_table(table)
    };
    Ok(LogicReport {
        corners,
        gate,
        marginal,
    })
}
