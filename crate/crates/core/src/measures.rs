//! First-order error signals and second-order synchronization measures.
//!
//! First order: the mechanical phase error `theta = <phi1> - <phi2>` (no
//! `1/sqrt2`) and the mean quadrature errors `<q_->`, `<p_->` (with the
//! `1/sqrt2`), all computed from the mean field alone.
//!
//! Second order, from the covariance (0-based indices, mechanical block at
//! 4..8):
//!
//! ```text
//! S_c' = 1 / [ (C44 + C66 - 2 C46)/2 + (C55 + C77 - 2 C57)/2 ]
//! S_p' = k / [ (C'55 + C'77 - 2 C'57)/2 ]          k = sp_prefactor
//! ```
//!
//! where `C'` is `C` expressed in quadratures rotated by each mode's mean
//! phase.

use crate::dynamics::Trajectory;
use crate::error::{require, Error, Result};
use crate::linalg::{Matrix8, DIM};
use crate::model::{quad, CovState, MeanState};
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // float methods come from std when it is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Below this modulus the phase of a mode amplitude is treated as undefined.
pub const AMPLITUDE_FLOOR: f64 = 1e-12;

/// Prefactor of the final printed form of `S_p'`. With it the vacuum gives
/// `S_p' = 1`.
pub const SP_PREFACTOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureConfig {
    pub amplitude_floor: f64,
    pub sp_prefactor: f64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            amplitude_floor: AMPLITUDE_FLOOR,
            sp_prefactor: SP_PREFACTOR,
        }
    }
}

impl MeasureConfig {
    pub fn validate(&self) -> Result<()> {
        require(self.amplitude_floor >= 0.0, "amplitude_floor", "must be >= 0")?;
        require(self.sp_prefactor > 0.0, "sp_prefactor", "must be > 0")
    }
}

/// Unwrapped mechanical phases and their difference.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSeries {
    pub times: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
}

/// Time series of all synchronization measures along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSeries {
    pub times: Vec<f64>,
    pub theta: Vec<f64>,
    /// `None` when the trajectory carries no covariance.
    pub sc_prime: Option<Vec<f64>>,
    pub sp_prime: Option<Vec<f64>>,
    pub mean_q_minus: Vec<f64>,
    pub mean_p_minus: Vec<f64>,
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    } else if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

/// Continuous phase from principal values: consecutive outputs never differ
/// by more than `pi`.
pub fn unwrap_phases(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut acc = 0.0;
    for (k, &r) in raw.iter().enumerate() {
        if k == 0 {
            acc = r;
        } else {
            acc += wrap_angle(r - raw[k - 1]);
        }
        out.push(acc);
    }
    out
}

fn checked_arg(z: num_complex::Complex64, floor: f64, t: f64, mode: &'static str) -> Result<f64> {
    if !(z.norm() > floor) {
        return Err(Error::PhaseUndefined { t, mode });
    }
    Ok(z.im.atan2(z.re))
}

/// Phase error with the default amplitude floor.
pub fn phase_error(traj: &Trajectory) -> Result<PhaseSeries> {
    phase_error_with_floor(traj, AMPLITUDE_FLOOR)
}

pub fn phase_error_with_floor(traj: &Trajectory, floor: f64) -> Result<PhaseSeries> {
    let mut raw1 = Vec::with_capacity(traj.len());
    let mut raw2 = Vec::with_capacity(traj.len());
    for (t, m) in traj.times.iter().zip(&traj.means) {
        raw1.push(checked_arg(m.b1, floor, *t, "B1")?);
        raw2.push(checked_arg(m.b2, floor, *t, "B2")?);
    }
    let phi1 = unwrap_phases(&raw1);
    let phi2 = unwrap_phases(&raw2);
    let theta = phi1.iter().zip(&phi2).map(|(a, b)| a - b).collect();
    Ok(PhaseSeries {
        times: traj.times.clone(),
        theta,
        phi1,
        phi2,
    })
}

/// Complete-synchronization measure of the fluctuations.
pub fn sc_prime(cov: &CovState) -> Result<f64> {
    use quad::*;
    let c = &cov.0;
    let dq = 0.5 * (c[(Q1, Q1)] + c[(Q2, Q2)] - 2.0 * c[(Q1, Q2)]);
    let dp = 0.5 * (c[(P1, P1)] + c[(P2, P2)] - 2.0 * c[(P1, P2)]);
    let denom = dq + dp;
    if !(denom > 0.0) {
        return Err(Error::UnphysicalCovariance { value: denom });
    }
    Ok(1.0 / denom)
}

/// Block-diagonal orthogonal matrix rotating each mode's quadratures by
/// minus its phase: `a -> exp(-i phi) a`.
pub fn phase_rotation(phases: &[f64; 4]) -> Matrix8 {
    let mut r = Matrix8::zeros();
    for (k, &phi) in phases.iter().enumerate() {
        let (s, c) = phi.sin_cos();
        let i = 2 * k;
        r.0[i][i] = c;
        r.0[i][i + 1] = s;
        r.0[i + 1][i] = -s;
        r.0[i + 1][i + 1] = c;
    }
    r
}

/// `R C R^T` for the given mode phases `[A1, A2, B1, B2]`, symmetrized.
pub fn rotate_by_phases(cov: &CovState, phases: &[f64; 4]) -> CovState {
    let m = cov.0.congruence(&phase_rotation(phases));
    let mut out = Matrix8::zeros();
    for i in 0..DIM {
        for j in 0..DIM {
            out.0[i][j] = 0.5 * (m.0[i][j] + m.0[j][i]);
        }
    }
    CovState(out)
}

/// Covariance in the frame co-rotating with every mode's mean amplitude.
pub fn rotate_covariance(cov: &CovState, mean: &MeanState) -> Result<CovState> {
    rotate_covariance_with_floor(cov, mean, AMPLITUDE_FLOOR, 0.0)
}

pub fn rotate_covariance_with_floor(
    cov: &CovState,
    mean: &MeanState,
    floor: f64,
    t: f64,
) -> Result<CovState> {
    let phases = [
        checked_arg(mean.a1, floor, t, "A1")?,
        checked_arg(mean.a2, floor, t, "A2")?,
        checked_arg(mean.b1, floor, t, "B1")?,
        checked_arg(mean.b2, floor, t, "B2")?,
    ];
    Ok(rotate_by_phases(cov, &phases))
}

/// Phase-synchronization measure from a rotated covariance.
pub fn sp_prime(cov_rot: &CovState, prefactor: f64) -> Result<f64> {
    use quad::*;
    let c = &cov_rot.0;
    let inner = 0.5 * (c[(P1, P1)] + c[(P2, P2)] - 2.0 * c[(P1, P2)]);
    if !(inner > 0.0) {
        return Err(Error::UnphysicalCovariance { value: inner });
    }
    Ok(prefactor / inner)
}

/// `S_p'` of an unrotated covariance at the given mean field.
///
/// Only the mechanical block of the rotated matrix enters `S_p'`, so only
/// the mechanical phases must be defined; the optical modes are left
/// unrotated (they are empty at the usual initial instant).
pub fn sp_prime_at(cov: &CovState, mean: &MeanState, cfg: &MeasureConfig, t: f64) -> Result<f64> {
    let phases = [
        0.0,
        0.0,
        checked_arg(mean.b1, cfg.amplitude_floor, t, "B1")?,
        checked_arg(mean.b2, cfg.amplitude_floor, t, "B2")?,
    ];
    sp_prime(&rotate_by_phases(cov, &phases), cfg.sp_prefactor)
}

/// Streaming trapezoidal integral of a sampled series over a window
/// `[t_start, t_stop]`, with linear interpolation at the window edges.
#[derive(Debug, Clone)]
pub struct WindowMean {
    t_start: f64,
    t_stop: f64,
    prev: Option<(f64, f64)>,
    integral: f64,
    covered: f64,
}

impl WindowMean {
    pub fn new(t_start: f64, t_stop: f64) -> Self {
        WindowMean {
            t_start,
            t_stop,
            prev: None,
            integral: 0.0,
            covered: 0.0,
        }
    }

    pub fn push(&mut self, t: f64, v: f64) {
        if let Some((tp, vp)) = self.prev {
            let lo = tp.max(self.t_start);
            let hi = t.min(self.t_stop);
            if hi > lo && t > tp {
                let at = |s: f64| vp + (v - vp) * (s - tp) / (t - tp);
                self.integral += 0.5 * (hi - lo) * (at(lo) + at(hi));
                self.covered += hi - lo;
            }
        }
        self.prev = Some((t, v));
    }

    /// Mean over the window, normalized by its full length.
    pub fn finish(&self) -> Result<f64> {
        if !(self.t_stop > self.t_start) || self.covered <= 0.0 {
            return Err(Error::EmptyWindow);
        }
        Ok(self.integral / (self.t_stop - self.t_start))
    }
}

/// Trapezoidal mean of `values` over `[t_skip, horizon]`.
pub fn time_average(times: &[f64], values: &[f64], horizon: f64, t_skip: f64) -> Result<f64> {
    require(times.len() == values.len(), "values", "length must match times")?;
    require(t_skip >= 0.0, "t_skip", "must be >= 0")?;
    if !(t_skip < horizon) {
        return Err(Error::EmptyWindow);
    }
    let mut acc = WindowMean::new(t_skip, horizon);
    for (t, v) in times.iter().zip(values) {
        acc.push(*t, *v);
    }
    acc.finish()
}

/// All measures along a trajectory.
pub fn measure_series(traj: &Trajectory, cfg: &MeasureConfig) -> Result<MeasureSeries> {
    cfg.validate()?;
    let phase = phase_error_with_floor(traj, cfg.amplitude_floor)?;
    let (sc, sp) = match &traj.covs {
        Some(covs) => {
            let mut sc = Vec::with_capacity(covs.len());
            let mut sp = Vec::with_capacity(covs.len());
            for ((t, m), c) in traj.times.iter().zip(&traj.means).zip(covs) {
                sc.push(sc_prime(c)?);
                sp.push(sp_prime_at(c, m, cfg, *t)?);
            }
            (Some(sc), Some(sp))
        }
        None => (None, None),
    };
    Ok(MeasureSeries {
        times: phase.times,
        theta: phase.theta,
        sc_prime: sc,
        sp_prime: sp,
        mean_q_minus: traj.means.iter().map(MeanState::mean_q_minus).collect(),
        mean_p_minus: traj.means.iter().map(MeanState::mean_p_minus).collect(),
    })
}
