//! Physical parameters, state types and the linearized generators.
//!
//! Two cavity modes `a_j` and two mechanical modes `b_j` (j = 1, 2), with
//! Hamiltonian (hbar = 1, frame rotating with the drive)
//!
//! ```text
//! H = sum_j [ -Delta_j a_j^+ a_j + omega_j b_j^+ b_j - g a_j^+ a_j (b_j^+ + b_j)
//!             + i E (a_j^+ - a_j) ]
//!     - mu (b_1 b_2^+ + b_1^+ b_2) + lambda (a_1 a_2^+ + a_1^+ a_2)
//! ```
//!
//! Fluctuations are described in the quadrature basis
//! `u = (dx1, dy1, dx2, dy2, dq1, dp1, dq2, dp2)` with
//! `x = (a^+ + a)/sqrt2`, `y = i(a^+ - a)/sqrt2` and likewise `q, p` for `b`.

use crate::error::{require, Error, Result};
use crate::linalg::{uncertainty_min_eigenvalue, Matrix8};
use core::f64::consts::SQRT_2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Index of each quadrature in the fluctuation vector.
pub mod quad {
    pub const X1: usize = 0;
    pub const Y1: usize = 1;
    pub const X2: usize = 2;
    pub const Y2: usize = 3;
    pub const Q1: usize = 4;
    pub const P1: usize = 5;
    pub const Q2: usize = 6;
    pub const P2: usize = 7;
}

/// Physical constants of the two-system model, in units of `omega1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub omega1: f64,
    pub omega2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub g: f64,
    /// Drive amplitude. Not fixed by the reference parameter set; see
    /// [`SystemParams::DEFAULT_DRIVE`].
    #[serde(rename = "E")]
    pub drive: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub mu: f64,
    pub lambda: f64,
    pub n_b: f64,
}

impl SystemParams {
    /// Calibrated drive amplitude used by the shipped presets.
    pub const DEFAULT_DRIVE: f64 = 20.0;

    /// Reference point: `omega2 = 1.005`, `g = 0.004`, `kappa = 0.15`,
    /// `gamma = 0.005`, `Delta_j = omega_j`, `n_b = 0`, uncoupled.
    pub fn reference() -> Self {
        SystemParams {
            omega1: 1.0,
            omega2: 1.005,
            delta1: 1.0,
            delta2: 1.005,
            g: 0.004,
            drive: Self::DEFAULT_DRIVE,
            kappa: 0.15,
            gamma: 0.005,
            mu: 0.0,
            lambda: 0.0,
            n_b: 0.0,
        }
    }

    /// All rates zero except the unit mechanical frequency.
    pub fn decoupled(kappa: f64, gamma: f64, n_b: f64) -> Self {
        SystemParams {
            omega1: 1.0,
            omega2: 1.0,
            delta1: 1.0,
            delta2: 1.0,
            g: 0.0,
            drive: 0.0,
            kappa,
            gamma,
            mu: 0.0,
            lambda: 0.0,
            n_b,
        }
    }

    pub fn with_coupling(mut self, mu: f64, lambda: f64) -> Self {
        self.mu = mu;
        self.lambda = lambda;
        self
    }

    pub fn with_drive(mut self, drive: f64) -> Self {
        self.drive = drive;
        self
    }

    /// Exchange the labels of system 1 and system 2.
    pub fn swapped(&self) -> Self {
        SystemParams {
            omega1: self.omega2,
            omega2: self.omega1,
            delta1: self.delta2,
            delta2: self.delta1,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("g", self.g),
            ("E", self.drive),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("mu", self.mu),
            ("lambda", self.lambda),
            ("n_b", self.n_b),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::NonFinite { field: name });
            }
        }
        require(self.omega1 > 0.0, "omega1", "must be > 0 (frequency unit)")?;
        for (name, v) in [
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("n_b", self.n_b),
            ("g", self.g),
            ("E", self.drive),
            ("mu", self.mu),
            ("lambda", self.lambda),
        ] {
            require(v >= 0.0, name, "must be >= 0")?;
        }
        Ok(())
    }
}

/// Mean-field amplitudes `A_j = <a_j>`, `B_j = <b_j>`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanState {
    pub a1: Complex64,
    pub a2: Complex64,
    pub b1: Complex64,
    pub b2: Complex64,
}

impl MeanState {
    pub const LEN: usize = 8;

    pub fn new(a1: Complex64, a2: Complex64, b1: Complex64, b2: Complex64) -> Self {
        MeanState { a1, a2, b1, b2 }
    }

    /// Empty cavities, `B2 = beta`, `B1 = beta * exp(i theta0)`.
    pub fn with_phase_offset(beta: f64, theta0: f64) -> Self {
        MeanState {
            a1: Complex64::new(0.0, 0.0),
            a2: Complex64::new(0.0, 0.0),
            b1: Complex64::from_polar(beta, theta0),
            b2: Complex64::new(beta, 0.0),
        }
    }

    pub fn swapped(&self) -> Self {
        MeanState {
            a1: self.a2,
            a2: self.a1,
            b1: self.b2,
            b2: self.b1,
        }
    }

    /// `[Re A1, Im A1, Re A2, Im A2, Re B1, Im B1, Re B2, Im B2]`.
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.a1.re, self.a1.im, self.a2.re, self.a2.im, self.b1.re, self.b1.im, self.b2.re,
            self.b2.im,
        ]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        MeanState {
            a1: Complex64::new(y[0], y[1]),
            a2: Complex64::new(y[2], y[3]),
            b1: Complex64::new(y[4], y[5]),
            b2: Complex64::new(y[6], y[7]),
        }
    }

    pub fn modes(&self) -> [Complex64; 4] {
        [self.a1, self.a2, self.b1, self.b2]
    }

    pub fn max_abs(&self) -> f64 {
        self.modes().iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    pub fn check_finite(&self) -> Result<()> {
        for (name, z) in [("A1", self.a1), ("A2", self.a2), ("B1", self.b1), ("B2", self.b2)] {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite { field: name });
            }
        }
        Ok(())
    }

    /// `<q_-> = (<q1> - <q2>)/sqrt2 = Re B1 - Re B2`.
    pub fn mean_q_minus(&self) -> f64 {
        self.b1.re - self.b2.re
    }

    /// `<p_-> = (<p1> - <p2>)/sqrt2 = Im B1 - Im B2`.
    pub fn mean_p_minus(&self) -> f64 {
        self.b1.im - self.b2.im
    }

    /// Quadrature expectation values `(<x1>, <y1>, ..., <p2>)`.
    pub fn quadratures(&self) -> [f64; 8] {
        self.to_array().map(|v| SQRT_2 * v)
    }
}

/// Symmetrized second moments of the quadrature fluctuations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CovState(pub Matrix8);

impl CovState {
    /// Both modes of both systems in the vacuum: `C = I/2`.
    pub fn vacuum() -> Self {
        CovState(Matrix8::scaled_identity(0.5))
    }

    pub fn is_symmetric(&self) -> bool {
        self.0.is_symmetric()
    }

    /// Smallest eigenvalue of `C + (i/2) Omega`.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        uncertainty_min_eigenvalue(&self.0)
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.uncertainty_min_eigenvalue() >= -tol
    }
}

/// Default tolerance of the physicality check.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Drift matrix `S` of the linearized fluctuation dynamics `du/dt = S u + xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix(pub Matrix8);

/// Diagonal noise correlation matrix `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseMatrix(pub Matrix8);

/// Time derivative of the mean-field amplitudes.
pub fn mean_field_rhs(params: &SystemParams, state: &MeanState) -> Result<MeanState> {
    state.check_finite()?;
    Ok(mean_field_rhs_unchecked(params, state))
}

#[inline]
pub(crate) fn mean_field_rhs_unchecked(p: &SystemParams, s: &MeanState) -> MeanState {
    let i = Complex64::new(0.0, 1.0);
    let e = Complex64::new(p.drive, 0.0);
    let (a1, a2, b1, b2) = (s.a1, s.a2, s.b1, s.b2);
    let da1 = Complex64::new(-p.kappa, p.delta1 + 2.0 * p.g * b1.re) * a1 + e - i * p.lambda * a2;
    let da2 = Complex64::new(-p.kappa, p.delta2 + 2.0 * p.g * b2.re) * a2 + e - i * p.lambda * a1;
    let db1 = Complex64::new(-p.gamma, -p.omega1) * b1 + i * (p.g * a1.norm_sqr()) + i * p.mu * b2;
    let db2 = Complex64::new(-p.gamma, -p.omega2) * b2 + i * (p.g * a2.norm_sqr()) + i * p.mu * b1;
    MeanState::new(da1, da2, db1, db2)
}

/// Real-valued form of [`mean_field_rhs`] over the packed state layout of
/// [`MeanState::to_array`].
#[inline]
pub(crate) fn mean_field_rhs_packed(p: &SystemParams, y: &[f64], dy: &mut [f64]) {
    let (ar1, ai1, ar2, ai2) = (y[0], y[1], y[2], y[3]);
    let (br1, bi1, br2, bi2) = (y[4], y[5], y[6], y[7]);
    let d1 = p.delta1 + 2.0 * p.g * br1;
    let d2 = p.delta2 + 2.0 * p.g * br2;
    // dA = (-kappa + i d) A + E - i lambda A'
    dy[0] = -p.kappa * ar1 - d1 * ai1 + p.drive + p.lambda * ai2;
    dy[1] = -p.kappa * ai1 + d1 * ar1 - p.lambda * ar2;
    dy[2] = -p.kappa * ar2 - d2 * ai2 + p.drive + p.lambda * ai1;
    dy[3] = -p.kappa * ai2 + d2 * ar2 - p.lambda * ar1;
    // dB = (-gamma - i omega) B + i g |A|^2 + i mu B'
    dy[4] = -p.gamma * br1 + p.omega1 * bi1 - p.mu * bi2;
    dy[5] = -p.gamma * bi1 - p.omega1 * br1 + p.g * (ar1 * ar1 + ai1 * ai1) + p.mu * br2;
    dy[6] = -p.gamma * br2 + p.omega2 * bi2 - p.mu * bi1;
    dy[7] = -p.gamma * bi2 - p.omega2 * br2 + p.g * (ar2 * ar2 + ai2 * ai2) + p.mu * br1;
}

/// Drift matrix at the given mean field.
pub fn build_drift_matrix(params: &SystemParams, state: &MeanState) -> Result<DriftMatrix> {
    state.check_finite()?;
    Ok(DriftMatrix(drift_packed(params, &state.to_array())))
}

#[inline]
pub(crate) fn drift_packed(p: &SystemParams, y: &[f64]) -> Matrix8 {
    use quad::*;
    let (ar1, ai1, ar2, ai2) = (y[0], y[1], y[2], y[3]);
    let (br1, br2) = (y[4], y[6]);
    let g2 = 2.0 * p.g;
    let d1 = p.delta1 + g2 * br1;
    let d2 = p.delta2 + g2 * br2;
    let mut s = Matrix8::zeros();
    let m = &mut s.0;

    m[X1][X1] = -p.kappa;
    m[X1][Y1] = -d1;
    m[X1][Y2] = p.lambda;
    m[X1][Q1] = -g2 * ai1;

    m[Y1][X1] = d1;
    m[Y1][Y1] = -p.kappa;
    m[Y1][X2] = -p.lambda;
    m[Y1][Q1] = g2 * ar1;

    m[X2][Y1] = p.lambda;
    m[X2][X2] = -p.kappa;
    m[X2][Y2] = -d2;
    m[X2][Q2] = -g2 * ai2;

    m[Y2][X1] = -p.lambda;
    m[Y2][X2] = d2;
    m[Y2][Y2] = -p.kappa;
    m[Y2][Q2] = g2 * ar2;

    m[Q1][Q1] = -p.gamma;
    m[Q1][P1] = p.omega1;
    m[Q1][P2] = -p.mu;

    m[P1][X1] = g2 * ar1;
    m[P1][Y1] = g2 * ai1;
    m[P1][Q1] = -p.omega1;
    m[P1][P1] = -p.gamma;
    m[P1][Q2] = p.mu;

    m[Q2][P1] = -p.mu;
    m[Q2][Q2] = -p.gamma;
    m[Q2][P2] = p.omega2;

    m[P2][X2] = g2 * ar2;
    m[P2][Y2] = g2 * ai2;
    m[P2][Q1] = p.mu;
    m[P2][Q2] = -p.omega2;
    m[P2][P2] = -p.gamma;
    s
}

/// Noise correlation matrix of the vacuum optical inputs and thermal
/// mechanical inputs: `kappa` on the four optical quadratures and
/// `gamma (2 n_b + 1)` on the four mechanical ones.
pub fn build_noise_matrix(params: &SystemParams) -> Result<NoiseMatrix> {
    params.validate()?;
    let opt = params.kappa;
    let mech = params.gamma * (2.0 * params.n_b + 1.0);
    Ok(NoiseMatrix(Matrix8::from_diagonal(&[
        opt, opt, opt, opt, mech, mech, mech, mech,
    ])))
}
