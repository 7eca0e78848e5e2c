//! Deterministic simulation and synchronization analysis for two coupled
//! optomechanical systems.
//!
//! Each system is an optical cavity mode `a_j` coupled by radiation pressure
//! to a mechanical mode `b_j`. The mechanical modes are joined by a phonon
//! tunnel of strength `mu`, the optical modes by a fiber of strength
//! `lambda`. The crate integrates the mean-field equations together with the
//! linearized fluctuation covariance `dC/dt = S C + C S^T + N` and derives
//! from them:
//!
//! * first-order errors: the phase error `theta = arg B1 - arg B2` and its
//!   largest Lyapunov exponent ([`lyapunov`]),
//! * second-order measures: `S_c'` and the rotated-frame `S_p'`
//!   ([`measures`]),
//! * `(mu, lambda)` parameter fields and switch-logic regions ([`sweep`]).
//!
//! The crate is `no_std` (it needs `alloc`). File formats, rendering and the
//! command-line front end live in the `optosync` crate.

#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod dynamics;
mod error;
pub mod linalg;
pub mod lyapunov;
pub mod measures;
pub mod model;
pub mod ode;
pub mod sweep;

pub use dynamics::{
    classify_attractor, evolve, evolve_with, AttractorConfig, AttractorKind, AttractorReport,
    IntegratorConfig, Method, Termination, Trajectory,
};
pub use num_complex;
pub use error::{Error, Result};
pub use linalg::Matrix8;
pub use lyapunov::{
    classify_logic, largest_lyapunov, Classification, Gate, LogicReport, LyapunovConfig,
    LyapunovResult, Renormalization,
};
pub use measures::{
    phase_error, rotate_covariance, sc_prime, sp_prime, time_average, MeasureSeries, PhaseSeries,
};
pub use model::{
    build_drift_matrix, build_noise_matrix, mean_field_rhs, CovState, DriftMatrix, MeanState,
    NoiseMatrix, SystemParams,
};
pub use sweep::{
    find_logic_regions, sweep_lyapunov, sweep_sp_bar, CellStatus, FieldKind, GridSpec, SpBarConfig,
    SweepField,
};
