//! Solvers for one-dimensional nonlocal equations `e^{(1/4) d^2} phi = phi^3`
//! and their fermionic variants, written as Gaussian integral equations and
//! solved by fixed-point iteration on a uniform grid.
//!
//! Modules, bottom up:
//!
//! - [`grid`]: grids, sampled fields, seed profiles, norms;
//! - [`kernels`]: windowed Gaussian convolutions `K`, `K_q`, `K_-` and the smoothing map;
//! - [`solvers`]: the p-adic, single-equation and two-field iterations;
//! - [`regime`]: convergence diagnostics, regime classification, critical `q^2` search;
//! - [`spectral`]: characteristic equations of the linearized models;
//! - [`asymptotics`]: the large-`q` rescaling and the oscillator limit;
//! - [`physical`]: smoothed physical fields and the model comparison;
//! - [`cli`]: the `nonlocal` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod physical;
pub mod regime;
pub mod solvers;
pub mod spectral;

pub use asymptotics::{large_q_comparison, oscillator_orbit, rescale_field, LargeQComparison, OscillatorOrbit};
pub use error::{Error, Result};
pub use grid::{make_grid, parity_violation, sample_profile, sup_diff, Field, Grid, Jump, SeedKind, SeedProfile};
pub use kernels::{auto_window, convolve, kernel_weight, Convolver, KernelKind, KernelSpec};
pub use physical::{compare_models, q_string_squared, smooth_field, ModelComparison};
pub use regime::{classify, deviation_profile, find_qcr, geometric_fit, DeviationProfile, Regime, RegimeKind};
pub use solvers::{
    cbrt_signed, residual, solve, solve_ferm1, solve_ferm2, solve_padic, solve_padic_half, IterationConfig, Model,
    SolveReport, SystemState, Termination,
};
pub use spectral::{char_value, find_omega, find_q0, track_root, CharModel, ComplexRoot, DoubleRoot};
