//! Fixed-point iterations for the four models.
//!
//! | model      | map                                                   |
//! |------------|-------------------------------------------------------|
//! | `padic`    | `phi <- cbrt(K phi)`                                  |
//! | `padic-half` | `phi <- cbrt(K_- phi)` on `t <= 0`                  |
//! | `ferm1`    | `phi <- cbrt(K_q phi)`                                |
//! | `ferm2`    | `phi <- -eps(t) sqrt(K[K_q phi / phi])`               |
//!
//! Every solve reports per-step sup-norm differences, the final field and the
//! residual of the model equation on interior nodes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{invalid, Error, Result};
use crate::grid::{sample_profile, sup_diff, Field, Grid, Jump, SeedProfile};
use crate::kernels::{auto_window, Convolver, KernelSpec, DEFAULT_TAIL_TOL, DEFAULT_WINDOW};

/// Iterates with `|phi_n| < DIVISION_FLOOR` away from the origin are rejected.
pub const DIVISION_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Padic,
    PadicHalf,
    Ferm1,
    Ferm2,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Padic => "padic",
            Model::PadicHalf => "padic-half",
            Model::Ferm1 => "ferm1",
            Model::Ferm2 => "ferm2",
        }
    }

    fn uses_q(self) -> bool {
        matches!(self, Model::Ferm1 | Model::Ferm2)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "padic" => Ok(Model::Padic),
            "padic-half" => Ok(Model::PadicHalf),
            "ferm1" => Ok(Model::Ferm1),
            "ferm2" => Ok(Model::Ferm2),
            _ => Err(Error::Parse(format!("unknown model `{s}` (padic, padic-half, ferm1, ferm2)"))),
        }
    }
}

/// Why an iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    MaxSteps,
    NegativeSqrt,
    NonFinite,
    DivisionNearZero,
}

impl Termination {
    /// Stopped because the map itself broke down.
    pub fn is_failure(self) -> bool {
        matches!(self, Termination::NegativeSqrt | Termination::NonFinite | Termination::DivisionNearZero)
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Termination::Converged => "Converged",
            Termination::MaxSteps => "MaxSteps",
            Termination::NegativeSqrt => "NegativeSqrt",
            Termination::NonFinite => "NonFinite",
            Termination::DivisionNearZero => "DivisionNearZero",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationConfig {
    pub grid: Grid,
    pub max_steps: usize,
    /// Stop once `sup |phi_{n+1} - phi_n|` drops to this value.
    pub step_tol: f64,
    pub window: f64,
    /// Ignored by the p-adic models.
    pub q_squared: f64,
    pub seed: SeedProfile,
    /// Keep every k-th iterate in the report; 0 keeps none.
    pub record_every: usize,
    /// Start from this field instead of the seed profile.
    pub initial: Option<Field>,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self::new(Grid::standard())
    }
}

impl IterationConfig {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            max_steps: 2000,
            step_tol: 1e-9,
            window: DEFAULT_WINDOW,
            q_squared: 0.0,
            seed: SeedProfile::default(),
            record_every: 0,
            initial: None,
        }
    }

    pub fn with_q_squared(mut self, q_squared: f64) -> Self {
        self.q_squared = q_squared;
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_step_tol(mut self, step_tol: f64) -> Self {
        self.step_tol = step_tol;
        self
    }

    pub fn with_seed(mut self, seed: impl Into<SeedProfile>) -> Self {
        self.seed = seed.into();
        self
    }

    pub fn with_initial(mut self, initial: Field) -> Self {
        self.initial = Some(initial);
        self
    }

    pub fn validate(&self, model: Model) -> Result<()> {
        if self.max_steps == 0 {
            return Err(invalid("max_steps", "must be at least 1"));
        }
        if !(self.step_tol > 0.0) || !self.step_tol.is_finite() {
            return Err(invalid("step_tol", format!("must be positive and finite, got {}", self.step_tol)));
        }
        if !(self.window > 0.0) || !self.window.is_finite() {
            return Err(invalid("window", format!("must be positive and finite, got {}", self.window)));
        }
        if model.uses_q() && (!(self.q_squared >= 0.0) || !self.q_squared.is_finite()) {
            return Err(invalid("q_squared", format!("must be finite and >= 0, got {}", self.q_squared)));
        }
        match model {
            Model::PadicHalf => {
                if self.grid.t_max() != 0.0 {
                    return Err(Error::InvalidGrid(format!(
                        "the half-axis model needs t_max = 0, got {}",
                        self.grid.t_max()
                    )));
                }
            }
            _ => self.grid.require_symmetric()?,
        }
        if model == Model::Ferm2 && self.grid.origin_index().is_none() {
            return Err(Error::InvalidGrid("the two-field model needs a node at t = 0".into()));
        }
        if let Some(f) = &self.initial {
            if f.grid() != &self.grid {
                return Err(Error::GridMismatch);
            }
        }
        Ok(())
    }

    fn start(&self) -> Field {
        match &self.initial {
            Some(f) => f.clone(),
            None => sample_profile(self.seed, &self.grid),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub model: Model,
    pub q_squared: f64,
    pub grid: Grid,
    pub final_field: Field,
    pub steps_taken: usize,
    /// [`step_distance`] between successive iterates.
    pub step_diffs: Vec<f64>,
    pub residual: f64,
    pub terminated_by: Termination,
    pub snapshots: Vec<(usize, Field)>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.terminated_by == Termination::Converged
    }

    pub fn to_json(&self, final_csv_path: Option<&str>) -> Value {
        json!({
            "model": self.model.name(),
            "q_squared": self.q_squared,
            "grid": {
                "t_min": self.grid.t_min(),
                "t_max": self.grid.t_max(),
                "n_points": self.grid.n_points(),
            },
            "steps_taken": self.steps_taken,
            "terminated_by": self.terminated_by.to_string(),
            "residual": finite_or_null(self.residual),
            "step_diffs": self.step_diffs,
            "final_csv_path": final_csv_path,
        })
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// `(phi, sigma)` of the two-field model.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub phi: Field,
    pub sigma: Field,
}

/// Real cube root, odd and monotone.
pub fn cbrt_signed(x: f64) -> f64 {
    x.cbrt()
}

fn kernel_failure(e: Error) -> Termination {
    match e {
        Error::NonFiniteOutput { .. } | Error::NonFiniteField { .. } => Termination::NonFinite,
        other => panic!("convolution on a validated grid failed: {other}"),
    }
}

/// Sup-norm distance between iterates. A node carrying a jump is compared
/// through its one-sided limits, so the alternating origin convention of the
/// two-field map does not register as motion.
pub fn step_distance(a: &Field, b: &Field) -> f64 {
    let d = sup_diff(a, b).expect("iterates share the grid");
    let Some(i0) = a.grid().origin_index() else {
        return d;
    };
    if a.jump().is_none() && b.jump().is_none() {
        return d;
    }
    let lim = |f: &Field| f.jump().unwrap_or(Jump { left: f.value(i0), right: f.value(i0) });
    let (ja, jb) = (lim(a), lim(b));
    let at_origin = (ja.left - jb.left).abs().max((ja.right - jb.right).abs());
    (0..a.len()).filter(|&i| i != i0).map(|i| (a.value(i) - b.value(i)).abs()).fold(at_origin, f64::max)
}

/// Runs `step` from the configured start until convergence or a stop.
fn iterate(
    cfg: &IterationConfig,
    mut step: impl FnMut(usize, &Field) -> std::result::Result<Field, Termination>,
) -> (Field, usize, Vec<f64>, Termination, Vec<(usize, Field)>) {
    let mut phi = cfg.start();
    let mut diffs = Vec::new();
    let mut snapshots = Vec::new();
    if cfg.record_every > 0 {
        snapshots.push((0, phi.clone()));
    }
    let mut stop = Termination::MaxSteps;
    for n in 0..cfg.max_steps {
        match step(n, &phi) {
            Ok(next) => {
                let d = step_distance(&phi, &next);
                diffs.push(d);
                phi = next;
                let done = diffs.len();
                if cfg.record_every > 0 && done % cfg.record_every == 0 {
                    snapshots.push((done, phi.clone()));
                }
                if d <= cfg.step_tol {
                    stop = Termination::Converged;
                    break;
                }
            }
            Err(t) => {
                stop = t;
                break;
            }
        }
    }
    (phi, diffs.len(), diffs, stop, snapshots)
}

fn cube_root_solve(model: Model, cfg: &IterationConfig, spec: KernelSpec) -> Result<SolveReport> {
    cfg.validate(model)?;
    let conv = Convolver::new(spec, &cfg.grid)?;
    let (phi, steps, diffs, stop, snapshots) = iterate(cfg, |_, phi| {
        let k = conv.apply(phi).map_err(kernel_failure)?;
        k.map(cbrt_signed).map_err(|_| Termination::NonFinite)
    });
    let residual = single_residual(&conv, &phi, cfg.window).unwrap_or(f64::NAN);
    Ok(SolveReport {
        model,
        q_squared: if model.uses_q() { cfg.q_squared } else { 0.0 },
        grid: cfg.grid,
        final_field: phi,
        steps_taken: steps,
        step_diffs: diffs,
        residual,
        terminated_by: stop,
        snapshots,
    })
}

/// `phi <- cbrt(K phi)` on a symmetric grid.
pub fn solve_padic(cfg: &IterationConfig) -> Result<SolveReport> {
    cube_root_solve(Model::Padic, cfg, KernelSpec::gauss(cfg.window))
}

/// `phi <- cbrt(K_- phi)` on a grid ending at `t = 0`.
pub fn solve_padic_half(cfg: &IterationConfig) -> Result<SolveReport> {
    cube_root_solve(Model::PadicHalf, cfg, KernelSpec::half_axis(cfg.window))
}

/// `phi <- cbrt(K_q phi)`.
pub fn solve_ferm1(cfg: &IterationConfig) -> Result<SolveReport> {
    cube_root_solve(Model::Ferm1, cfg, KernelSpec::ferm(cfg.q_squared, cfg.window))
}

/// `-eps_n(0)` at the origin node of iterate `n`.
fn origin_sign(cfg: &IterationConfig, n: usize) -> f64 {
    if cfg.seed.alternating_origin && n % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `K_q phi / phi`. At the origin node the stored value is used when it is
/// nonzero and `-eps_n(0)` otherwise.
fn quotient(kq_phi: &Field, phi: &Field, fallback: f64) -> std::result::Result<Field, Termination> {
    let i0 = phi.grid().origin_index();
    let mut out = Vec::with_capacity(phi.len());
    for i in 0..phi.len() {
        let mut den = phi.value(i);
        if Some(i) == i0 {
            if den == 0.0 {
                den = fallback;
            }
        } else if den.abs() < DIVISION_FLOOR {
            return Err(Termination::DivisionNearZero);
        }
        out.push(kq_phi.value(i) / den);
    }
    Field::new(*phi.grid(), out).map_err(|_| Termination::NonFinite)
}

/// Two-field iteration `phi_{n+1} = -eps(t) sqrt(K[K_q phi_n / phi_n])`.
///
/// Iterates carry one-sided limits `(+s, -s)` at the origin, `s = sqrt(K[..](0))`;
/// the node itself stores `-eps_n(0) s` with `eps_n(0) = (-1)^n`. The returned
/// state pairs the last iterate with `sigma = K_q phi / phi`.
pub fn solve_ferm2(cfg: &IterationConfig) -> Result<(SolveReport, SystemState)> {
    let model = Model::Ferm2;
    cfg.validate(model)?;
    let kq = Convolver::new(KernelSpec::ferm(cfg.q_squared, cfg.window), &cfg.grid)?;
    let k = Convolver::new(KernelSpec::gauss(cfg.window), &cfg.grid)?;
    let i0 = cfg.grid.origin_index().expect("validated");
    let n_pts = cfg.grid.n_points();

    let (phi, steps, diffs, stop, snapshots) = iterate(cfg, |n, phi| {
        let q = quotient(&kq.apply(phi).map_err(kernel_failure)?, phi, origin_sign(cfg, n))?;
        let s = k.apply(&q).map_err(kernel_failure)?;
        if s.values().iter().any(|&v| v < 0.0) {
            return Err(Termination::NegativeSqrt);
        }
        let root = |i: usize| s.value(i).sqrt();
        let values = (0..n_pts)
            .map(|i| match i.cmp(&i0) {
                std::cmp::Ordering::Less => root(i),
                std::cmp::Ordering::Greater => -root(i),
                std::cmp::Ordering::Equal => origin_sign(cfg, n) * root(i),
            })
            .collect();
        let s0 = root(i0);
        Field::new(cfg.grid, values).and_then(|f| f.with_jump(s0, -s0)).map_err(|_| Termination::NonFinite)
    });

    let fallback = origin_sign(cfg, steps);
    let sigma = kq.apply(&phi).ok().and_then(|kq_phi| quotient(&kq_phi, &phi, fallback).ok());
    let (sigma, residual) = match sigma {
        Some(sigma) => {
            let state = SystemState { phi: phi.clone(), sigma };
            let r = system_residual(&state, cfg.q_squared, cfg.window).unwrap_or(f64::NAN);
            (state.sigma, r)
        }
        None => (Field::constant(cfg.grid, 0.0).expect("finite"), f64::NAN),
    };
    let report = SolveReport {
        model,
        q_squared: cfg.q_squared,
        grid: cfg.grid,
        final_field: phi.clone(),
        steps_taken: steps,
        step_diffs: diffs,
        residual,
        terminated_by: stop,
        snapshots,
    };
    Ok((report, SystemState { phi, sigma }))
}

/// Dispatches on `model`. The two-field state is dropped.
pub fn solve(model: Model, cfg: &IterationConfig) -> Result<SolveReport> {
    match model {
        Model::Padic => solve_padic(cfg),
        Model::PadicHalf => solve_padic_half(cfg),
        Model::Ferm1 => solve_ferm1(cfg),
        Model::Ferm2 => solve_ferm2(cfg).map(|(r, _)| r),
    }
}

/// Distance from the grid ends excluded from residuals: the reach beyond
/// which the Gaussian weight carries less than `1e-14` of its mass.
pub fn residual_margin(window: f64) -> f64 {
    auto_window(DEFAULT_TAIL_TOL).expect("constant tolerance is valid").min(window)
}

/// Node indices at least `margin` inside every open end. The right end of a
/// half-axis grid is a true boundary and is kept.
fn interior(grid: &Grid, margin: f64, half: bool) -> Vec<usize> {
    let lo = grid.t_min() + margin;
    let hi = if half { grid.t_max() } else { grid.t_max() - margin };
    let idx: Vec<usize> = (0..grid.n_points()).filter(|&i| grid.node(i) >= lo && grid.node(i) <= hi).collect();
    if idx.is_empty() {
        (0..grid.n_points()).collect()
    } else {
        idx
    }
}

fn single_residual(conv: &Convolver, phi: &Field, window: f64) -> Result<f64> {
    let kphi = conv.apply(phi)?;
    let half = conv.spec().kind == crate::kernels::KernelKind::HalfAxisKminus;
    Ok(interior(phi.grid(), residual_margin(window), half)
        .into_iter()
        .map(|i| (kphi.value(i) - phi.value(i).powi(3)).abs())
        .fold(0.0, f64::max))
}

/// Interior sup-norm residual of a single-field model equation:
/// `K phi - phi^3`, `K_- phi - phi^3` or `K_q phi - phi^3`. For `Ferm2`,
/// `sigma` is rebuilt as `K_q phi / phi` and [`system_residual`] is returned.
pub fn residual(model: Model, phi: &Field, q_squared: f64, window: f64) -> Result<f64> {
    let spec = match model {
        Model::Padic => KernelSpec::gauss(window),
        Model::PadicHalf => KernelSpec::half_axis(window),
        Model::Ferm1 => KernelSpec::ferm(q_squared, window),
        Model::Ferm2 => {
            let kq = Convolver::new(KernelSpec::ferm(q_squared, window), phi.grid())?;
            let sigma = quotient(&kq.apply(phi)?, phi, -1.0).map_err(Error::Solver)?;
            return system_residual(&SystemState { phi: phi.clone(), sigma }, q_squared, window);
        }
    };
    single_residual(&Convolver::new(spec, phi.grid())?, phi, window)
}

/// `max(sup |K sigma - phi^2|, sup |K_q phi - sigma phi|)` on interior nodes.
pub fn system_residual(state: &SystemState, q_squared: f64, window: f64) -> Result<f64> {
    let grid = state.phi.grid();
    if state.sigma.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let k_sigma = Convolver::new(KernelSpec::gauss(window), grid)?.apply(&state.sigma)?;
    let kq_phi = Convolver::new(KernelSpec::ferm(q_squared, window), grid)?.apply(&state.phi)?;
    Ok(interior(grid, residual_margin(window), false)
        .into_iter()
        .map(|i| {
            let p = state.phi.value(i);
            let s = state.sigma.value(i);
            let first = (k_sigma.value(i) - p * p).abs();
            let second = (kq_phi.value(i) - s * p).abs();
            first.max(second)
        })
        .fold(0.0, f64::max))
}
