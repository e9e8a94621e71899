//! Large-`q` behaviour of the single equation.
//!
//! Under `chi(t) = phi(q t)` the single equation formally tends to the
//! anharmonic oscillator `chi'' = chi - chi^3` as `q -> infinity`.
//! [`large_q_comparison`] holds a periodic solution against the oscillator
//! orbit of the same amplitude.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid};
use crate::regime::{classify, RegimeKind};
use crate::solvers::{solve_ferm1, IterationConfig, SolveReport};

/// Orbits leaving `|chi| <= ORBIT_BOUND` are reported as unbounded.
pub const ORBIT_BOUND: f64 = 10.0;

/// Grid for a large-`q` solve: `[-L, L]` with `L = max(10, 12 q)` and
/// spacing at most 0.03, so the rescaled field spans `[-12, 12]`.
pub fn large_q_grid(q_squared: f64) -> Result<Grid> {
    if !(q_squared > 0.0) || !q_squared.is_finite() {
        return Err(invalid("q_squared", format!("must be positive and finite, got {q_squared}")));
    }
    let t_max = (12.0 * q_squared.sqrt()).max(10.0);
    let half = (t_max / 0.03).ceil() as usize;
    Grid::new(-t_max, t_max, 2 * half + 1)
}

/// Linear interpolation of `f` at `x`, which must lie on the grid.
fn interpolate(f: &Field, x: f64) -> Result<f64> {
    let g = f.grid();
    let h = g.spacing();
    let slack = 1e-9 * h;
    if !(x >= g.t_min() - slack && x <= g.t_max() + slack) {
        return Err(Error::OutsideGrid(x));
    }
    let pos = ((x - g.t_min()) / h).clamp(0.0, (g.n_points() - 1) as f64);
    let i = (pos.floor() as usize).min(g.n_points() - 2);
    let w = pos - i as f64;
    Ok(if w == 0.0 { f.value(i) } else { (1.0 - w) * f.value(i) + w * f.value(i + 1) })
}

/// `chi(t) = phi(q t)` sampled on `target`.
pub fn rescale_onto(phi: &Field, q: f64, target: &Grid) -> Result<Field> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(invalid("q", format!("must be positive and finite, got {q}")));
    }
    let values = target.nodes().into_iter().map(|t| interpolate(phi, q * t)).collect::<Result<Vec<_>>>()?;
    Field::new(*target, values)
}

/// `chi(t) = phi(q t)` on the source grid scaled by `1/q`.
pub fn rescale_field(phi: &Field, q: f64) -> Result<Field> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(invalid("q", format!("must be positive and finite, got {q}")));
    }
    if q == 1.0 {
        return Field::new(*phi.grid(), phi.values().to_vec());
    }
    rescale_onto(phi, q, &phi.grid().scaled(1.0 / q)?)
}

/// `E = chi'^2 / 2 - chi^2 / 2 + chi^4 / 4`.
pub fn oscillator_energy(chi: f64, dchi: f64) -> f64 {
    0.5 * dchi * dchi - 0.5 * chi * chi + 0.25 * chi.powi(4)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorOrbit {
    pub times: Vec<f64>,
    pub chi: Vec<f64>,
    pub dchi: Vec<f64>,
    /// First return to the initial section; `None` at an equilibrium or when
    /// no return happens before `max_time`.
    pub period: Option<f64>,
    /// Energy of the initial condition.
    pub energy: f64,
    /// `max |E(t) - E(0)|` over the whole run.
    pub energy_drift: f64,
    /// `max |chi|`.
    pub amplitude: f64,
}

impl OscillatorOrbit {
    /// `chi` as a field on the uniform time grid of the run.
    pub fn trajectory(&self) -> Result<Field> {
        let n = self.times.len();
        let grid = Grid::new(self.times[0], self.times[n - 1], n)?;
        Field::new(grid, self.chi.clone())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,chi,dchi,energy\n");
        for k in 0..self.times.len() {
            let e = oscillator_energy(self.chi[k], self.dchi[k]);
            let _ = writeln!(s, "{:.16e},{:.16e},{:.16e},{:.16e}", self.times[k], self.chi[k], self.dchi[k], e);
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn rhs(x: f64, v: f64) -> (f64, f64) {
    (v, x - x * x * x)
}

fn rk4(x: f64, v: f64, dt: f64) -> (f64, f64) {
    let (k1x, k1v) = rhs(x, v);
    let (k2x, k2v) = rhs(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v);
    let (k3x, k3v) = rhs(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v);
    let (k4x, k4v) = rhs(x + dt * k3x, v + dt * k3v);
    (x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x), v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v))
}

/// Integrates `chi'' = chi - chi^3` with fixed-step RK4 for `max_time`.
///
/// The period is the first time the trajectory crosses, in the initial
/// direction, the line through the initial point normal to the initial
/// velocity in phase space; crossing times are linearly interpolated.
pub fn oscillator_orbit(initial_chi: f64, initial_dchi: f64, dt: f64, max_time: f64) -> Result<OscillatorOrbit> {
    oscillator_orbit_within(initial_chi, initial_dchi, dt, max_time, ORBIT_BOUND)
}

/// [`oscillator_orbit`] with a caller-chosen bound on `|chi|`.
pub fn oscillator_orbit_within(
    initial_chi: f64,
    initial_dchi: f64,
    dt: f64,
    max_time: f64,
    bound: f64,
) -> Result<OscillatorOrbit> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be positive and finite, got {dt}")));
    }
    if !(max_time >= 2.0 * dt) || !max_time.is_finite() {
        return Err(invalid("max_time", format!("must be finite and at least 2 dt, got {max_time}")));
    }
    if !initial_chi.is_finite() || !initial_dchi.is_finite() {
        return Err(invalid("initial", "initial conditions must be finite"));
    }
    if initial_chi.abs() > bound {
        return Err(Error::Unbounded(initial_chi.abs()));
    }
    let steps = (max_time / dt).round() as usize;
    let (x0, v0) = (initial_chi, initial_dchi);
    let energy = oscillator_energy(x0, v0);
    let (nx, nv) = rhs(x0, v0);
    let section = |x: f64, v: f64| (x - x0) * nx + (v - v0) * nv;

    let mut times = Vec::with_capacity(steps + 1);
    let mut chi = Vec::with_capacity(steps + 1);
    let mut dchi = Vec::with_capacity(steps + 1);
    times.push(0.0);
    chi.push(x0);
    dchi.push(v0);
    let (mut x, mut v) = (x0, v0);
    let mut drift = 0.0_f64;
    let mut amplitude = x0.abs();
    let mut period = None;
    let mut s_prev = 0.0;
    let mut left_section = false;
    for k in 1..=steps {
        (x, v) = rk4(x, v, dt);
        if !x.is_finite() || x.abs() > bound {
            return Err(Error::Unbounded(x.abs()));
        }
        let t = k as f64 * dt;
        times.push(t);
        chi.push(x);
        dchi.push(v);
        drift = drift.max((oscillator_energy(x, v) - energy).abs());
        amplitude = amplitude.max(x.abs());
        let s = section(x, v);
        if s < 0.0 {
            left_section = true;
        }
        if period.is_none() && left_section && s_prev < 0.0 && s >= 0.0 {
            period = Some(t - dt * s / (s - s_prev));
        }
        s_prev = s;
    }
    if nx == 0.0 && nv == 0.0 {
        period = None;
    }
    Ok(OscillatorOrbit { times, chi, dchi, period, energy, energy_drift: drift, amplitude })
}

/// Period and amplitude of an odd oscillating field, from its sign changes
/// on `0 < t <= reach`.
fn measure_oscillation(chi: &Field, reach: f64) -> Result<(f64, f64)> {
    let n = chi.len();
    let mut crossings = Vec::new();
    let mut peaks = Vec::new();
    let mut peak = 0.0_f64;
    for i in 1..n {
        let (t0, t1) = (chi.t(i - 1), chi.t(i));
        if t0 <= 0.0 || t1 > reach {
            continue;
        }
        let (a, b) = (chi.value(i - 1), chi.value(i));
        peak = peak.max(b.abs());
        if a != 0.0 && (a < 0.0) != (b < 0.0) {
            crossings.push(t0 + (t1 - t0) * a / (a - b));
            if crossings.len() > 1 {
                peaks.push(peak);
            }
            peak = 0.0;
        }
    }
    if crossings.len() < 3 {
        return Err(Error::NotPeriodic(format!("only {} sign changes on 0 < t <= {reach:.3}", crossings.len())));
    }
    let half = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
    let amplitude = peaks.iter().sum::<f64>() / peaks.len() as f64;
    Ok((2.0 * half, amplitude))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LargeQComparison {
    pub q_squared: f64,
    pub report: SolveReport,
    pub rescaled: Field,
    /// Period of `chi(t) = phi(q t)`.
    pub measured_period: f64,
    /// Mean `|chi|` at the extrema used for the period.
    pub amplitude: f64,
    pub orbit: OscillatorOrbit,
    /// `|T_measured - T_orbit| / T_orbit`.
    pub period_mismatch: f64,
}

impl LargeQComparison {
    pub fn to_json(&self) -> Value {
        json!({
            "q_squared": self.q_squared,
            "steps_taken": self.report.steps_taken,
            "terminated_by": self.report.terminated_by.to_string(),
            "measured_period": self.measured_period,
            "amplitude": self.amplitude,
            "orbit_period": self.orbit.period,
            "orbit_energy": self.orbit.energy,
            "period_mismatch": self.period_mismatch,
        })
    }
}

/// Solves the single equation at `q_squared`, rescales the periodic result
/// and compares its period with the oscillator orbit started from rest at the
/// measured amplitude. That orbit may reach past [`ORBIT_BOUND`]; it is
/// only required to stay within twice the amplitude.
pub fn large_q_comparison(q_squared: f64, cfg: &IterationConfig) -> Result<LargeQComparison> {
    if !(q_squared > 0.0) || !q_squared.is_finite() {
        return Err(invalid("q_squared", format!("must be positive and finite, got {q_squared}")));
    }
    let report = solve_ferm1(&cfg.clone().with_q_squared(q_squared))?;
    let regime = classify(&report);
    if regime.kind != RegimeKind::Periodic {
        return Err(Error::NotPeriodic(format!("q^2 = {q_squared}: {} ({})", regime.kind, regime.evidence)));
    }
    let q = q_squared.sqrt();
    let rescaled = rescale_field(&report.final_field, q)?;
    // keep clear of the continued edge by a window's reach
    let reach = (rescaled.grid().t_max() - cfg.window / q).max(0.5 * rescaled.grid().t_max());
    let (measured_period, amplitude) = measure_oscillation(&rescaled, reach)?;
    let dt = 1e-3;
    let bound = ORBIT_BOUND.max(2.0 * amplitude);
    let orbit = oscillator_orbit_within(amplitude, 0.0, dt, 3.0 * measured_period + 20.0, bound)?;
    let t_orbit = orbit.period.ok_or_else(|| Error::NotPeriodic("oscillator orbit did not return".into()))?;
    Ok(LargeQComparison {
        q_squared,
        report,
        rescaled,
        measured_period,
        amplitude,
        orbit,
        period_mismatch: (measured_period - t_orbit).abs() / t_orbit,
    })
}
