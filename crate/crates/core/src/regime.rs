//! Convergence diagnostics and regime detection.
//!
//! [`classify`] separates kinks that settle onto `-eps(t)` from the swinging
//! states that appear at larger `q^2`; [`find_qcr`] bisects on `q^2` for the
//! boundary between them.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::{Field, SeedKind};
use crate::solvers::{solve_ferm1, solve_ferm2, solve_padic_half, IterationConfig, Model, SolveReport, Termination};

/// Mean distance from `-+1` over the outer tenth of the grid that still
/// counts as having reached the vacua.
pub const EDGE_TOL: f64 = 0.01;

/// Smallest peak-to-peak swing in the outer half that counts as oscillation.
pub const SWING_FLOOR: f64 = 0.1;

/// Width (time units) next to each grid end left out of the swing count;
/// the constant continuation flattens extrema there.
pub const EDGE_BAND: f64 = 1.0;

/// Budget used by [`find_qcr`] for single-equation probes once the bracket is
/// narrower than [`NARROW_BRACKET`].
pub const RAISED_BUDGET: usize = 20_000;
pub const NARROW_BRACKET: f64 = 0.05;

/// `Delta(t) = (phi_1 - phi_2) / phi_1` on `t < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationProfile {
    /// Zero at the origin node, where both iterates vanish.
    pub delta: Field,
    pub delta_max: f64,
    pub phi1: Field,
    pub phi2: Field,
}

/// Runs two half-axis iterations and measures how far the second falls
/// below the first.
pub fn deviation_profile(cfg: &IterationConfig) -> Result<DeviationProfile> {
    let cfg = IterationConfig { max_steps: 2, step_tol: f64::MIN_POSITIVE, record_every: 1, ..cfg.clone() };
    let report = solve_padic_half(&cfg)?;
    if report.steps_taken < 2 {
        return Err(Error::Solver(report.terminated_by));
    }
    let phi1 = report.snapshots[1].1.clone();
    let phi2 = report.snapshots[2].1.clone();
    let mut delta = vec![0.0; phi1.len()];
    let mut delta_max = f64::NEG_INFINITY;
    for (i, d) in delta.iter_mut().enumerate() {
        if phi1.t(i) < 0.0 {
            *d = (phi1.value(i) - phi2.value(i)) / phi1.value(i);
            delta_max = delta_max.max(*d);
        }
    }
    Ok(DeviationProfile { delta: Field::new(*phi1.grid(), delta)?, delta_max, phi1, phi2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeKind {
    Interpolating,
    Periodic,
    Undetermined,
}

impl fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegimeKind::Interpolating => "Interpolating",
            RegimeKind::Periodic => "Periodic",
            RegimeKind::Undetermined => "Undetermined",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub kind: RegimeKind,
    /// Measured quantities behind the verdict.
    pub evidence: String,
}

/// Values of `dev` at its interior local extrema, in index order.
fn extrema(dev: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev_sign = 0.0;
    for i in 1..dev.len() {
        let slope = dev[i] - dev[i - 1];
        if slope == 0.0 {
            continue;
        }
        let s = slope.signum();
        if prev_sign != 0.0 && s != prev_sign {
            out.push(dev[i - 1]);
        }
        prev_sign = s;
    }
    out
}

/// Peak-to-peak differences between successive extrema.
fn swings(ext: &[f64]) -> Vec<f64> {
    ext.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
}

/// Whether the step differences ended in a steady cycle instead of decaying:
/// the last 50 are no smaller on average than the 150 before them.
fn cycling(step_diffs: &[f64]) -> bool {
    if step_diffs.len() < 200 {
        return false;
    }
    let tail = &step_diffs[step_diffs.len() - 200..];
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (early, late) = (mean(&tail[..150]), mean(&tail[150..]));
    late > 1e-6 && late >= 0.5 * early
}

/// Labels a full-axis single-field report.
///
/// Interpolating: the outer tenth on each side sits within [`EDGE_TOL`] of
/// `+1` (left) and `-1` (right) on average, and the extrema of
/// `phi + eps(t)` shrink walking outward from the origin. Periodic: on each
/// side the outer half (less [`EDGE_BAND`]) holds at least one swing of `phi + eps(t)`, every
/// swing there is at least [`SWING_FLOOR`] and none shrinks by more than 5%
/// from its predecessor; or the step differences cycle without decaying.
pub fn classify(report: &SolveReport) -> Regime {
    let f = &report.final_field;
    let n = f.len();
    let i_mid = (n - 1) / 2;
    let dev: Vec<f64> = (0..n).map(|i| f.value(i) - SeedKind::NegStep.eval(f.t(i))).collect();

    let outer = (n / 10).max(1);
    let left_edge = f.values()[..outer].iter().map(|v| (v - 1.0).abs()).sum::<f64>() / outer as f64;
    let right_edge = f.values()[n - outer..].iter().map(|v| (v + 1.0).abs()).sum::<f64>() / outer as f64;
    let edge = left_edge.max(right_edge);

    // outward order on both sides, origin excluded
    let right: Vec<f64> = dev[i_mid + 1..].to_vec();
    let left: Vec<f64> = dev[..i_mid].iter().rev().copied().collect();
    let shrinking = |side: &[f64]| {
        let amps: Vec<f64> = extrema(side).iter().map(|e| e.abs()).collect();
        amps.windows(2).all(|w| w[1] <= w[0] + 1e-9)
    };
    let monotone = shrinking(&left) && shrinking(&right);

    let band = ((EDGE_BAND / f.grid().spacing()).round() as usize).min(n / 4);
    let outer_swings = |side: &[f64]| swings(&extrema(&side[side.len() / 2..side.len() - band]));
    let (sl, sr) = (outer_swings(&left), outer_swings(&right));
    let sustained =
        |s: &[f64]| !s.is_empty() && s.iter().all(|&x| x >= SWING_FLOOR) && s.windows(2).all(|w| w[1] >= 0.95 * w[0]);
    let min_swing = sl.iter().chain(&sr).copied().fold(f64::INFINITY, f64::min);
    let cycle = cycling(&report.step_diffs);

    let evidence = format!(
        "edge_mean_dev={edge:.3e} extrema_non_increasing={monotone} outer_swings={}/{} min_outer_swing={} \
         step_diff_cycle={cycle} steps={} terminated_by={}",
        sl.len(),
        sr.len(),
        if min_swing.is_finite() { format!("{min_swing:.3e}") } else { "none".into() },
        report.steps_taken,
        report.terminated_by,
    );
    let kind = if edge < EDGE_TOL && monotone {
        RegimeKind::Interpolating
    } else if (sustained(&sl) && sustained(&sr)) || cycle {
        RegimeKind::Periodic
    } else {
        RegimeKind::Undetermined
    };
    Regime { kind, evidence }
}

/// One bisection probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub q_squared: f64,
    /// Regime label (single equation) or termination cause (system).
    pub outcome: String,
    pub steps_taken: usize,
    pub max_steps: usize,
    pub above: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcrEstimate {
    pub model: Model,
    /// Midpoint of the final bracket.
    pub q_squared: f64,
    pub bracket: (f64, f64),
    pub budget: usize,
    pub probes: Vec<Probe>,
}

impl QcrEstimate {
    pub fn to_json(&self) -> Value {
        json!({
            "model": self.model.name(),
            "q_squared_cr": self.q_squared,
            "bracket": [self.bracket.0, self.bracket.1],
            "budget": self.budget,
            "raised_budget": RAISED_BUDGET,
            "probes": self.probes.iter().map(|p| json!({
                "q_squared": p.q_squared,
                "outcome": p.outcome,
                "steps_taken": p.steps_taken,
                "max_steps": p.max_steps,
            })).collect::<Vec<_>>(),
        })
    }
}

fn probe(model: Model, q_squared: f64, cfg: &IterationConfig, width: f64) -> Result<Probe> {
    let mut cfg = cfg.clone().with_q_squared(q_squared);
    match model {
        Model::Ferm1 => {
            if width < NARROW_BRACKET {
                cfg.max_steps = cfg.max_steps.max(RAISED_BUDGET);
            }
            let r = solve_ferm1(&cfg)?;
            let regime = classify(&r);
            Ok(Probe {
                q_squared,
                outcome: regime.kind.to_string(),
                steps_taken: r.steps_taken,
                max_steps: cfg.max_steps,
                above: regime.kind == RegimeKind::Periodic,
            })
        }
        Model::Ferm2 => {
            let (r, _) = solve_ferm2(&cfg)?;
            Ok(Probe {
                q_squared,
                outcome: r.terminated_by.to_string(),
                steps_taken: r.steps_taken,
                max_steps: cfg.max_steps,
                above: r.terminated_by == Termination::NegativeSqrt,
            })
        }
        other => Err(crate::error::invalid("model", format!("no critical q^2 search for `{other}`"))),
    }
}

/// Bisects on `q^2` for the onset of the periodic regime (`Ferm1`, by
/// [`classify`]) or of the negative square root (`Ferm2`). The answer
/// depends on the step budget in `budget`.
pub fn find_qcr(
    model: Model,
    bracket_lo: f64,
    bracket_hi: f64,
    budget: &IterationConfig,
    bisection_steps: usize,
) -> Result<QcrEstimate> {
    if !(bracket_lo < bracket_hi) || !bracket_lo.is_finite() || !bracket_hi.is_finite() || bracket_lo < 0.0 {
        return Err(crate::error::invalid(
            "bracket",
            format!("need finite 0 <= lo < hi, got [{bracket_lo}, {bracket_hi}]"),
        ));
    }
    let width = bracket_hi - bracket_lo;
    let ends: Vec<Result<Probe>> =
        [bracket_lo, bracket_hi].into_par_iter().map(|q2| probe(model, q2, budget, width)).collect();
    let mut probes = Vec::new();
    for p in ends {
        probes.push(p?);
    }
    let (lo_above, hi_above) = (probes[0].above, probes[1].above);
    if lo_above == hi_above {
        return Err(Error::DegenerateBracket { lo: bracket_lo, hi: bracket_hi, value: lo_above });
    }
    let (mut lo, mut hi) = (bracket_lo, bracket_hi);
    for _ in 0..bisection_steps {
        let mid = 0.5 * (lo + hi);
        let p = probe(model, mid, budget, hi - lo)?;
        if p.above == lo_above {
            lo = mid;
        } else {
            hi = mid;
        }
        probes.push(p);
    }
    Ok(QcrEstimate { model, q_squared: 0.5 * (lo + hi), bracket: (lo, hi), budget: budget.max_steps, probes })
}

/// Least-squares fit `d_n ~ C r^n`, `n` counting from 0 at the first entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricFit {
    pub amplitude: f64,
    pub ratio: f64,
}

/// Fits `log d_n = log C + n log r` over the positive entries.
pub fn geometric_fit(step_diffs: &[f64]) -> Result<GeometricFit> {
    let pts: Vec<(f64, f64)> = step_diffs
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 0.0 && d.is_finite())
        .map(|(n, &d)| (n as f64, d.ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::TooFewSamples(pts.len()));
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    let slope = sxy / sxx;
    Ok(GeometricFit { amplitude: (my - slope * mx).exp(), ratio: slope.exp() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Grid};
    use crate::solvers::solve_padic;

    #[test]
    fn geometric_fit_examples() {
        let d: Vec<f64> = (0..12).map(|n| 2.5 * 0.3_f64.powi(n)).collect();
        let fit = geometric_fit(&d).unwrap();
        assert!((fit.amplitude - 2.5).abs() < 1e-10 && (fit.ratio - 0.3).abs() < 1e-10);
        let flat = geometric_fit(&[0.7; 8]).unwrap();
        assert!((flat.ratio - 1.0).abs() < 1e-12);
        assert!(matches!(geometric_fit(&[1.0, 0.0, 0.5, -1.0, 0.2, 0.1]), Err(Error::TooFewSamples(4))));
    }

    #[test]
    fn extrema_and_swings() {
        let v = [0.0, 1.0, 0.5, -2.0, -1.0, 3.0, 3.0, 2.0];
        assert_eq!(extrema(&v), vec![1.0, -2.0, 3.0]);
        assert_eq!(swings(&extrema(&v)), vec![3.0, 5.0]);
    }

    #[test]
    fn padic_kink_is_interpolating() {
        let r = solve_padic(&IterationConfig::default()).unwrap();
        let regime = classify(&r);
        assert_eq!(regime.kind, RegimeKind::Interpolating, "{}", regime.evidence);
        assert_eq!(classify(&r), regime);
    }

    #[test]
    fn evidence_records_measurements() {
        let g = make_grid(-10.0, 10.0, 201).unwrap();
        let r = solve_padic(&IterationConfig::new(g).with_max_steps(1)).unwrap();
        let regime = classify(&r);
        assert!(regime.evidence.contains("edge_mean_dev"));
    }

    #[test]
    fn deviation_profile_on_default_half_grid() {
        let g = make_grid(-10.0, 0.0, 1001).unwrap();
        let d = deviation_profile(&IterationConfig::new(g)).unwrap();
        assert!(d.delta_max > 0.0 && d.delta_max < 0.05, "{}", d.delta_max);
        assert!(d.delta.value(0).abs() < 1e-6);
        assert_eq!(d.delta.value(1000), 0.0);
    }

    #[test]
    fn degenerate_bracket_is_rejected() {
        let g = make_grid(-8.0, 8.0, 801).unwrap();
        let cfg = IterationConfig::new(g).with_max_steps(300);
        let err = find_qcr(Model::Ferm1, 0.5, 0.9, &cfg, 2).unwrap_err();
        assert!(matches!(err, Error::DegenerateBracket { value: false, .. }), "{err}");
        assert!(find_qcr(Model::Padic, 0.5, 0.9, &cfg, 2).is_err());
        assert!(find_qcr(Model::Ferm1, 0.9, 0.5, &IterationConfig::new(Grid::standard()), 2).is_err());
    }
}
