//! Physical fields from solver fields.
//!
//! Solver fields `Psi, Upsilon` relate to the physical `psi, upsilon` through
//! `psi = e^{(1/8) d^2} Psi`, a Gaussian smoothing that removes the break the
//! two-field solution carries at `t = 0`.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::{sup_diff, Field};
use crate::kernels::{Convolver, KernelSpec, DEFAULT_WINDOW};
use crate::solvers::{solve_ferm1, solve_ferm2, IterationConfig, SolveReport, SystemState};

/// `q^2 = -1 / (4 ln(4 / (3 sqrt 3)))`, about 0.9556.
pub fn q_string_squared() -> f64 {
    -1.0 / (4.0 * (4.0 / (3.0 * 3.0_f64.sqrt())).ln())
}

/// `e^{(1/8) d^2} f = sqrt(2/pi) int e^{-2(t-t')^2} f(t') dt'`.
pub fn smooth_field(f: &Field) -> Result<Field> {
    smooth_field_with(f, DEFAULT_WINDOW)
}

pub fn smooth_field_with(f: &Field, window: f64) -> Result<Field> {
    Convolver::new(KernelSpec::smoothing(window), f.grid())?.apply(f)
}

/// Backward and forward difference quotients at the origin node, each taken
/// against the one-sided limit on its own side.
pub fn one_sided_slopes(f: &Field) -> Result<(f64, f64)> {
    let i0 = f.grid().origin_index().ok_or_else(|| Error::InvalidGrid("no node at t = 0".into()))?;
    if i0 == 0 || i0 + 1 == f.len() {
        return Err(Error::InvalidGrid("the origin must be an interior node".into()));
    }
    let (left, right) = f.jump().map_or((f.value(i0), f.value(i0)), |j| (j.left, j.right));
    let h = f.grid().spacing();
    Ok(((left - f.value(i0 - 1)) / h, (f.value(i0 + 1) - right) / h))
}

/// Exact (two-field) against approximate (single-equation) physical fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelComparison {
    pub q_squared: f64,
    /// Smoothed two-field `phi`.
    pub psi_exact: Field,
    /// Smoothed single-equation `phi`.
    pub psi_approx: Field,
    /// Smoothed two-field `sigma`.
    pub upsilon_exact: Field,
    /// Square of the single-equation `phi`, unsmoothed.
    pub upsilon_approx: Field,
    pub sup_gap: f64,
    pub exact: SolveReport,
    pub approx: SolveReport,
    pub state: SystemState,
}

impl ModelComparison {
    pub fn to_json(&self) -> Value {
        json!({
            "q_squared": self.q_squared,
            "sup_gap": self.sup_gap,
            "residuals": {
                "ferm2": self.exact.residual,
                "ferm1": self.approx.residual,
            },
            "terminated_by": {
                "ferm2": self.exact.terminated_by.to_string(),
                "ferm1": self.approx.terminated_by.to_string(),
            },
            "upsilon": {
                "exact": "smoothed sigma of the two-field solution",
                "approx": "square of the single-equation solution, not smoothed",
            },
        })
    }
}

/// Solves both models at `q_squared` and smooths their fields.
pub fn compare_models(q_squared: f64, cfg: &IterationConfig) -> Result<ModelComparison> {
    let cfg = cfg.clone().with_q_squared(q_squared);
    let (exact, state) = solve_ferm2(&cfg)?;
    if exact.terminated_by.is_failure() {
        return Err(Error::Solver(exact.terminated_by));
    }
    let approx = solve_ferm1(&cfg)?;
    if approx.terminated_by.is_failure() {
        return Err(Error::Solver(approx.terminated_by));
    }
    let psi_exact = smooth_field_with(&state.phi, cfg.window)?;
    let psi_approx = smooth_field_with(&approx.final_field, cfg.window)?;
    let upsilon_exact = smooth_field_with(&state.sigma, cfg.window)?;
    let upsilon_approx = approx.final_field.map(|v| v * v)?;
    let sup_gap = sup_diff(&psi_exact, &psi_approx)?;
    Ok(ModelComparison {
        q_squared,
        psi_exact,
        psi_approx,
        upsilon_exact,
        upsilon_approx,
        sup_gap,
        exact,
        approx,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{erf, make_grid, parity_violation, sample_profile, Grid, SeedKind};
    use crate::solvers::Termination;
    use proptest::prelude::*;

    #[test]
    fn string_value() {
        let q2 = q_string_squared();
        assert!((q2 - 0.9556).abs() < 1e-4, "{q2}");
    }

    #[test]
    fn smoothing_examples() {
        let g = Grid::standard();
        let one = smooth_field(&Field::constant(g, 1.0).unwrap()).unwrap();
        assert!(one.values().iter().all(|v| (v - 1.0).abs() < 1e-10));
        let step = smooth_field(&sample_profile(SeedKind::NegStep.into(), &g)).unwrap();
        for i in 0..g.n_points() {
            assert!((step.value(i) + erf(std::f64::consts::SQRT_2 * step.t(i))).abs() < 1e-8);
        }
    }

    #[test]
    fn slopes_see_the_break() {
        let g = make_grid(-1.0, 1.0, 201).unwrap();
        let step = sample_profile(SeedKind::NegStep.into(), &g);
        assert_eq!(one_sided_slopes(&step).unwrap(), (0.0, 0.0));
        let kinked = Field::from_fn(g, |t| t.abs()).unwrap();
        let (l, r) = one_sided_slopes(&kinked).unwrap();
        assert!((l + 1.0).abs() < 1e-9 && (r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_field_break_is_smoothed() {
        let g = make_grid(-8.0, 8.0, 801).unwrap();
        let (r, state) = solve_ferm2(&IterationConfig::new(g).with_q_squared(0.96)).unwrap();
        assert_eq!(r.terminated_by, Termination::Converged);
        let j = state.phi.jump().unwrap();
        assert!(j.left - j.right > 0.1);
        let psi = smooth_field(&state.phi).unwrap();
        let (l, rt) = one_sided_slopes(&psi).unwrap();
        assert!((l - rt).abs() < 1e-6);
        assert!(parity_violation(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn compare_above_threshold_fails() {
        let g = make_grid(-8.0, 8.0, 801).unwrap();
        let err = compare_models(3.0, &IterationConfig::new(g)).unwrap_err();
        assert_eq!(err, Error::Solver(Termination::NegativeSqrt));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn smoothing_keeps_sign_and_parity(v in proptest::collection::vec(0.0..3.0_f64, 21)) {
            let g = make_grid(-4.0, 4.0, 41).unwrap();
            let mut full = v.clone();
            full.extend(v.iter().rev().skip(1));
            let f = Field::new(g, full).unwrap();
            let s = smooth_field_with(&f, 4.0).unwrap();
            prop_assert!(s.values().iter().all(|&x| x >= -1e-15));
            let odd = Field::new(g, (0..41).map(|i| if i < 20 { v[i] } else if i == 20 { 0.0 } else { -v[40 - i] }).collect()).unwrap();
            prop_assert_eq!(parity_violation(&smooth_field_with(&odd, 4.0).unwrap()).unwrap(), 0.0);
        }
    }
}
