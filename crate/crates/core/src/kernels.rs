//! Gaussian convolution operators on uniform grids.
//!
//! Every operator here is `(A f)(t) = int k(t, t') f(t') dt'` truncated to
//! `|t - t'| <= window`. Off the grid, `f` is continued by its edge sample.
//! The kernel is sampled once per (spec, grid) into a [`Convolver`]; one
//! application then costs `O(n_points * window / spacing)`.
//!
//! Quadrature is composite Simpson with panels anchored at the origin node,
//! so a jump at `t = 0` (see [`crate::grid::Jump`]) always sits on a panel
//! boundary. The in-window mass of the continued constant is integrated in
//! closed form and only the deviation `f - c` goes through the rule, which
//! keeps constants exact up to the edges (the half-axis operator keeps the
//! plain form so that it stays monotone). Mirror-image nodes are summed in
//! pairs: on symmetric grids, odd inputs give exactly odd outputs and even
//! inputs give exactly even ones.

use std::f64::consts::{FRAC_2_SQRT_PI, PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{erf, erfc, Field, Grid};

/// Truncation half-width used unless the caller asks otherwise.
pub const DEFAULT_WINDOW: f64 = 10.0;

/// Tail tolerance for [`auto_window`].
pub const DEFAULT_TAIL_TOL: f64 = 1e-14;

const INV_SQRT_PI: f64 = 0.5 * FRAC_2_SQRT_PI;

/// Below this many multiply-adds a convolution stays on the calling thread.
const PAR_THRESHOLD: usize = 1 << 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// `e^{(1/4) d^2}`: weight `pi^{-1/2} e^{-u^2}`.
    GaussK,
    /// `(-q^2 d^2 + 1) e^{(1/4) d^2}`.
    FermKq,
    /// Odd-sector kernel on the negative semi-axis,
    /// `pi^{-1/2} (e^{-(t-t')^2} - e^{-(t+t')^2})`.
    HalfAxisKminus,
    /// `e^{(1/8) d^2}`: weight `sqrt(2/pi) e^{-2u^2}`.
    Smoothing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Only read by [`KernelKind::FermKq`].
    pub q_squared: f64,
    pub window: f64,
}

impl KernelSpec {
    pub fn gauss(window: f64) -> Self {
        Self { kind: KernelKind::GaussK, q_squared: 0.0, window }
    }

    pub fn ferm(q_squared: f64, window: f64) -> Self {
        Self { kind: KernelKind::FermKq, q_squared, window }
    }

    pub fn half_axis(window: f64) -> Self {
        Self { kind: KernelKind::HalfAxisKminus, q_squared: 0.0, window }
    }

    pub fn smoothing(window: f64) -> Self {
        Self { kind: KernelKind::Smoothing, q_squared: 0.0, window }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window > 0.0) || !self.window.is_finite() {
            return Err(invalid("window", format!("must be positive and finite, got {}", self.window)));
        }
        if self.kind == KernelKind::FermKq && (!(self.q_squared >= 0.0) || !self.q_squared.is_finite()) {
            return Err(invalid("q_squared", format!("must be finite and >= 0, got {}", self.q_squared)));
        }
        Ok(())
    }

    /// Translation-invariant profile `g(u)` with `k(t, t') = g(t - t')`.
    fn profile(&self, u: f64) -> f64 {
        let u2 = u * u;
        match self.kind {
            KernelKind::GaussK | KernelKind::HalfAxisKminus => INV_SQRT_PI * (-u2).exp(),
            KernelKind::FermKq => INV_SQRT_PI * (-u2).exp() * (1.0 + 2.0 * self.q_squared * (1.0 - 2.0 * u2)),
            KernelKind::Smoothing => (2.0 / PI).sqrt() * (-2.0 * u2).exp(),
        }
    }

    /// `int_{u0}^{u1} g(u) du` in closed form.
    fn mass(&self, u0: f64, u1: f64) -> f64 {
        match self.kind {
            KernelKind::GaussK | KernelKind::HalfAxisKminus => 0.5 * erf_diff(u0, u1),
            KernelKind::FermKq => {
                let bump = |u: f64| u * (-u * u).exp();
                0.5 * erf_diff(u0, u1) + 2.0 * self.q_squared * INV_SQRT_PI * (bump(u1) - bump(u0))
            }
            KernelKind::Smoothing => 0.5 * erf_diff(SQRT_2 * u0, SQRT_2 * u1),
        }
    }
}

/// `erf(b) - erf(a)`, switching to `erfc` when both ends share a sign.
fn erf_diff(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        erfc(a) - erfc(b)
    } else if b <= 0.0 {
        erfc(-b) - erfc(-a)
    } else {
        erf(b) - erf(a)
    }
}

/// Pointwise kernel `k(t, t')`. The window is not applied here.
pub fn kernel_weight(spec: &KernelSpec, t: f64, t_prime: f64) -> f64 {
    match spec.kind {
        KernelKind::HalfAxisKminus => {
            let (a, b) = (t - t_prime, t + t_prime);
            INV_SQRT_PI * ((-a * a).exp() - (-b * b).exp())
        }
        _ => spec.profile(t - t_prime),
    }
}

/// Smallest half-width `D` whose neglected tail mass `erfc(D)` for the
/// `e^{-u^2}` weight is below `tail_tol`.
pub fn auto_window(tail_tol: f64) -> Result<f64> {
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(invalid("tail_tol", format!("must lie in (0, 1), got {tail_tol}")));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while erfc(hi) >= tail_tol {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if erfc(mid) < tail_tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Composite Simpson weights (already multiplied by the spacing).
///
/// Panels start at the origin node and run outward; a piece with an odd
/// interval count closes with a 3/8 panel at its far end, a single interval
/// with the trapezoid. Grids without an origin node form one piece.
pub fn simpson_weights(grid: &Grid) -> Vec<f64> {
    let n = grid.n_points();
    let h = grid.spacing();
    let mut w = vec![0.0; n];
    match grid.origin_index() {
        Some(i0) => {
            add_piece(&mut w, i0, 0, h);
            add_piece(&mut w, i0, n - 1, h);
        }
        None => add_piece(&mut w, 0, n - 1, h),
    }
    w
}

fn add_piece(w: &mut [f64], from: usize, to: usize, h: f64) {
    let m = from.abs_diff(to);
    let at = |k: usize| if to >= from { from + k } else { from - k };
    match m {
        0 => {}
        1 => {
            w[at(0)] += 0.5 * h;
            w[at(1)] += 0.5 * h;
        }
        _ => {
            let simpson = if m.is_multiple_of(2) { m } else { m - 3 };
            for p in (0..simpson).step_by(2) {
                w[at(p)] += h / 3.0;
                w[at(p + 1)] += 4.0 * h / 3.0;
                w[at(p + 2)] += h / 3.0;
            }
            if simpson < m {
                let c = [3.0, 9.0, 9.0, 3.0];
                for (k, ck) in c.iter().enumerate() {
                    w[at(simpson + k)] += ck * h / 8.0;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Plan {
    Translation {
        /// `g(d h)` for `d = 0..=radius`.
        stencil: Vec<f64>,
        /// Kernel mass over the whole window.
        window_mass: f64,
        /// `tail[d]`: in-window mass lying beyond an edge `d` nodes away.
        tail: Vec<f64>,
    },
    HalfAxis {
        /// `g(m h)` for `m = 0..=2(n - 1)`.
        table: Vec<f64>,
        /// `exterior[i]`: in-window mass of `K_-(t_i, .)` beyond `t_min`.
        exterior: Vec<f64>,
    },
}

/// A kernel sampled on one grid, ready to be applied repeatedly.
#[derive(Debug, Clone)]
pub struct Convolver {
    spec: KernelSpec,
    grid: Grid,
    radius: usize,
    weights: Vec<f64>,
    plan: Plan,
}

impl Convolver {
    pub fn new(spec: KernelSpec, grid: &Grid) -> Result<Self> {
        spec.validate()?;
        let h = grid.spacing();
        let full = (spec.window / h + 1e-9).floor();
        if full < 1.0 {
            return Err(invalid("window", format!("{} is narrower than the grid spacing {h}", spec.window)));
        }
        let n = grid.n_points();
        let full = full as usize;
        let radius = full.min(n - 1);
        let reach = full as f64 * h;
        let weights = simpson_weights(grid);

        let plan = if spec.kind == KernelKind::HalfAxisKminus {
            if grid.t_max() != 0.0 {
                return Err(Error::InvalidGrid(format!("the half-axis kernel needs t_max = 0, got {}", grid.t_max())));
            }
            let table = (0..=2 * (n - 1)).map(|m| spec.profile(m as f64 * h)).collect();
            let exterior = (0..full.min(n))
                .map(|i| {
                    let k = n - 1 - i;
                    spec.mass(i as f64 * h, reach) - spec.mass(-((2 * k + full) as f64) * h, -((k + n - 1) as f64) * h)
                })
                .collect();
            Plan::HalfAxis { table, exterior }
        } else {
            let stencil = (0..=radius).map(|d| spec.profile(d as f64 * h)).collect();
            let tail = (0..full.min(n)).map(|d| spec.mass(d as f64 * h, reach)).collect();
            Plan::Translation { stencil, window_mass: spec.mass(-reach, reach), tail }
        };
        Ok(Self { spec, grid: *grid, radius, weights, plan })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Stencil reach in nodes.
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let fq = f.quadrature_values();
        let out = match &self.plan {
            Plan::Translation { stencil, window_mass, tail } => {
                self.apply_translation(&fq, stencil, *window_mass, tail)
            }
            Plan::HalfAxis { table, exterior } => self.apply_half(&fq, table, exterior),
        };
        if let Some(index) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteOutput { index });
        }
        Field::new(self.grid, out)
    }

    fn rows(&self, row: impl Fn(usize) -> f64 + Sync + Send) -> Vec<f64> {
        let n = self.grid.n_points();
        if n * (self.radius + 1) >= PAR_THRESHOLD {
            (0..n).into_par_iter().map(row).collect()
        } else {
            (0..n).map(row).collect()
        }
    }

    fn apply_translation(&self, fq: &[f64], stencil: &[f64], window_mass: f64, tail: &[f64]) -> Vec<f64> {
        let n = fq.len();
        let (lo, hi) = (fq[0], fq[n - 1]);
        let mid = 0.5 * (lo + hi);
        let shifted = |c: f64| -> Vec<f64> { fq.iter().zip(&self.weights).map(|(v, w)| w * (v - c)).collect() };
        let (y_lo, y_hi, y_mid) = (shifted(lo), shifted(hi), shifted(mid));
        let tail_at = |d: usize| tail.get(d).copied().unwrap_or(0.0);
        let r = self.radius;

        self.rows(|i| {
            let (y, c) = match (2 * i).cmp(&(n - 1)) {
                std::cmp::Ordering::Less => (&y_lo, lo),
                std::cmp::Ordering::Greater => (&y_hi, hi),
                std::cmp::Ordering::Equal => (&y_mid, mid),
            };
            let left = r.min(i);
            let right = r.min(n - 1 - i);
            let both = left.min(right);
            let mut acc = stencil[0] * y[i];
            for d in 1..=both {
                acc += stencil[d] * (y[i - d] + y[i + d]);
            }
            for d in both + 1..=left {
                acc += stencil[d] * y[i - d];
            }
            for d in both + 1..=right {
                acc += stencil[d] * y[i + d];
            }
            let tails = tail_at(i) * (lo - c) + tail_at(n - 1 - i) * (hi - c);
            c * window_mass + acc + tails
        })
    }

    /// No constant is split off here: with the edge value carried by the
    /// nonnegative exterior mass, the map stays monotone in `f`.
    fn apply_half(&self, fq: &[f64], table: &[f64], exterior: &[f64]) -> Vec<f64> {
        let n = fq.len();
        let r = self.radius;
        let last = n - 1;

        self.rows(|i| {
            let k = last - i;
            let j0 = i.saturating_sub(r);
            let j1 = (i + r).min(last);
            let mut acc = 0.0;
            for j in j0..=j1 {
                acc += self.weights[j] * fq[j] * (table[i.abs_diff(j)] - table[k + last - j]);
            }
            acc + exterior.get(i).copied().unwrap_or(0.0) * fq[0]
        })
    }
}

/// One-off convolution; build a [`Convolver`] to reuse the stencil.
pub fn convolve(spec: &KernelSpec, f: &Field) -> Result<Field> {
    Convolver::new(*spec, f.grid())?.apply(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, parity_violation, sample_profile, sup_diff, SeedKind};
    use proptest::prelude::*;

    /// Interior nodes: at least `margin` away from both ends.
    fn interior_sup(f: &Field, g: impl Fn(f64) -> f64, margin: f64) -> f64 {
        let (a, b) = (f.grid().t_min() + margin, f.grid().t_max() - margin);
        (0..f.len()).filter(|&i| f.t(i) >= a && f.t(i) <= b).map(|i| (f.value(i) - g(f.t(i))).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn weight_examples() {
        let km = KernelSpec::half_axis(DEFAULT_WINDOW);
        for t in [-3.0, -1.0, -0.2, 0.0] {
            assert_eq!(kernel_weight(&km, t, 0.0), 0.0);
            assert_eq!(kernel_weight(&km, 0.0, t), 0.0);
        }
        let expected = (1.0 - (-4.0_f64).exp()) / PI.sqrt();
        assert!((kernel_weight(&km, -1.0, -1.0) - expected).abs() < 1e-15);
        assert!((expected - 0.553856).abs() < 1e-6);
        let g = KernelSpec::gauss(DEFAULT_WINDOW);
        for t in [-4.0, 0.0, 2.5] {
            assert!((kernel_weight(&g, t, t) - 1.0 / PI.sqrt()).abs() < 1e-16);
        }
    }

    #[test]
    fn simpson_weights_integrate_cubics() {
        for (a, b, n) in
            [(-1.0, 1.0, 11), (-1.0, 2.0, 16), (-2.0, 1.0, 17), (0.3, 1.9, 8), (-1.5, 0.0, 7), (-1.0, 1.0, 4)]
        {
            let g = make_grid(a, b, n).unwrap();
            let w = simpson_weights(&g);
            let q: f64 = g.nodes().iter().zip(&w).map(|(t, w)| w * (t * t * t - 2.0 * t * t + 1.0)).sum();
            let exact = |t: f64| t.powi(4) / 4.0 - 2.0 * t.powi(3) / 3.0 + t;
            assert!((q - (exact(b) - exact(a))).abs() < 1e-12, "{a} {b} {n}: {q}");
        }
    }

    #[test]
    fn constants_are_preserved() {
        let g = Grid::standard();
        for spec in [
            KernelSpec::gauss(10.0),
            KernelSpec::ferm(0.96, 10.0),
            KernelSpec::ferm(4.0, 10.0),
            KernelSpec::smoothing(10.0),
        ] {
            for c in [1.0, -1.0, 0.3] {
                let out = convolve(&spec, &Field::constant(g, c).unwrap()).unwrap();
                let err = out.values().iter().map(|v| (v - c).abs()).fold(0.0, f64::max);
                assert!(err < 1e-12, "{spec:?} {c}: {err}");
            }
        }
    }

    #[test]
    fn step_maps_to_erf() {
        let g = Grid::standard();
        let step = sample_profile(SeedKind::NegStep.into(), &g);
        let out = convolve(&KernelSpec::gauss(10.0), &step).unwrap();
        assert!(interior_sup(&out, |t| -erf(t), 0.0) < 1e-8);
        let smooth = convolve(&KernelSpec::smoothing(10.0), &step).unwrap();
        assert!(interior_sup(&smooth, |t| -erf(SQRT_2 * t), 0.0) < 1e-8);
    }

    /// Reference value of `int g(t - s) erf(s) ds` by brute-force midpoint
    /// sums on a fine mesh, independent of the production quadrature.
    fn erf_oracle(t: f64) -> f64 {
        let (a, b, m) = (t - 12.0, t + 12.0, 240_000);
        let h = (b - a) / m as f64;
        (0..m)
            .map(|k| {
                let s = a + (k as f64 + 0.5) * h;
                let u = t - s;
                INV_SQRT_PI * (-u * u).exp() * erf(s)
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn erf_convolution_identity() {
        let g = Grid::standard();
        let f = Field::from_fn(g, erf).unwrap();
        let out = convolve(&KernelSpec::gauss(10.0), &f).unwrap();
        assert!(interior_sup(&out, |t| erf(t / SQRT_2), 0.0) < 1e-8);
        for t in [-2.0, -0.37, 0.0, 0.5, 1.3] {
            assert!((erf(t / SQRT_2) - erf_oracle(t)).abs() < 1e-9, "oracle at {t}");
        }
    }

    #[test]
    fn smoothing_twice_is_gauss() {
        let g = Grid::standard();
        let f = Field::from_fn(g, |t| (t * 1.3).tanh() + 0.2 * (-t * t).exp()).unwrap();
        let s = KernelSpec::smoothing(10.0);
        let twice = convolve(&s, &convolve(&s, &f).unwrap()).unwrap();
        let once = convolve(&KernelSpec::gauss(10.0), &f).unwrap();
        assert!(sup_diff(&twice, &once).unwrap() < 1e-8);
    }

    #[test]
    fn ferm_at_zero_q_is_gauss_exactly() {
        let g = Grid::standard();
        let f = Field::from_fn(g, |t| (2.0 * t).sin() * (-0.1 * t * t).exp()).unwrap();
        let a = convolve(&KernelSpec::ferm(0.0, 10.0), &f).unwrap();
        let b = convolve(&KernelSpec::gauss(10.0), &f).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn second_difference_identity() {
        let q2 = 0.7;
        let g = Grid::standard();
        let h = g.spacing();
        let f = Field::from_fn(g, |t| -erf(0.8 * t) + 0.3 * (-t * t).exp() * t.cos()).unwrap();
        let kf = convolve(&KernelSpec::gauss(10.0), &f).unwrap();
        let kqf = convolve(&KernelSpec::ferm(q2, 10.0), &f).unwrap();
        let v = kf.values();
        let worst = (500..1501)
            .map(|i| {
                let d2 = (v[i - 1] - 2.0 * v[i] + v[i + 1]) / (h * h);
                (-q2 * d2 + v[i] - kqf.value(i)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 5.0 * h * h, "{worst}");
    }

    #[test]
    fn odd_inputs_give_exactly_odd_outputs() {
        let g = Grid::standard();
        let f = Field::from_fn(g, |t| (1.7 * t).sin() * (-0.05 * t * t).exp() - 0.4 * t.atan()).unwrap();
        for spec in [KernelSpec::gauss(10.0), KernelSpec::ferm(1.5, 10.0), KernelSpec::smoothing(10.0)] {
            let out = convolve(&spec, &f).unwrap();
            assert_eq!(parity_violation(&out).unwrap(), 0.0);
            assert_eq!(out.value(1000), 0.0);
        }
    }

    #[test]
    fn half_axis_examples() {
        let g = make_grid(-10.0, 0.0, 1001).unwrap();
        let one = Field::constant(g, 1.0).unwrap();
        let out = convolve(&KernelSpec::half_axis(10.0), &one).unwrap();
        assert_eq!(out.value(1000), 0.0);
        for i in 0..1000 {
            let t = out.t(i);
            assert!((out.value(i) + erf(t)).abs() < 1e-9, "{t}");
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let g = Grid::standard();
        let one = Field::constant(g, 1.0).unwrap();
        assert!(convolve(&KernelSpec::gauss(0.0), &one).is_err());
        assert!(convolve(&KernelSpec::gauss(0.001), &one).is_err());
        assert!(convolve(&KernelSpec::ferm(-1.0, 10.0), &one).is_err());
        assert!(matches!(convolve(&KernelSpec::half_axis(10.0), &one), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn auto_window_examples() {
        let d = auto_window(1e-12).unwrap();
        assert!((5.0..=5.3).contains(&d), "{d}");
        assert!(erfc(d) < 1e-12 && erfc(d - 1e-9) >= 1e-12);
        assert!(auto_window(0.5).unwrap() < 1.0);
        assert!(auto_window(1.0).is_err());
        assert!(auto_window(0.0).is_err());
        assert!(auto_window(DEFAULT_TAIL_TOL).unwrap() >= d);
    }

    proptest! {
        #[test]
        fn half_axis_kernel_is_positive(t in -30.0..-1e-6_f64, s in -30.0..-1e-6_f64) {
            let k = kernel_weight(&KernelSpec::half_axis(DEFAULT_WINDOW), t, s);
            // e^{-(t-s)^2} - e^{-(t+s)^2} = e^{-(t+s)^2}(e^{4ts} - 1) underflows only far out.
            prop_assert!(k > 0.0 || (t - s).abs() > 26.0);
        }

        #[test]
        fn auto_window_is_monotone(a in 1e-15..0.9_f64, b in 1e-15..0.9_f64) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(auto_window(lo).unwrap() >= auto_window(hi).unwrap());
        }

        #[test]
        fn convolution_is_linear(
            a in -3.0..3.0_f64,
            b in -3.0..3.0_f64,
            fv in proptest::collection::vec(-2.0..2.0_f64, 41),
            gv in proptest::collection::vec(-2.0..2.0_f64, 41),
        ) {
            let grid = make_grid(-4.0, 4.0, 41).unwrap();
            let f = Field::new(grid, fv).unwrap();
            let g = Field::new(grid, gv).unwrap();
            for spec in [KernelSpec::gauss(3.0), KernelSpec::ferm(0.8, 3.0), KernelSpec::smoothing(3.0)] {
                let lhs = convolve(&spec, &f.axpby(a, &g, b).unwrap()).unwrap();
                let rhs = convolve(&spec, &f).unwrap().axpby(a, &convolve(&spec, &g).unwrap(), b).unwrap();
                prop_assert!(sup_diff(&lhs, &rhs).unwrap() < 1e-12);
            }
        }

        #[test]
        fn half_axis_is_monotone(
            fv in proptest::collection::vec(-2.0..2.0_f64, 31),
            bumps in proptest::collection::vec(0.0..1.0_f64, 31),
        ) {
            let grid = make_grid(-6.0, 0.0, 31).unwrap();
            let spec = KernelSpec::half_axis(6.0);
            let f = Field::new(grid, fv.clone()).unwrap();
            let g = Field::new(grid, fv.iter().zip(&bumps).map(|(v, b)| v + b).collect()).unwrap();
            let (kf, kg) = (convolve(&spec, &f).unwrap(), convolve(&spec, &g).unwrap());
            for i in 0..31 {
                prop_assert!(kf.value(i) <= kg.value(i) + 1e-14);
            }
        }
    }
}
