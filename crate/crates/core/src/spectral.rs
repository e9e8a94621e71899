//! Characteristic equations of the linearized models.
//!
//! A deviation `e^{i Omega t}` from the vacuum survives linearization when
//!
//! - single equation: `(q^2 Omega^2 + 1) e^{-Omega^2/4} - 3 = 0`,
//! - system: `(q^2 Omega^2 + 1) e^{-Omega^2/2} - e^{-Omega^2/4} - 2 = 0`.
//!
//! Roots with `Im Omega != 0` give decaying oscillations; the smallest `q^2`
//! at which a real root appears is a real double root, found by [`find_q0`].

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{invalid, Error, Result};

const MAX_NEWTON: usize = 100;
const DERIVATIVE_FLOOR: f64 = 1e-14;
const ROOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CharModel {
    Ferm1,
    Ferm2,
}

impl CharModel {
    pub fn name(self) -> &'static str {
        match self {
            CharModel::Ferm1 => "ferm1",
            CharModel::Ferm2 => "ferm2",
        }
    }

    /// `f = sum (c0 + c1 Omega^2) e^{-a Omega^2} + constant`, as
    /// `([(c0, c1, a)], constant)`. Only the first term carries `q^2`.
    fn terms(self, q_squared: f64) -> (Vec<(f64, f64, f64)>, f64) {
        match self {
            CharModel::Ferm1 => (vec![(1.0, q_squared, 0.25)], -3.0),
            CharModel::Ferm2 => (vec![(1.0, q_squared, 0.5), (-1.0, 0.0, 0.25)], -2.0),
        }
    }

    /// Root at `q^2 = 0`: `2i sqrt(ln 3)` and `2i sqrt(ln 2)`.
    pub fn zero_q_root(self) -> Complex64 {
        let x: f64 = match self {
            CharModel::Ferm1 => 3.0,
            CharModel::Ferm2 => 2.0,
        };
        Complex64::new(0.0, 2.0 * x.ln().sqrt())
    }
}

impl fmt::Display for CharModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CharModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ferm1" => Ok(CharModel::Ferm1),
            "ferm2" => Ok(CharModel::Ferm2),
            _ => Err(Error::Parse(format!("unknown characteristic model `{s}` (ferm1, ferm2)"))),
        }
    }
}

pub fn char_value(model: CharModel, omega: Complex64, q_squared: f64) -> Complex64 {
    let z = omega * omega;
    match model {
        CharModel::Ferm1 => (q_squared * z + 1.0) * (-z / 4.0).exp() - 3.0,
        CharModel::Ferm2 => (q_squared * z + 1.0) * (-z / 2.0).exp() - (-z / 4.0).exp() - 2.0,
    }
}

/// `d f / d Omega`.
pub fn char_derivative(model: CharModel, omega: Complex64, q_squared: f64) -> Complex64 {
    let z = omega * omega;
    let (terms, _) = model.terms(q_squared);
    terms.iter().map(|&(c0, c1, a)| omega * (2.0 * c1 - 2.0 * a * c0 - 2.0 * a * c1 * z) * (-a * z).exp()).sum()
}

/// `d^2 f / d Omega^2`.
fn char_second(model: CharModel, omega: Complex64, q_squared: f64) -> Complex64 {
    let z = omega * omega;
    let (terms, _) = model.terms(q_squared);
    terms
        .iter()
        .map(|&(c0, c1, a)| {
            let p = 2.0 * c1 - 2.0 * a * c0 - 2.0 * a * c1 * z;
            (-a * z).exp() * (p - 4.0 * a * c1 * z - 2.0 * a * z * p)
        })
        .sum()
}

/// `d f / d q^2` and `d^2 f / d Omega d q^2` for real `Omega`.
fn q_partials(model: CharModel, omega: f64) -> (f64, f64) {
    let (terms, _) = model.terms(0.0);
    let a = terms[0].2;
    let e = (-a * omega * omega).exp();
    (omega * omega * e, (2.0 * omega - 2.0 * a * omega.powi(3)) * e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexRoot {
    pub omega_re: f64,
    pub omega_im: f64,
    pub residual_abs: f64,
    pub iterations: usize,
}

impl ComplexRoot {
    pub fn omega(&self) -> Complex64 {
        Complex64::new(self.omega_re, self.omega_im)
    }

    pub fn to_json(&self, model: CharModel, q_squared: f64) -> Value {
        json!({
            "model": model.name(),
            "q_squared": q_squared,
            "omega_re": self.omega_re,
            "omega_im": self.omega_im,
            "residual_abs": self.residual_abs,
            "iterations": self.iterations,
        })
    }
}

/// Newton's method on `Omega` from `guess`.
pub fn find_omega(model: CharModel, q_squared: f64, guess: Complex64) -> Result<ComplexRoot> {
    if !guess.re.is_finite() || !guess.im.is_finite() || guess == Complex64::new(0.0, 0.0) {
        return Err(invalid("guess", format!("must be finite and nonzero, got {guess}")));
    }
    if !q_squared.is_finite() {
        return Err(invalid("q_squared", format!("must be finite, got {q_squared}")));
    }
    let mut omega = guess;
    let mut f = char_value(model, omega, q_squared);
    for k in 0..MAX_NEWTON {
        if f.norm() < 1e-14 {
            return Ok(ComplexRoot { omega_re: omega.re, omega_im: omega.im, residual_abs: f.norm(), iterations: k });
        }
        let df = char_derivative(model, omega, q_squared);
        if df.norm() < DERIVATIVE_FLOOR {
            return Err(Error::DegenerateDerivative { re: omega.re, im: omega.im });
        }
        let step = f / df;
        omega -= step;
        f = char_value(model, omega, q_squared);
        if !omega.re.is_finite() || !omega.im.is_finite() {
            break;
        }
        if step.norm() <= 4.0 * f64::EPSILON * omega.norm() && f.norm() < ROOT_TOL {
            return Ok(ComplexRoot {
                omega_re: omega.re,
                omega_im: omega.im,
                residual_abs: f.norm(),
                iterations: k + 1,
            });
        }
    }
    Err(Error::NoConvergence { iterations: MAX_NEWTON, residual: f.norm() })
}

/// Follows the principal root from its closed form at `q^2 = 0` up to
/// `q_squared` in `steps` equal increments. Of the four symmetric roots
/// `+-Omega`, `+-conj(Omega)` the one in the first quadrant is returned.
///
/// On the imaginary axis the two principal roots meet at small `q^2` and
/// leave the axis; a root that is still purely imaginary gets a small real
/// nudge so Newton can follow it off the axis. Past the real double root at
/// `q0^2` the branch is no longer defined and the result is unspecified.
pub fn track_root(model: CharModel, q_squared: f64, steps: usize) -> Result<ComplexRoot> {
    if !(q_squared >= 0.0) || !q_squared.is_finite() {
        return Err(invalid("q_squared", format!("must be finite and >= 0, got {q_squared}")));
    }
    let steps = steps.max(1);
    let mut root = find_omega(model, 0.0, model.zero_q_root())?;
    for k in 1..=steps {
        let q2 = q_squared * k as f64 / steps as f64;
        let mut guess = root.omega();
        if guess.re.abs() < 1e-6 {
            guess.re = 1e-3;
        }
        root = find_omega(model, q2, guess)?;
    }
    // f depends on Omega^2 and is real on the real axis: report the partner
    // in the first quadrant
    root.omega_re = root.omega_re.abs();
    root.omega_im = root.omega_im.abs();
    Ok(root)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleRoot {
    pub q0_squared: f64,
    pub omega0: f64,
    /// `|f|` at the returned point.
    pub residual_abs: f64,
    /// `|d f / d Omega|` at the returned point.
    pub derivative_abs: f64,
    pub iterations: usize,
}

impl DoubleRoot {
    pub fn to_json(&self, model: CharModel) -> Value {
        json!({
            "model": model.name(),
            "q0_squared": self.q0_squared,
            "omega0": self.omega0,
            "residual_abs": self.residual_abs,
            "derivative_abs": self.derivative_abs,
            "iterations": self.iterations,
        })
    }
}

/// Largest value of `f` over real `Omega` in `(0, 6]` and where it occurs.
fn real_peak(model: CharModel, q_squared: f64) -> (f64, f64) {
    (1..=600)
        .map(|k| {
            let w = k as f64 * 0.01;
            (char_value(model, Complex64::new(w, 0.0), q_squared).re, w)
        })
        .fold((f64::NEG_INFINITY, 0.0), |best, cur| if cur.0 > best.0 { cur } else { best })
}

/// Smallest `q^2` with a real root, where `f = d f / d Omega = 0` at a real
/// `Omega > 0`. A scan over `q^2 in (0, 10]` brackets the first `q^2` whose
/// real-axis peak of `f` reaches zero; two-dimensional Newton with the
/// analytic Jacobian then polishes `(Omega, q^2)`.
pub fn find_q0(model: CharModel) -> Result<DoubleRoot> {
    let mut start = None;
    for k in 1..=1000 {
        let q2 = k as f64 * 0.01;
        let (peak, at) = real_peak(model, q2);
        if peak >= 0.0 {
            start = Some((at, q2));
            break;
        }
    }
    let (mut w, mut q2) = start.ok_or(Error::NoConvergence { iterations: 0, residual: f64::NAN })?;
    for k in 0..MAX_NEWTON {
        let om = Complex64::new(w, 0.0);
        let f = char_value(model, om, q2).re;
        let fw = char_derivative(model, om, q2).re;
        if f.abs() < 1e-15 && fw.abs() < 1e-15 {
            return Ok(DoubleRoot {
                q0_squared: q2,
                omega0: w,
                residual_abs: f.abs(),
                derivative_abs: fw.abs(),
                iterations: k,
            });
        }
        let fww = char_second(model, om, q2).re;
        let (fq, fwq) = q_partials(model, w);
        let det = fw * fwq - fq * fww;
        if det.abs() < DERIVATIVE_FLOOR {
            return Err(Error::DegenerateDerivative { re: w, im: 0.0 });
        }
        let dw = (f * fwq - fq * fw) / det;
        let dq = (fw * fw - f * fww) / det;
        w -= dw;
        q2 -= dq;
        if dw.abs() + dq.abs() < 1e-15 * (w.abs() + q2.abs()) {
            let om = Complex64::new(w, 0.0);
            let (f, fw) = (char_value(model, om, q2).re, char_derivative(model, om, q2).re);
            if f.abs() < ROOT_TOL {
                return Ok(DoubleRoot {
                    q0_squared: q2,
                    omega0: w,
                    residual_abs: f.abs(),
                    derivative_abs: fw.abs(),
                    iterations: k + 1,
                });
            }
        }
    }
    Err(Error::NoConvergence { iterations: MAX_NEWTON, residual: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn value_examples() {
        for q2 in [0.0, 0.5, 3.0] {
            assert_eq!(char_value(CharModel::Ferm1, c(0.0, 0.0), q2), c(-2.0, 0.0));
            assert_eq!(char_value(CharModel::Ferm2, c(0.0, 0.0), q2), c(-2.0, 0.0));
        }
        let root = c(0.0, 2.0 * 3.0_f64.ln().sqrt());
        assert!(char_value(CharModel::Ferm1, root, 0.0).norm() < 1e-12);
        assert!(char_value(CharModel::Ferm2, CharModel::Ferm2.zero_q_root(), 0.0).norm() < 1e-12);
    }

    #[test]
    fn newton_from_2i() {
        let r = find_omega(CharModel::Ferm1, 0.0, c(0.0, 2.0)).unwrap();
        assert!(r.omega_re.abs() < 1e-12);
        assert!((r.omega_im - 2.0 * 3.0_f64.ln().sqrt()).abs() < 1e-12);
        assert!((r.omega_im - 2.096_294).abs() < 1e-6);
        assert!(r.residual_abs < 1e-10);
    }

    #[test]
    fn real_root_above_threshold() {
        let r = find_omega(CharModel::Ferm1, 2.5, c(1.0, 0.0)).unwrap();
        assert!(r.omega_im.abs() < 1e-8 && r.residual_abs < 1e-10);
    }

    #[test]
    fn continuation_to_string_value() {
        let r = track_root(CharModel::Ferm1, 0.96, 200).unwrap();
        assert!(r.omega_re.abs() > 1e-3 && r.omega_im.abs() > 1e-3, "{r:?}");
        assert!(r.residual_abs < 1e-10);
    }

    #[test]
    fn derivative_matches_differences() {
        let h = 1e-6;
        for model in [CharModel::Ferm1, CharModel::Ferm2] {
            for w in [c(0.7, 0.3), c(-1.2, 0.9), c(2.0, -0.4)] {
                let fd = (char_value(model, w + h, 1.3) - char_value(model, w - h, 1.3)) / (2.0 * h);
                assert!((fd - char_derivative(model, w, 1.3)).norm() < 1e-7);
                let fd2 = (char_derivative(model, w + h, 1.3) - char_derivative(model, w - h, 1.3)) / (2.0 * h);
                assert!((fd2 - char_second(model, w, 1.3)).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn double_roots() {
        let one = find_q0(CharModel::Ferm1).unwrap();
        assert!((one.q0_squared - 1.77).abs() < 0.02, "{one:?}");
        // f and f' vanish together at Omega^2 = 4 - 1/q^2 with q^2 e^{1/(4 q^2)} = 3e/4
        let z = one.omega0 * one.omega0;
        assert!((z - (4.0 - 1.0 / one.q0_squared)).abs() < 1e-10);
        let g = one.q0_squared * (0.25 / one.q0_squared).exp();
        assert!((g - 0.75 * std::f64::consts::E).abs() < 1e-10);
        let two = find_q0(CharModel::Ferm2).unwrap();
        assert!((two.q0_squared - 3.05).abs() < 0.02, "{two:?}");
        for (m, d) in [(CharModel::Ferm1, one), (CharModel::Ferm2, two)] {
            assert!(d.residual_abs < 1e-10 && d.derivative_abs < 1e-10);
            let above = find_omega(m, d.q0_squared + 0.01, c(d.omega0 + 0.1, 0.0)).unwrap();
            assert!(above.omega_im.abs() < 1e-8);
            let below = find_omega(m, d.q0_squared - 0.01, c(d.omega0, 0.1)).unwrap();
            assert!(below.omega_im.abs() > 1e-3, "{below:?}");
        }
    }

    #[test]
    fn bad_guesses() {
        assert!(find_omega(CharModel::Ferm1, 1.0, c(0.0, 0.0)).is_err());
        assert!(find_omega(CharModel::Ferm1, 1.0, c(f64::NAN, 1.0)).is_err());
        assert!(track_root(CharModel::Ferm1, -1.0, 10).is_err());
    }

    proptest! {
        #[test]
        fn conjugate_and_even_symmetry(re in -3.0..3.0_f64, im in -3.0..3.0_f64, q2 in 0.0..5.0_f64) {
            for m in [CharModel::Ferm1, CharModel::Ferm2] {
                let w = c(re, im);
                let f = char_value(m, w, q2);
                prop_assert!((char_value(m, w.conj(), q2) - f.conj()).norm() <= 1e-12 * (1.0 + f.norm()));
                prop_assert_eq!(char_value(m, -w, q2), f);
            }
        }
    }
}
