//! Uniform grids, sampled fields and the seed profiles the iterations start from.
//!
//! A [`Field`] is a set of node samples on a [`Grid`]. Fields that jump at the
//! origin (the step seed, the two-field iterates) also carry the one-sided
//! limits there as a [`Jump`]; quadrature uses their mean at that node, so the
//! value stored at the node itself can follow whatever convention the model
//! needs without polluting the integrals.

use std::borrow::Cow;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Error function, `2/sqrt(pi) * int_0^x exp(-t^2) dt`.
///
/// Backed by the fdlibm rational approximations (libm), accurate to about one
/// ulp over the whole real line.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function `1 - erf(x)` without cancellation for large x.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Uniform grid `t_min = t_0 < t_1 < ... < t_{n-1} = t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    t_min: f64,
    t_max: f64,
    n_points: usize,
}

/// Builds a uniform grid; see [`Grid::new`].
pub fn make_grid(t_min: f64, t_max: f64, n_points: usize) -> Result<Grid> {
    Grid::new(t_min, t_max, n_points)
}

impl Grid {
    pub fn new(t_min: f64, t_max: f64, n_points: usize) -> Result<Self> {
        if !t_min.is_finite() || !t_max.is_finite() {
            return Err(Error::InvalidGrid(format!("non-finite bounds [{t_min}, {t_max}]")));
        }
        if t_min >= t_max {
            return Err(Error::InvalidGrid(format!("t_min = {t_min} must be below t_max = {t_max}")));
        }
        if n_points < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {n_points}")));
        }
        Ok(Self { t_min, t_max, n_points })
    }

    /// The production grid: `[-10, 10]` with spacing 0.01.
    pub fn standard() -> Self {
        Self { t_min: -10.0, t_max: 10.0, n_points: 2001 }
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        (self.t_max - self.t_min) / (self.n_points - 1) as f64
    }

    /// Node `i`. Computed as a weighted mean of the end points, so symmetric
    /// grids are exactly antisymmetric node by node and the ends are exact.
    pub fn node(&self, i: usize) -> f64 {
        let last = self.n_points - 1;
        if i == 0 {
            return self.t_min;
        }
        if i >= last {
            return self.t_max;
        }
        ((last - i) as f64 * self.t_min + i as f64 * self.t_max) / last as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }

    /// `t_min == -t_max`.
    pub fn is_symmetric(&self) -> bool {
        self.t_min == -self.t_max
    }

    /// Index of the node sitting exactly at `t = 0`, if there is one.
    pub fn origin_index(&self) -> Option<usize> {
        if self.t_min > 0.0 || self.t_max < 0.0 {
            return None;
        }
        let i = (-self.t_min / self.spacing()).round();
        if i < 0.0 || i > (self.n_points - 1) as f64 {
            return None;
        }
        let i = i as usize;
        (self.node(i) == 0.0).then_some(i)
    }

    /// Index of the node at `-t_i`; only meaningful on symmetric grids.
    pub fn mirror_index(&self, i: usize) -> usize {
        self.n_points - 1 - i
    }

    pub(crate) fn require_symmetric(&self) -> Result<()> {
        if self.is_symmetric() {
            Ok(())
        } else {
            Err(Error::AsymmetricGrid { t_min: self.t_min, t_max: self.t_max, n_points: self.n_points })
        }
    }

    /// Same node count on `[t_min * factor, t_max * factor]`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(invalid("factor", format!("must be positive and finite, got {factor}")));
        }
        Self::new(self.t_min * factor, self.t_max * factor, self.n_points)
    }
}

/// One-sided limits of a field at the origin node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub left: f64,
    pub right: f64,
}

impl Jump {
    pub fn mean(&self) -> f64 {
        0.5 * (self.left + self.right)
    }
}

/// Real samples on a grid. All values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    jump: Option<Jump>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::LengthMismatch { expected: grid.n_points(), got: values.len() });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteField { index, value });
        }
        Ok(Self { grid, values, jump: None })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.n_points()])
    }

    /// Attaches one-sided limits at the origin node.
    pub fn with_jump(mut self, left: f64, right: f64) -> Result<Self> {
        if self.grid.origin_index().is_none() {
            return Err(invalid("jump", "grid has no node at t = 0"));
        }
        if !left.is_finite() || !right.is_finite() {
            return Err(invalid("jump", format!("one-sided limits must be finite ({left}, {right})")));
        }
        self.jump = Some(Jump { left, right });
        Ok(self)
    }

    pub fn without_jump(mut self) -> Self {
        self.jump = None;
        self
    }

    pub fn jump(&self) -> Option<Jump> {
        self.jump
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn t(&self, i: usize) -> f64 {
        self.grid.node(i)
    }

    /// Node values as seen by a quadrature rule: at a jump node, the mean of
    /// the one-sided limits replaces the stored sample.
    pub fn quadrature_values(&self) -> Cow<'_, [f64]> {
        match (self.jump, self.grid.origin_index()) {
            (Some(j), Some(i0)) => {
                let mut v = self.values.clone();
                v[i0] = j.mean();
                Cow::Owned(v)
            }
            _ => Cow::Borrowed(&self.values),
        }
    }

    /// Nodewise map; the result is treated as continuous.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Linear combination `a * self + b * other`; one-sided limits combine too.
    pub fn axpby(&self, a: f64, other: &Field, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        let mut out = Self::new(self.grid, values)?;
        if self.jump.is_some() || other.jump.is_some() {
            let i0 = self.grid.origin_index().expect("jump implies an origin node");
            let lim = |f: &Field| f.jump.unwrap_or(Jump { left: f.values[i0], right: f.values[i0] });
            let (p, q) = (lim(self), lim(other));
            out.jump = Some(Jump { left: a * p.left + b * q.left, right: a * p.right + b * q.right });
        }
        Ok(out)
    }

    /// Two-column CSV with a `t,value` header, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(48 * self.len() + 8);
        s.push_str("t,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{:.16e},{:.16e}", self.grid.node(i), v);
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Parses the CSV written by [`Field::to_csv`]; the grid is rebuilt from
    /// the first and last abscissae and checked for uniform spacing.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "t,value" => {}
            other => return Err(Error::Parse(format!("expected header `t,value`, got {other:?}"))),
        }
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for (k, line) in lines.enumerate() {
            let mut cols = line.split(',');
            let mut next = |what| -> Result<f64> {
                let raw = cols.next().ok_or_else(|| Error::Parse(format!("row {k}: missing {what}")))?;
                raw.trim().parse().map_err(|e| Error::Parse(format!("row {k}: bad {what} `{raw}`: {e}")))
            };
            ts.push(next("t")?);
            vs.push(next("value")?);
        }
        let n = ts.len();
        if n < 3 {
            return Err(Error::Parse(format!("need at least 3 rows, got {n}")));
        }
        let grid = Grid::new(ts[0], ts[n - 1], n)?;
        let tol = 1e-9 * grid.spacing().max(1.0);
        if let Some(i) = (0..n).find(|&i| (ts[i] - grid.node(i)).abs() > tol) {
            return Err(Error::Parse(format!("row {i}: abscissa {} is off the uniform grid", ts[i])));
        }
        Field::new(grid, vs)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Shape of the initial iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedKind {
    /// `-eps(t)`, the sign step with `eps(0) = 0`.
    NegStep,
    /// `-(2/pi) atan(t)`.
    NegArctan,
    /// `-erf(t)`.
    NegErf,
}

impl SeedKind {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            SeedKind::NegStep => {
                if t < 0.0 {
                    1.0
                } else if t > 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            SeedKind::NegArctan => -std::f64::consts::FRAC_2_PI * t.atan(),
            SeedKind::NegErf => -erf(t),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SeedKind::NegStep => "neg-step",
            SeedKind::NegArctan => "neg-arctan",
            SeedKind::NegErf => "neg-erf",
        }
    }
}

impl std::str::FromStr for SeedKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neg-step" | "step" => Ok(SeedKind::NegStep),
            "neg-arctan" | "arctan" => Ok(SeedKind::NegArctan),
            "neg-erf" | "erf" => Ok(SeedKind::NegErf),
            _ => Err(Error::Parse(format!("unknown seed `{s}` (neg-step, neg-arctan, neg-erf)"))),
        }
    }
}

/// A seed shape plus the origin convention of the two-field iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedProfile {
    pub kind: SeedKind,
    /// Two-field solver only: `eps(0) = (-1)^n` at iteration n when set,
    /// otherwise the constant `eps(0) = 1`.
    pub alternating_origin: bool,
}

impl SeedProfile {
    pub fn new(kind: SeedKind) -> Self {
        Self { kind, alternating_origin: true }
    }
}

impl Default for SeedProfile {
    fn default() -> Self {
        Self::new(SeedKind::NegStep)
    }
}

impl From<SeedKind> for SeedProfile {
    fn from(kind: SeedKind) -> Self {
        Self::new(kind)
    }
}

/// Samples a seed on `grid`. The step seed records its one-sided limits
/// `(1, -1)` at the origin when the grid has a node there.
pub fn sample_profile(profile: SeedProfile, grid: &Grid) -> Field {
    let kind = profile.kind;
    let field = Field::from_fn(*grid, |t| kind.eval(t)).expect("seed profiles are finite");
    match (kind, grid.origin_index()) {
        (SeedKind::NegStep, Some(_)) => field.with_jump(1.0, -1.0).expect("origin node exists"),
        _ => field,
    }
}

/// `max_i |f_i - g_i|`.
pub fn sup_diff(f: &Field, g: &Field) -> Result<f64> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    Ok(f.values.iter().zip(&g.values).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
}

/// `max_i |f(t_i) + f(-t_i)|` on a symmetric grid.
pub fn parity_violation(f: &Field) -> Result<f64> {
    f.grid.require_symmetric()?;
    let n = f.len();
    Ok((0..n).fold(0.0_f64, |m, i| m.max((f.values[i] + f.values[n - 1 - i]).abs())))
}

/// `max_i |f(t_i) - f(-t_i)|` on a symmetric grid.
pub fn evenness_violation(f: &Field) -> Result<f64> {
    f.grid.require_symmetric()?;
    let n = f.len();
    Ok((0..n).fold(0.0_f64, |m, i| m.max((f.values[i] - f.values[n - 1 - i]).abs())))
}
