//! Builtin convex functions and a derivative-free proximal solver.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::Vector;
use crate::sets::Window;

/// Default refinement depth of [`numeric_prox`]; the final bracket is
/// `3^-18 ≈ 2.6e-9` of the window width.
pub const DEFAULT_DEPTH: usize = 18;
/// Largest dimension accepted by [`numeric_prox`].
pub const MAX_NUMERIC_DIM: usize = 3;

const GRID: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinFunction {
    /// `½‖x‖²`, whose subdifferential is `Id`.
    HalfSqNorm,
    /// `‖x‖₁`.
    Abs,
    /// `max{1 − √ξ₁, |ξ₂|}` on `ξ₁ ≥ 0`, `+∞` elsewhere (planar only).
    RootMax,
}

impl BuiltinFunction {
    pub const ALL: [BuiltinFunction; 3] = [Self::HalfSqNorm, Self::Abs, Self::RootMax];

    pub fn name(self) -> &'static str {
        match self {
            Self::HalfSqNorm => "half-sq-norm",
            Self::Abs => "abs",
            Self::RootMax => "root-max",
        }
    }

    pub fn check_dim(self, dim: usize) -> Result<()> {
        match self {
            Self::RootMax => check_dim(2, dim),
            _ if dim == 0 => Err(Error::InvalidArgument("function dimension must be positive".into())),
            _ => Ok(()),
        }
    }

    /// Function value, `+∞` outside the domain.
    pub fn value(self, x: &Vector) -> f64 {
        self.value_at(x.as_slice())
    }

    fn value_at(self, x: &[f64]) -> f64 {
        match self {
            Self::HalfSqNorm => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            Self::Abs => x.iter().map(|v| v.abs()).sum(),
            Self::RootMax => {
                if x[0] < 0.0 {
                    f64::INFINITY
                } else {
                    (1.0 - x[0].sqrt()).max(x[1].abs())
                }
            }
        }
    }

    pub fn infimum(self) -> f64 {
        0.0
    }

    /// A point of the domain close to `x`, used to bound the prox search.
    fn anchor(self, x: &Vector) -> Vector {
        match self {
            Self::RootMax => {
                let mut y = x.clone();
                y[0] = y[0].max(0.0);
                y
            }
            _ => x.clone(),
        }
    }

    /// Proximal point to rounding accuracy.
    pub fn prox(self, x: &Vector) -> Result<Vector> {
        self.check_dim(x.len())?;
        Ok(match self {
            Self::HalfSqNorm => x / 2.0,
            Self::Abs => x.map(soft_threshold(1.0)),
            Self::RootMax => {
                let (y1, y2) = root_max_prox(x[0], x[1]);
                Vector::from_vec(vec![y1, y2])
            }
        })
    }

    /// `prox_f(x)` by [`numeric_prox`] on an automatically sized window,
    /// widened when the minimizer lands on its boundary.
    pub fn grid_prox(self, x: &Vector, depth: usize) -> Result<Vector> {
        prox_auto(self, x, depth)
    }
}

fn soft_threshold(level: f64) -> impl Fn(f64) -> f64 {
    move |v| v.signum() * (v.abs() - level).max(0.0)
}

/// Prox of `max{1 − √ξ₁, |ξ₂|}` through its saddle form
/// `max_θ min_y θ(1 − √y₁) + (1 − θ)|y₂| + ½‖y − x‖²`.
///
/// For fixed `θ` the inner problem splits: `y₂` is soft thresholding at
/// `1 − θ` and `y₁ = t²` with `t` the positive root of `t³ − x₁t − θ/2`. The
/// derivative of the outer concave function is `1 − t − |y₂|`, nonincreasing
/// in `θ`, so `θ` is found by bisection.
fn root_max_prox(x1: f64, x2: f64) -> (f64, f64) {
    let at = |theta: f64| {
        let t = cubic_root(x1, theta);
        (t, soft_threshold(1.0 - theta)(x2))
    };
    let slope = |theta: f64| {
        let (t, y2) = at(theta);
        1.0 - t - y2.abs()
    };
    let theta = if slope(0.0) <= 0.0 {
        0.0
    } else if slope(1.0) >= 0.0 {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let (t, y2) = at(theta);
    (t * t, y2)
}

/// Nonnegative root of `t³ − a·t − θ/2` for `θ ≥ 0`.
fn cubic_root(a: f64, theta: f64) -> f64 {
    if theta <= 0.0 {
        return a.max(0.0).sqrt();
    }
    // Newton from the right converges monotonically: the cubic is convex and
    // increasing beyond its positive root
    let mut t = 1.0 + a.max(0.0).sqrt() + theta;
    for _ in 0..200 {
        let next = t - (t * t * t - a * t - 0.5 * theta) / (3.0 * t * t - a);
        if !(next < t) {
            break;
        }
        t = next.max(0.0);
    }
    t
}

impl fmt::Display for BuiltinFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half-sq-norm" | "half_sq_norm" => Ok(Self::HalfSqNorm),
            "abs" | "l1" => Ok(Self::Abs),
            "root-max" | "root_max" => Ok(Self::RootMax),
            other => Err(Error::UnknownBuiltin(other.to_string())),
        }
    }
}

/// A window centered at `x` guaranteed to contain `prox_f(x)`.
///
/// For any `y0` in the domain, the prox point `p` satisfies
/// `½‖p − x‖² ≤ f(y0) − inf f + ½‖y0 − x‖²`.
pub fn prox_window(f: BuiltinFunction, x: &Vector) -> Window {
    let y0 = f.anchor(x);
    let r2 = 2.0 * (f.value(&y0) - f.infimum()) + (&y0 - x).norm_squared();
    let half = 1.05 * r2.max(0.0).sqrt() + 1e-3;
    Window::around(x, half)
}

fn prox_auto(f: BuiltinFunction, x: &Vector, depth: usize) -> Result<Vector> {
    validate(f, x, depth)?;
    let mut window = prox_window(f, x);
    let mut attempts = 0;
    loop {
        let (best, exhausted) = grid_prox(f, x, &window, depth)?;
        attempts += 1;
        // the bound above makes exhaustion a rounding artefact; widen a few
        // times and then accept the boundary point
        if exhausted.is_none() || attempts == 4 {
            return Ok(best);
        }
        let half = 0.5 * (window.hi[0] - window.lo[0]);
        window = Window::around(x, 2.0 * half);
    }
}

/// `argmin_y f(y) + ½‖y − x‖²` by nested grid refinement over `window`.
///
/// Each coordinate is bracketed by evaluating seven equally spaced points and
/// keeping the two cells around the best one, so the bracket shrinks by a
/// factor three per level; the objective of each trial value is the minimum
/// over the remaining coordinates, found the same way. Partial minimization
/// of a convex function is convex, so the bracketing is sound on every axis.
/// The cost is `(7·depth)^dim` evaluations.
pub fn numeric_prox(f: BuiltinFunction, x: &Vector, window: &Window, depth: usize) -> Result<Vector> {
    check_dim(x.len(), window.dim())?;
    validate(f, x, depth)?;
    match grid_prox(f, x, window, depth)? {
        (best, None) => Ok(best),
        (_, Some(axis)) => Err(Error::WindowExhausted { axis }),
    }
}

fn validate(f: BuiltinFunction, x: &Vector, depth: usize) -> Result<()> {
    f.check_dim(x.len())?;
    if x.len() > MAX_NUMERIC_DIM {
        return Err(Error::InvalidArgument(format!(
            "numeric prox supports dimension ≤ {MAX_NUMERIC_DIM}, got {}",
            x.len()
        )));
    }
    if depth == 0 {
        return Err(Error::InvalidArgument("prox depth must be positive".into()));
    }
    Ok(())
}

type Point = [f64; MAX_NUMERIC_DIM];

/// Grid minimizer plus the first axis on which it touches the window boundary.
fn grid_prox(f: BuiltinFunction, x: &Vector, window: &Window, depth: usize) -> Result<(Vector, Option<usize>)> {
    let n = x.len();
    let objective = |y: &Point| {
        let y = &y[..n];
        f.value_at(y) + 0.5 * y.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    };
    let mut y = [0.0; MAX_NUMERIC_DIM];
    let (value, best) = minimize_axis(&objective, &mut y, 0, n, window, depth);
    if !value.is_finite() {
        return Err(Error::InvalidArgument("prox objective is infinite on the whole window".into()));
    }
    let best = Vector::from_column_slice(&best[..n]);
    let exhausted = (0..n).find(|&axis| {
        let cell = (window.hi[axis] - window.lo[axis]) / 3f64.powi(depth as i32);
        best[axis] - window.lo[axis] <= cell || window.hi[axis] - best[axis] <= cell
    });
    Ok((best, exhausted))
}

/// Minimizes over coordinates `axis..n` with earlier coordinates of `y` fixed;
/// returns the value and the full minimizing point.
fn minimize_axis(
    objective: &impl Fn(&Point) -> f64,
    y: &mut Point,
    axis: usize,
    n: usize,
    window: &Window,
    depth: usize,
) -> (f64, Point) {
    let last = axis + 1 == n;
    let (mut a, mut b) = (window.lo[axis], window.hi[axis]);
    let mut best = (f64::INFINITY, *y);
    for _ in 0..depth {
        let step = (b - a) / (GRID - 1) as f64;
        let mut level_best = (f64::INFINITY, *y);
        let mut idx = 0;
        for i in 0..GRID {
            y[axis] = if i == GRID - 1 { b } else { a + step * i as f64 };
            let (v, arg) = if last {
                (objective(y), *y)
            } else {
                minimize_axis(objective, y, axis + 1, n, window, depth)
            };
            if v < level_best.0 {
                level_best = (v, arg);
                idx = i;
            }
        }
        if level_best.0 < best.0 || !best.0.is_finite() {
            best = level_best;
        }
        let centre = idx.clamp(1, GRID - 2);
        let lo = a + step * (centre - 1) as f64;
        let hi = a + step * (centre + 1) as f64;
        a = lo;
        b = hi;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    #[test]
    fn closed_forms() {
        let p = BuiltinFunction::HalfSqNorm.prox(&vector(&[2.0, 2.0])).unwrap();
        assert_eq!(p, vector(&[1.0, 1.0]));
        let p = BuiltinFunction::Abs.prox(&vector(&[3.0, -0.5])).unwrap();
        assert_eq!(p, vector(&[2.0, 0.0]));
    }

    #[test]
    fn root_max_prox_matches_grid() {
        let mut rng = crate::linalg::seeded_rng(4);
        let w = Window::cube(2, 5.0);
        for _ in 0..200 {
            let x = w.sample(&mut rng);
            let exact = BuiltinFunction::RootMax.prox(&x).unwrap();
            let grid = BuiltinFunction::RootMax.grid_prox(&x, DEFAULT_DEPTH).unwrap();
            assert!((&exact - &grid).norm() < 1e-5, "{x:?}: {exact:?} vs {grid:?}");
        }
    }

    #[test]
    fn root_max_prox_known_points() {
        // f(4, 0) = 0 is the minimum, so the point is its own prox
        let p = BuiltinFunction::RootMax.prox(&vector(&[4.0, 0.0])).unwrap();
        assert_eq!(p, vector(&[4.0, 0.0]));
        // x = (0.25, 0): the √ branch is active, y₁ = t² with t³ − t/4 − 1/2 = 0
        let p = BuiltinFunction::RootMax.prox(&vector(&[0.25, 0.0])).unwrap();
        let t = p[0].sqrt();
        assert!((t * t * t - 0.25 * t - 0.5).abs() < 1e-12 && p[1] == 0.0);
        // far left: the prox sits on the vertical ray
        let p = BuiltinFunction::RootMax.prox(&vector(&[-50.0, 3.0])).unwrap();
        assert!(p[0] < 1e-3 && p[1] > 1.0);
    }

    #[test]
    fn numeric_matches_closed_forms() {
        let x = vector(&[2.0, 2.0]);
        let p = numeric_prox(BuiltinFunction::HalfSqNorm, &x, &prox_window(BuiltinFunction::HalfSqNorm, &x), DEFAULT_DEPTH).unwrap();
        assert!((p - vector(&[1.0, 1.0])).norm() < 1e-6);
        let x = vector(&[3.0]);
        let p = numeric_prox(BuiltinFunction::Abs, &x, &prox_window(BuiltinFunction::Abs, &x), DEFAULT_DEPTH).unwrap();
        assert!((p[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn small_window_is_reported() {
        let x = vector(&[3.0]);
        let w = Window::new(vec![2.5], vec![2.9]).unwrap();
        assert!(matches!(
            numeric_prox(BuiltinFunction::Abs, &x, &w, 10),
            Err(Error::WindowExhausted { axis: 0 })
        ));
    }

    #[test]
    fn root_max_requires_plane() {
        assert!(BuiltinFunction::RootMax.prox(&vector(&[1.0, 2.0, 3.0])).is_err());
        assert!("nope".parse::<BuiltinFunction>().is_err());
    }
}

