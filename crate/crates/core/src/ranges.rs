//! Ranges of `Id − T` and `T`, the sets `D = dom A − dom B` and
//! `R = ran A + ran B`, the perturbed problem `Z_w`, and estimation of the
//! infimal displacement vector.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{PointCloud, DEFAULT_SET_TOL};
use crate::linalg::{self, Rng, Vector};
use crate::sets::{SetDescriptor, Window};
use crate::splitting::{dr_iterate_with, IterOptions, OperatorPair};

/// Largest number of sampled Minkowski combinations.
pub const MINKOWSKI_CAP: usize = 100_000;
/// Fraction of the run inspected by the infeasibility rule.
pub const TAIL_FRACTION: f64 = 0.1;
/// Largest relative spread `(max − min)/max` of the tail displacement norms
/// still read as stabilized.
pub const STABLE_SPREAD: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct PairSets {
    /// `dom A − dom B`.
    pub d: SetDescriptor,
    /// `ran A + ran B`.
    pub r: SetDescriptor,
    /// `dom A − ran B`.
    pub d_dual: SetDescriptor,
    /// `ran A + dom B`.
    pub r_dual: SetDescriptor,
}

impl PairSets {
    /// `D ∩ R`.
    pub fn d_cap_r(&self) -> SetDescriptor {
        self.d.intersect(&self.r)
    }

    /// `(dom A − ran B) ∩ (ran A + dom B)`.
    pub fn dual_cap(&self) -> SetDescriptor {
        self.d_dual.intersect(&self.r_dual)
    }
}

/// Builds `D`, `R` and their dual counterparts. Exact descriptors are kept
/// whenever both factors are closed-form tubes (or one is the whole space);
/// otherwise the Minkowski combination is sampled from `samples` points of
/// each factor, all pairs up to [`MINKOWSKI_CAP`], deduplicated on a grid of
/// pitch `tol/10` with the factor points kept as witnesses.
pub fn build_pair_sets(pair: &OperatorPair, samples: usize, window: &Window, seed: u64) -> Result<PairSets> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    check_dim(pair.dim(), window.dim())?;
    let mut rng = linalg::seeded_rng(seed);
    let (a, b) = (&pair.a, &pair.b);
    Ok(PairSets {
        d: minkowski(a.domain(), b.domain(), -1.0, samples, window, &mut rng)?,
        r: minkowski(a.range(), b.range(), 1.0, samples, window, &mut rng)?,
        d_dual: minkowski(a.domain(), b.range(), -1.0, samples, window, &mut rng)?,
        r_dual: minkowski(a.range(), b.domain(), 1.0, samples, window, &mut rng)?,
    })
}

fn minkowski(
    p: &SetDescriptor,
    q: &SetDescriptor,
    sign: f64,
    samples: usize,
    window: &Window,
    rng: &mut Rng,
) -> Result<SetDescriptor> {
    if let Some(exact) = p.exact_minkowski(q, sign) {
        return Ok(exact);
    }
    let cp = p.sample(samples, window, rng);
    let cq = q.sample(samples, window, rng);
    if cp.is_empty() || cq.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let total = cp.len() * cq.len();
    let mut points = Vec::with_capacity(total.min(MINKOWSKI_CAP));
    let mut witnesses = Vec::with_capacity(total.min(MINKOWSKI_CAP));
    let mut push = |i: usize, j: usize| {
        points.push(&cp.points[i] + &cq.points[j] * sign);
        witnesses.push(vec![cp.points[i].clone(), cq.points[j].clone()]);
    };
    if total <= MINKOWSKI_CAP {
        for i in 0..cp.len() {
            for j in 0..cq.len() {
                push(i, j);
            }
        }
    } else {
        use rand::RngExt;
        for _ in 0..MINKOWSKI_CAP {
            push(rng.random_range(0..cp.len()), rng.random_range(0..cq.len()));
        }
    }
    let pitch = DEFAULT_SET_TOL / 10.0;
    let cloud = PointCloud::with_witnesses(p.dim(), points, witnesses).dedup(pitch);
    let op = if sign < 0.0 { "−" } else { "+" };
    Ok(SetDescriptor::cloud(cloud, pitch).with_label(format!("({}) {op} ({}) [sampled]", p.label(), q.label())))
}

/// `{x − T x}` over the inputs, each output witnessed by its input.
pub fn sample_displacement_range(pair: &OperatorPair, inputs: &PointCloud) -> Result<PointCloud> {
    sample_with(pair, inputs, |x, tx| x - tx)
}

/// `{T x}` over the inputs, each output witnessed by its input.
pub fn sample_t_range(pair: &OperatorPair, inputs: &PointCloud) -> Result<PointCloud> {
    sample_with(pair, inputs, |_, tx| tx)
}

fn sample_with(pair: &OperatorPair, inputs: &PointCloud, f: impl Fn(&Vector, Vector) -> Vector) -> Result<PointCloud> {
    if inputs.is_empty() {
        return Err(Error::EmptyCloud);
    }
    check_dim(pair.dim(), inputs.dim)?;
    let points = inputs.points.iter().map(|x| f(x, pair.t(x))).collect();
    let witnesses = inputs.points.iter().map(|x| vec![x.clone()]).collect();
    Ok(PointCloud::with_witnesses(inputs.dim, points, witnesses))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Solved,
    Unsolved,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedVerdict {
    pub status: Status,
    pub witness: Option<Vec<f64>>,
    pub residual: f64,
    pub limiting_displacement_norm: f64,
    pub iterations: usize,
}

/// Decides whether `Z_w = {x : w ∈ Ax + B(x − w)}` is nonempty by running DR
/// on `(A − w, B(· − w))`.
///
/// * SOLVED: the residual `‖x_n − x_{n+1}‖ = ‖J x_n − J' R x_n‖` reached `tol`;
///   the witness is the shadow `J_{A−w} x_n`.
/// * UNSOLVED: over the last tenth of the run every displacement norm stayed
///   above `tol` with relative spread at most [`STABLE_SPREAD`].
/// * INCONCLUSIVE otherwise.
pub fn solve_perturbed(pair: &OperatorPair, w: &Vector, x0: &Vector, tol: f64, max_iter: usize) -> Result<PerturbedVerdict> {
    check_dim(pair.dim(), w.len())?;
    let shifted = OperatorPair::new(pair.a.shift_outer(w)?, pair.b.shift_inner(w)?)?;
    solve_zero(&shifted, x0, tol, max_iter)
}

/// Decides `y ∈ ran(A + B)` by finding a zero of `A + (B − y)`; the witness
/// `x` satisfies `y ∈ Ax + Bx` up to the residual.
pub fn sum_range_membership(pair: &OperatorPair, y: &Vector, x0: &Vector, tol: f64, max_iter: usize) -> Result<PerturbedVerdict> {
    check_dim(pair.dim(), y.len())?;
    let shifted = OperatorPair::new(pair.a.clone(), pair.b.shift_outer(y)?)?;
    solve_zero(&shifted, x0, tol, max_iter)
}

fn solve_zero(pair: &OperatorPair, x0: &Vector, tol: f64, max_iter: usize) -> Result<PerturbedVerdict> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let opts = IterOptions::new(max_iter, tol).with_stride(max_iter);
    let trace = dr_iterate_with(pair, x0, &opts)?;
    let norms = &trace.displacement_norms;
    let residual = trace.last_displacement_norm();
    // the shadow of the iterate whose step produced the residual
    let n = trace.displacement.len() - 1;
    let status = if residual <= tol {
        Status::Solved
    } else if stabilized_above(norms, tol) {
        Status::Unsolved
    } else {
        Status::Inconclusive
    };
    Ok(PerturbedVerdict {
        status,
        witness: (status == Status::Solved).then(|| trace.shadow[n].iter().copied().collect()),
        residual,
        limiting_displacement_norm: residual,
        iterations: trace.iterations,
    })
}

fn stabilized_above(norms: &[f64], tol: f64) -> bool {
    let k = ((norms.len() as f64 * TAIL_FRACTION).ceil() as usize).max(1);
    let tail = &norms[norms.len() - k..];
    let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    min > tol && (max - min) <= STABLE_SPREAD * max
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    TailDisplacement,
    Cesaro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementEstimate {
    /// The tail-displacement estimate `x_{n−1} − x_n`.
    pub v: Vec<f64>,
    pub method: Estimator,
    /// `(x_0 − x_n)/n`.
    pub v_cesaro: Vec<f64>,
    pub iterations: usize,
    /// `‖v_tail − v_cesaro‖`.
    pub agreement_gap: f64,
    /// Set when the gap exceeds ten times the requested tolerance.
    pub slow_convergence: bool,
}

impl DisplacementEstimate {
    pub fn vector(&self) -> Vector {
        Vector::from_vec(self.v.clone())
    }

    pub fn cesaro_vector(&self) -> Vector {
        Vector::from_vec(self.v_cesaro.clone())
    }
}

/// Default tolerance behind the slow-convergence flag.
pub const ESTIMATE_TOL: f64 = 1e-3;

pub fn estimate_displacement_vector(pair: &OperatorPair, x0: &Vector, max_iter: usize) -> Result<DisplacementEstimate> {
    estimate_displacement_vector_with(pair, x0, max_iter, ESTIMATE_TOL)
}

/// Runs exactly `max_iter` DR steps and returns both limits of a
/// nonexpansive iteration: the last displacement and the Cesàro mean.
pub fn estimate_displacement_vector_with(
    pair: &OperatorPair,
    x0: &Vector,
    max_iter: usize,
    tol: f64,
) -> Result<DisplacementEstimate> {
    if max_iter < 100 {
        return Err(Error::InvalidArgument(format!("max_iter must be at least 100, got {max_iter}")));
    }
    let opts = IterOptions::new(max_iter, 0.0).with_stride(max_iter);
    let trace = dr_iterate_with(pair, x0, &opts)?;
    let tail = trace.last_displacement().expect("at least one step").clone();
    let cesaro = (x0 - trace.last()) / trace.iterations as f64;
    let gap = (&tail - &cesaro).norm();
    Ok(DisplacementEstimate {
        v: tail.iter().copied().collect(),
        method: Estimator::TailDisplacement,
        v_cesaro: cesaro.iter().copied().collect(),
        iterations: trace.iterations,
        agreement_gap: gap,
        slow_convergence: gap > 10.0 * tol,
    })
}
