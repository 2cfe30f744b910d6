//! The Douglas–Rachford operator `T = Id − J_A + J_B R_A`, its iteration, and
//! the Attouch–Théra dual pair `(A^{-1}, B^{-∨})`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Map, Vector};
use crate::operators::OperatorDescriptor;

/// An ordered pair `(A, B)` of operators on the same space.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub a: OperatorDescriptor,
    pub b: OperatorDescriptor,
}

impl OperatorPair {
    pub fn new(a: OperatorDescriptor, b: OperatorDescriptor) -> Result<Self> {
        check_dim(a.dim(), b.dim())?;
        Ok(OperatorPair { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// `(B, A)`.
    pub fn swapped(&self) -> Self {
        OperatorPair {
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }

    /// One DR step, returning `(T x, J_A x)`.
    #[inline]
    pub(crate) fn step(&self, x: &Vector) -> (Vector, Vector) {
        let ja = self.a.apply(x);
        let ra = &ja * 2.0 - x;
        let jb = self.b.apply(&ra);
        (x - &ja + jb, ja)
    }

    #[inline]
    pub(crate) fn t(&self, x: &Vector) -> Vector {
        self.step(x).0
    }
}

/// `T_{(A,B)} x = x − J_A x + J_B(2 J_A x − x)`.
pub fn dr_map(pair: &OperatorPair, x: &Vector) -> Result<Vector> {
    check_dim(pair.dim(), x.len())?;
    Ok(pair.t(x))
}

/// The same operator evaluated as `½x + ½ R_B R_A x`; used as a cross-check.
pub fn dr_map_reflected(pair: &OperatorPair, x: &Vector) -> Result<Vector> {
    check_dim(pair.dim(), x.len())?;
    let ra = pair.a.reflect(x);
    let rbra = pair.b.reflect(&ra);
    Ok((x + rbra) * 0.5)
}

/// `(A, B)^* = (A^{-1}, B^{-∨})`.
pub fn attouch_thera_dual(pair: &OperatorPair) -> OperatorPair {
    OperatorPair {
        a: pair.a.inverse(),
        b: pair.b.inverse().vee(),
    }
}

/// `T_2(2T_1 − Id) + Id − T_1` for total maps `T_1`, `T_2`.
pub fn dr_from_firmly_nonexpansive(t1: Map, t2: Map) -> Map {
    Arc::new(move |x: &Vector| {
        let y = t1(x);
        let r = &y * 2.0 - x;
        x - &y + t2(&r)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterOptions {
    pub max_iter: usize,
    /// Early stop once `‖x_n − x_{n+1}‖ < stop_tol` and it changed by less
    /// than `stop_tol` since the previous step. Zero disables early stopping.
    pub stop_tol: f64,
    /// Keep every `stride`-th iterate (plus the last one).
    pub stride: usize,
}

impl IterOptions {
    pub fn new(max_iter: usize, stop_tol: f64) -> Self {
        IterOptions {
            max_iter,
            stop_tol,
            stride: 1,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }
}

/// History of a DR run.
///
/// `governing[k]`, `shadow[k]` and `displacement[k]` belong to iteration
/// `indices[k]`; with stride 1 these are all iterations. The displacement
/// norms are kept for every step regardless of the stride.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DRTrace {
    pub indices: Vec<usize>,
    pub governing: Vec<Vector>,
    pub shadow: Vec<Vector>,
    /// `x_n − x_{n+1}` for the stored `n`; absent for the final iterate.
    pub displacement: Vec<Vector>,
    pub displacement_norms: Vec<f64>,
    /// Number of applications of `T`.
    pub iterations: usize,
    pub stopped_early: bool,
    pub stride: usize,
}

impl DRTrace {
    pub fn last(&self) -> &Vector {
        self.governing.last().expect("a trace holds at least x_0")
    }

    pub fn last_shadow(&self) -> &Vector {
        self.shadow.last().expect("a trace holds at least x_0")
    }

    pub fn last_displacement_norm(&self) -> f64 {
        self.displacement_norms.last().copied().unwrap_or(f64::NAN)
    }

    /// The last stored displacement vector `x_{n−1} − x_n`.
    pub fn last_displacement(&self) -> Option<&Vector> {
        self.displacement.last()
    }
}

pub fn dr_iterate(pair: &OperatorPair, x0: &Vector, max_iter: usize, stop_tol: f64) -> Result<DRTrace> {
    dr_iterate_with(pair, x0, &IterOptions::new(max_iter, stop_tol))
}

pub fn dr_iterate_with(pair: &OperatorPair, x0: &Vector, opts: &IterOptions) -> Result<DRTrace> {
    check_dim(pair.dim(), x0.len())?;
    if opts.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if !linalg::is_finite(x0) {
        return Err(Error::NonFinite { step: 0 });
    }
    let stride = opts.stride.max(1);
    let mut trace = DRTrace {
        indices: Vec::new(),
        governing: Vec::new(),
        shadow: Vec::new(),
        displacement: Vec::new(),
        displacement_norms: Vec::with_capacity(opts.max_iter),
        iterations: 0,
        stopped_early: false,
        stride,
    };
    let mut x = x0.clone();
    let mut previous_norm = 0.0;
    for n in 0..opts.max_iter {
        let (next, shadow) = pair.step(&x);
        if !linalg::is_finite(&next) {
            return Err(Error::NonFinite { step: n + 1 });
        }
        let d = &x - &next;
        let norm = d.norm();
        trace.displacement_norms.push(norm);
        let stop = norm < opts.stop_tol && (norm - previous_norm).abs() < opts.stop_tol;
        let last = stop || n + 1 == opts.max_iter;
        if n % stride == 0 || last {
            trace.indices.push(n);
            trace.governing.push(x);
            trace.shadow.push(shadow);
            trace.displacement.push(d);
        }
        x = next;
        trace.iterations = n + 1;
        previous_norm = norm;
        if stop {
            trace.stopped_early = true;
            break;
        }
    }
    let shadow = pair.a.apply(&x);
    trace.indices.push(trace.iterations);
    trace.governing.push(x);
    trace.shadow.push(shadow);
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;
    use nalgebra::DMatrix;

    fn rotation(sign: f64) -> OperatorDescriptor {
        OperatorDescriptor::linear(DMatrix::from_row_slice(2, 2, &[0.0, -sign, sign, 0.0])).unwrap()
    }

    fn x_axis() -> OperatorDescriptor {
        OperatorDescriptor::normal_cone_subspace(&DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap()
    }

    #[test]
    fn rotation_counterexample_is_identity() {
        let pair = OperatorPair::new(rotation(1.0), rotation(-1.0)).unwrap();
        let x = vector(&[3.0, -2.0]);
        assert!((dr_map(&pair, &x).unwrap() - &x).norm() < 1e-15);
        let trace = dr_iterate(&pair, &x, 10, 1e-12).unwrap();
        assert_eq!(trace.iterations, 1);
        assert!(trace.displacement_norms[0] < 1e-15);
    }

    #[test]
    fn rotation_line_step() {
        let pair = OperatorPair::new(rotation(1.0), x_axis()).unwrap();
        let t = dr_map(&pair, &vector(&[1.0, 0.0])).unwrap();
        // J_A (1,0) = (1,-1)/2, R_A = (0,-1), P_C R_A = 0
        assert!((t - vector(&[0.5, 0.5])).norm() < 1e-15);
        let r = dr_map_reflected(&pair, &vector(&[1.0, 0.0])).unwrap();
        assert!((r - vector(&[0.5, 0.5])).norm() < 1e-15);
    }

    #[test]
    fn disjoint_balls_displacement() {
        let a = OperatorDescriptor::normal_cone_ball(vector(&[0.0, 0.0]), 1.0).unwrap();
        let b = OperatorDescriptor::normal_cone_ball(vector(&[3.0, 0.0]), 1.0).unwrap();
        let pair = OperatorPair::new(a, b).unwrap();
        let trace = dr_iterate_with(&pair, &vector(&[0.3, 0.7]), &IterOptions::new(2000, 1e-12).with_stride(100)).unwrap();
        assert_eq!(trace.iterations, 2000);
        assert!((trace.last_displacement_norm() - 1.0).abs() < 1e-9);
        for w in trace.displacement_norms.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert_eq!(trace.indices.last(), Some(&2000));
    }

    #[test]
    fn dual_of_subspace_pair() {
        let u = x_axis();
        let v = OperatorDescriptor::normal_cone_subspace(&DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).unwrap();
        let pair = OperatorPair::new(u, v).unwrap();
        let dual = attouch_thera_dual(&pair);
        let x = vector(&[0.3, -2.0]);
        // P_{U⊥} = Id − P_U
        assert!((dual.a.resolvent(&x).unwrap() - vector(&[0.0, -2.0])).norm() < 1e-15);
        assert!((dr_map(&dual, &x).unwrap() - dr_map(&pair, &x).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn composed_firmly_nonexpansive_maps() {
        let id: Map = Arc::new(|x: &Vector| x.clone());
        let half: Map = Arc::new(|x: &Vector| x * 0.5);
        let x = vector(&[2.0, -4.0]);
        assert_eq!(dr_from_firmly_nonexpansive(id.clone(), id)(&x), x);
        assert_eq!(dr_from_firmly_nonexpansive(half.clone(), half)(&x), &x * 0.5);
    }

    #[test]
    fn rejects_zero_iterations() {
        let pair = OperatorPair::new(x_axis(), x_axis()).unwrap();
        assert!(dr_iterate(&pair, &vector(&[1.0, 1.0]), 0, 1e-9).is_err());
        assert!(dr_map(&pair, &vector(&[1.0])).is_err());
    }
}
