//! Small dense linear-algebra helpers on top of `nalgebra`: orthonormal
//! bases of spans, subspace sums and intersections, and a CGLS solver for
//! sparse least-squares problems.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// A point of the ambient space `R^d`.
pub type Vector = DVector<f64>;

/// A total single-valued map on `R^d`, shareable across threads.
pub type Map = std::sync::Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// Relative singular-value cutoff used when a span is computed from data.
pub const RANK_TOL: f64 = 1e-9;

pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vector(entries: &[f64]) -> Vector {
    DVector::from_column_slice(entries)
}

pub fn is_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Orthonormal basis (as columns) of the column space of `m`, from a
/// column-pivoted QR factorization. Columns whose diagonal entry of `R` falls
/// below `rel_tol` times the largest one are discarded.
pub fn orthonormal_columns(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let dim = m.nrows();
    if m.ncols() == 0 || dim == 0 {
        return DMatrix::zeros(dim, 0);
    }
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let rmax = r[(0, 0)].abs();
    if !(rmax > f64::MIN_POSITIVE) {
        return DMatrix::zeros(dim, 0);
    }
    let rank = (0..r.nrows().min(r.ncols()))
        .take_while(|&i| r[(i, i)].abs() > rel_tol * rmax)
        .count();
    qr.q().columns(0, rank).into_owned()
}

/// Minimum-norm least-squares solution of a small dense system, by CGLS on
/// the normal equations.
pub fn dense_lstsq(m: &DMatrix<f64>, b: &Vector) -> Vector {
    let mut x = Vector::zeros(m.ncols());
    let mut r = b.clone();
    let mut s = m.transpose() * &r;
    let mut p = s.clone();
    let s0 = s.norm();
    let mut gamma = s.norm_squared();
    for _ in 0..4 * (m.ncols() + 1) {
        if gamma.sqrt() <= 1e-15 * s0 {
            break;
        }
        let q = m * &p;
        let qq = q.norm_squared();
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &q, 1.0);
        s = m.transpose() * &r;
        let next = s.norm_squared();
        p = &s + (next / gamma) * &p;
        gamma = next;
    }
    x
}

/// Builds an orthonormal basis from row vectors (the JSON convention).
pub fn basis_from_rows(rows: &[Vector], dim: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(dim, rows.len(), |r, c| rows[c][r]);
    orthonormal_columns(&m, RANK_TOL)
}

/// Orthonormal basis of the orthogonal complement of `span(basis)` in `R^dim`.
pub fn complement(basis: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    if basis.ncols() == 0 {
        return DMatrix::identity(dim, dim);
    }
    if basis.ncols() >= dim {
        return DMatrix::zeros(dim, 0);
    }
    let projector = DMatrix::identity(dim, dim) - basis * basis.transpose();
    let q = orthonormal_columns(&projector, 1e-6);
    // one reorthogonalization pass against the basis
    let q = &q - basis * (basis.transpose() * &q);
    orthonormal_columns(&q, 1e-6)
}

/// Orthogonal projection onto `span(basis)` for an orthonormal `basis`.
pub fn project(basis: &DMatrix<f64>, v: &Vector) -> Vector {
    if basis.ncols() == 0 {
        return Vector::zeros(v.len());
    }
    basis * (basis.transpose() * v)
}

pub fn span_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = a.nrows();
    let mut m = DMatrix::zeros(dim, a.ncols() + b.ncols());
    m.columns_mut(0, a.ncols()).copy_from(a);
    m.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    orthonormal_columns(&m, RANK_TOL)
}

/// `span(a) ∩ span(b)` computed as the complement of `a^⊥ + b^⊥`.
pub fn span_intersection(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = a.nrows();
    let perp = span_sum(&complement(a, dim), &complement(b, dim));
    complement(&perp, dim)
}

/// Distance from `v` to `span(basis)`.
pub fn distance_to_span(basis: &DMatrix<f64>, v: &Vector) -> f64 {
    (v - project(basis, v)).norm()
}

/// Orthonormal basis of a uniformly random `k`-dimensional subspace of `R^dim`.
pub fn random_subspace(dim: usize, k: usize, rng: &mut Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, k, |_, _| StandardNormal.sample(rng));
    orthonormal_columns(&g, RANK_TOL)
}

/// A random orthogonal matrix (Q factor of a Gaussian matrix).
pub fn random_orthogonal(dim: usize, rng: &mut Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    g.qr().q()
}

pub fn random_unit(dim: usize, rng: &mut Rng) -> Vector {
    loop {
        let g = Vector::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let n = g.norm();
        if n > 1e-12 {
            return g / n;
        }
    }
}

/// Sparse matrix in coordinate form, enough for matrix-vector products.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn mul(&self, x: &Vector) -> Vector {
        let mut y = Vector::zeros(self.nrows);
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn mul_transpose(&self, x: &Vector) -> Vector {
        let mut y = Vector::zeros(self.ncols);
        for &(r, c, v) in &self.entries {
            y[c] += v * x[r];
        }
        y
    }
}

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: Vector,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Minimum-norm least-squares solution of `M x ≈ b` by CGLS started at zero.
///
/// Stops when the normal-equation residual `‖Mᵀ(b − Mx)‖` drops below
/// `tol · ‖Mᵀb‖`.
pub fn cgls(m: &SparseMatrix, b: &Vector, tol: f64, max_iter: usize) -> LeastSquares {
    let mut x = Vector::zeros(m.ncols);
    let mut r = b.clone();
    let mut s = m.mul_transpose(&r);
    let mut p = s.clone();
    let s0 = s.norm();
    let mut gamma = s.norm_squared();
    let mut iterations = 0;
    while iterations < max_iter && gamma.sqrt() > tol * s0 {
        let q = m.mul(&p);
        let qq = q.norm_squared();
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &q, 1.0);
        s = m.mul_transpose(&r);
        let gamma_next = s.norm_squared();
        p = &s + (gamma_next / gamma) * &p;
        gamma = gamma_next;
        iterations += 1;
    }
    LeastSquares {
        residual_norm: r.norm(),
        solution: x,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_and_intersection_dimensions() {
        let mut rng = seeded_rng(3);
        let u = random_subspace(6, 2, &mut rng);
        let v = random_subspace(6, 3, &mut rng);
        assert_eq!(complement(&u, 6).ncols(), 4);
        assert_eq!(span_sum(&u, &v).ncols(), 5);
        assert_eq!(span_intersection(&u, &v).ncols(), 0);
        let w = span_sum(&u, &v);
        assert_eq!(span_intersection(&w, &v).ncols(), 3);
    }

    #[test]
    fn rank_deficient_columns() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.0, -1.0, 2.0, 0.0]);
        let b = orthonormal_columns(&m, RANK_TOL);
        assert_eq!(b.ncols(), 1);
        let d = distance_to_span(&b, &vector(&[3.0, -3.0]));
        assert!(d < 1e-12);
    }

    #[test]
    fn cgls_solves_square_system() {
        let mut m = SparseMatrix::new(3, 3);
        m.push(0, 0, 2.0);
        m.push(0, 1, 1.0);
        m.push(1, 1, 3.0);
        m.push(2, 2, 1.0);
        m.push(2, 0, -1.0);
        let x = vector(&[1.0, -2.0, 0.5]);
        let b = m.mul(&x);
        let ls = cgls(&m, &b, 1e-14, 100);
        assert!((ls.solution - x).norm() < 1e-10);
    }
}
