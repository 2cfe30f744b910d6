//! Maximally monotone operators represented by their resolvents.
//!
//! An [`OperatorDescriptor`] never evaluates `A` itself; it carries the total
//! single-valued map `J_A = (Id + A)^{-1}` together with descriptors of
//! `dom A = ran J_A` and `ran A = ran(Id − J_A)`. The transforms `A^{-1}`,
//! `A^∨ = (−Id)∘A∘(−Id)` and the two shifts act on resolvents and rewrite the
//! set descriptors symbolically.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Map, Vector};
use crate::prox::BuiltinFunction;
use crate::sets::{fmt_vec, SetDescriptor};

/// Tolerance on the smallest eigenvalue of `(M + Mᵀ)/2` for linear operators.
pub const MONOTONE_TOL: f64 = 1e-12;
/// Default tolerance for resolvent identities.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub is_3star: bool,
    pub is_linear: bool,
    pub is_subdifferential: bool,
}

#[derive(Clone)]
pub struct OperatorDescriptor {
    dim: usize,
    resolvent: Map,
    domain: SetDescriptor,
    range: SetDescriptor,
    flags: Flags,
    provenance: String,
    matrix: Option<DMatrix<f64>>,
}

impl fmt::Debug for OperatorDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorDescriptor")
            .field("dim", &self.dim)
            .field("provenance", &self.provenance)
            .field("flags", &self.flags)
            .field("domain", &self.domain)
            .field("range", &self.range)
            .finish()
    }
}

impl OperatorDescriptor {
    /// Wraps a resolvent. Nothing about `resolvent` is verified here; the
    /// property checks in [`crate::catalog`] report violations.
    pub fn from_parts(
        dim: usize,
        resolvent: Map,
        domain: SetDescriptor,
        range: SetDescriptor,
        flags: Flags,
        provenance: impl Into<String>,
    ) -> Self {
        assert_eq!(domain.dim(), dim);
        assert_eq!(range.dim(), dim);
        OperatorDescriptor {
            dim,
            resolvent,
            domain,
            range,
            flags,
            provenance: provenance.into(),
            matrix: None,
        }
    }

    /// `N_C` for the ball `C = B(center, radius)`; `J = P_C`.
    pub fn normal_cone_ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() || !linalg::is_finite(&center) {
            return Err(Error::InvalidSpec {
                field: "radius".into(),
                reason: format!("expected a finite positive radius, got {radius}"),
            });
        }
        let dim = center.len();
        let c = center.clone();
        let resolvent: Map = Arc::new(move |x: &Vector| {
            let d = x - &c;
            let n = d.norm();
            if n <= radius {
                x.clone()
            } else {
                &c + d * (radius / n)
            }
        });
        let provenance = format!("N[ball({}, {radius})]", fmt_vec(&center));
        Ok(Self::from_parts(
            dim,
            resolvent,
            SetDescriptor::ball(center, radius),
            SetDescriptor::whole_space(dim),
            Flags {
                is_3star: true,
                is_linear: false,
                is_subdifferential: true,
            },
            provenance,
        ))
    }

    /// `N_V` for the affine subspace `V = base + span(basis)`; `J = P_V`.
    pub fn normal_cone_affine(base: Vector, basis: &DMatrix<f64>) -> Result<Self> {
        check_dim(base.len(), basis.nrows())?;
        let dim = base.len();
        let domain = SetDescriptor::affine(base, basis);
        let (b, q) = domain.affine_basis().expect("affine sets are exact");
        let normal = linalg::complement(&q, dim);
        let bb = b.clone();
        let resolvent: Map = Arc::new(move |x: &Vector| &bb + linalg::project(&q, &(x - &bb)));
        let provenance = format!("N[{} + span(dim {})]", fmt_vec(&b), dim - normal.ncols());
        // N_V is multivalued even for a linear subspace, so it is never flagged linear
        Ok(Self::from_parts(
            dim,
            resolvent,
            domain,
            SetDescriptor::linear_subspace(&normal),
            Flags {
                is_3star: true,
                is_linear: false,
                is_subdifferential: true,
            },
            provenance,
        ))
    }

    pub fn normal_cone_subspace(basis: &DMatrix<f64>) -> Result<Self> {
        Self::normal_cone_affine(Vector::zeros(basis.nrows()), basis)
    }

    /// The linear operator `x ↦ Mx`; `M` must have a positive semidefinite
    /// symmetric part.
    pub fn linear(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || matrix.ncols() != dim {
            return Err(Error::InvalidSpec {
                field: "matrix".into(),
                reason: format!("expected a nonempty square matrix, got {}×{}", matrix.nrows(), matrix.ncols()),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec {
                field: "matrix".into(),
                reason: "entries must be finite".into(),
            });
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let min_eig = sym.clone().symmetric_eigenvalues().min();
        if min_eig < -MONOTONE_TOL * (1.0 + matrix.norm()) {
            return Err(Error::NonMonotone {
                min_eigenvalue: min_eig,
            });
        }
        let lu = (DMatrix::identity(dim, dim) + &matrix).lu();
        let k = lu.try_inverse().expect("Id + M is invertible for monotone M");
        let resolvent: Map = Arc::new(move |x: &Vector| &k * x);
        let range = SetDescriptor::linear_subspace(&matrix);
        let flags = Flags {
            is_3star: linear_is_3star(&matrix, &sym),
            is_linear: true,
            is_subdifferential: symmetric(&matrix),
        };
        let mut op = Self::from_parts(
            dim,
            resolvent,
            SetDescriptor::whole_space(dim),
            range,
            flags,
            format!("linear{}", fmt_matrix(&matrix)),
        );
        op.matrix = Some(matrix);
        Ok(op)
    }

    /// `∂f` for a builtin `f`, whose resolvent is `prox_f`.
    pub fn subdifferential(f: BuiltinFunction, dim: usize) -> Result<Self> {
        f.check_dim(dim)?;
        if f == BuiltinFunction::HalfSqNorm {
            let op = Self::linear(DMatrix::identity(dim, dim))?;
            return Ok(op.relabel(format!("∂{f}")));
        }
        let resolvent: Map = Arc::new(move |x: &Vector| f.prox(x).expect("dimension checked"));
        Self::subdifferential_from(f, dim, resolvent, format!("∂{f}"))
    }

    /// `∂f` with `prox_f` computed by the grid solver at `depth`; accurate to
    /// about `window · 3^-depth`.
    pub fn subdifferential_with_depth(f: BuiltinFunction, dim: usize, depth: usize) -> Result<Self> {
        f.check_dim(dim)?;
        if depth == 0 {
            return Err(Error::InvalidArgument("prox depth must be positive".into()));
        }
        let resolvent: Map = Arc::new(move |x: &Vector| match f.grid_prox(x, depth) {
            Ok(p) => p,
            Err(e) => panic!("prox of {f} failed at {}: {e}", fmt_vec(x)),
        });
        Self::subdifferential_from(f, dim, resolvent, format!("∂{f} [grid depth {depth}]"))
    }

    fn subdifferential_from(f: BuiltinFunction, dim: usize, resolvent: Map, provenance: String) -> Result<Self> {
        let (domain, range) = match f {
            BuiltinFunction::Abs => (SetDescriptor::whole_space(dim), unit_box(dim)),
            BuiltinFunction::RootMax => (root_max_subdiff_domain(), root_max_subdiff_range()),
            BuiltinFunction::HalfSqNorm => (SetDescriptor::whole_space(dim), SetDescriptor::whole_space(dim)),
        };
        Ok(Self::from_parts(
            dim,
            resolvent,
            domain,
            range,
            Flags {
                is_3star: true,
                is_linear: false,
                is_subdifferential: true,
            },
            provenance,
        ))
    }

    /// `A = T^{-1} − Id` for a firmly nonexpansive `T`, so that `J_A = T`.
    ///
    /// Without closed-form sets, `dom A = ran T` and `ran A = ran(Id − T)` are
    /// represented as images of `T` and `Id − T`.
    pub fn from_firmly_nonexpansive(dim: usize, label: impl Into<String>, t: Map) -> Self {
        let label = label.into();
        let t2 = t.clone();
        let complement: Map = Arc::new(move |x: &Vector| x - t2(x));
        Self::from_parts(
            dim,
            t.clone(),
            SetDescriptor::image(dim, format!("ran {label}"), t, None),
            SetDescriptor::image(dim, format!("ran(Id − {label})"), complement, None),
            Flags::default(),
            format!("fne[{label}]"),
        )
    }

    /// The zero operator: `J = Id`.
    pub fn zero(dim: usize) -> Self {
        Self::linear(DMatrix::zeros(dim, dim))
            .expect("zero is monotone")
            .relabel("0")
    }

    /// The identity operator: `J = Id/2`.
    pub fn identity(dim: usize) -> Self {
        Self::linear(DMatrix::identity(dim, dim))
            .expect("Id is monotone")
            .relabel("Id")
    }

    /// `N_{0}`: `J ≡ 0`.
    pub fn normal_cone_origin(dim: usize) -> Self {
        Self::normal_cone_subspace(&DMatrix::zeros(dim, 0))
            .expect("consistent dimensions")
            .relabel("N[{0}]")
    }

    fn relabel(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &SetDescriptor {
        &self.domain
    }

    pub fn range(&self) -> &SetDescriptor {
        &self.range
    }

    pub fn flags(&self) -> Flags {
        self.flags
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// The matrix of a linear operator.
    pub fn matrix(&self) -> Option<&DMatrix<f64>> {
        self.matrix.as_ref()
    }

    pub fn resolvent_map(&self) -> Map {
        self.resolvent.clone()
    }

    /// `J_A x`.
    pub fn resolvent(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        Ok((self.resolvent)(x))
    }

    /// `R_A x = 2 J_A x − x`.
    pub fn reflected_resolvent(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        Ok(self.reflect(x))
    }

    /// `J_A x` without the dimension check.
    #[inline]
    pub(crate) fn apply(&self, x: &Vector) -> Vector {
        debug_assert_eq!(x.len(), self.dim);
        (self.resolvent)(x)
    }

    #[inline]
    pub(crate) fn reflect(&self, x: &Vector) -> Vector {
        let j = self.apply(x);
        j * 2.0 - x
    }

    /// `A^{-1}`, with `J_{A^{-1}} = Id − J_A`.
    pub fn inverse(&self) -> Self {
        let j = self.resolvent.clone();
        let resolvent: Map = Arc::new(move |x: &Vector| x - j(x));
        let matrix = self.matrix.as_ref().and_then(|m| m.clone().try_inverse());
        OperatorDescriptor {
            dim: self.dim,
            resolvent,
            domain: self.range.clone(),
            range: self.domain.clone(),
            flags: Flags {
                is_linear: matrix.is_some(),
                ..self.flags
            },
            provenance: format!("inverse({})", self.provenance),
            matrix,
        }
    }

    /// `A^∨`, with `J_{A^∨} x = −J_A(−x)`.
    pub fn vee(&self) -> Self {
        let j = self.resolvent.clone();
        let resolvent: Map = Arc::new(move |x: &Vector| -j(&-x));
        OperatorDescriptor {
            dim: self.dim,
            resolvent,
            domain: self.domain.negate(),
            range: self.range.negate(),
            flags: self.flags,
            provenance: format!("vee({})", self.provenance),
            matrix: self.matrix.clone(),
        }
    }

    /// `x ↦ A(x − w)`, with resolvent `x ↦ w + J_A(x − w)`.
    pub fn shift_inner(&self, w: &Vector) -> Result<Self> {
        check_dim(self.dim, w.len())?;
        let j = self.resolvent.clone();
        let ww = w.clone();
        let resolvent: Map = Arc::new(move |x: &Vector| &ww + j(&(x - &ww)));
        Ok(OperatorDescriptor {
            dim: self.dim,
            resolvent,
            domain: self.domain.translate(w),
            range: self.range.clone(),
            flags: self.shifted_flags(w),
            provenance: format!("shift_inner({}, {})", self.provenance, fmt_vec(w)),
            matrix: self.shifted_matrix(w),
        })
    }

    /// `x ↦ Ax − w`, with resolvent `x ↦ J_A(x + w)`.
    pub fn shift_outer(&self, w: &Vector) -> Result<Self> {
        check_dim(self.dim, w.len())?;
        let j = self.resolvent.clone();
        let ww = w.clone();
        let resolvent: Map = Arc::new(move |x: &Vector| j(&(x + &ww)));
        Ok(OperatorDescriptor {
            dim: self.dim,
            resolvent,
            domain: self.domain.clone(),
            range: self.range.translate(&-w),
            flags: self.shifted_flags(w),
            provenance: format!("shift_outer({}, {})", self.provenance, fmt_vec(w)),
            matrix: self.shifted_matrix(w),
        })
    }

    fn shifted_flags(&self, w: &Vector) -> Flags {
        Flags {
            is_linear: self.flags.is_linear && w.iter().all(|v| *v == 0.0),
            ..self.flags
        }
    }

    fn shifted_matrix(&self, w: &Vector) -> Option<DMatrix<f64>> {
        if w.iter().all(|v| *v == 0.0) {
            self.matrix.clone()
        } else {
            None
        }
    }
}

pub fn resolvent(op: &OperatorDescriptor, x: &Vector) -> Result<Vector> {
    op.resolvent(x)
}

pub fn reflected_resolvent(op: &OperatorDescriptor, x: &Vector) -> Result<Vector> {
    op.reflected_resolvent(x)
}

pub fn inverse(op: &OperatorDescriptor) -> OperatorDescriptor {
    op.inverse()
}

pub fn vee(op: &OperatorDescriptor) -> OperatorDescriptor {
    op.vee()
}

pub fn shift_inner(op: &OperatorDescriptor, w: &Vector) -> Result<OperatorDescriptor> {
    op.shift_inner(w)
}

pub fn shift_outer(op: &OperatorDescriptor, w: &Vector) -> Result<OperatorDescriptor> {
    op.shift_outer(w)
}

/// A monotone linear `M` is 3* monotone exactly when `ran M ⊆ ran(M + Mᵀ)`.
fn linear_is_3star(m: &DMatrix<f64>, sym: &DMatrix<f64>) -> bool {
    let ran_sym = linalg::orthonormal_columns(sym, 1e-10);
    let scale = m.norm().max(1.0);
    (0..m.ncols()).all(|j| {
        let col: Vector = m.column(j).into_owned();
        linalg::distance_to_span(&ran_sym, &col) <= 1e-9 * scale
    })
}

fn symmetric(m: &DMatrix<f64>) -> bool {
    (m - m.transpose()).amax() <= 1e-14 * m.amax().max(1.0)
}

fn unit_box(dim: usize) -> SetDescriptor {
    SetDescriptor::predicate(
        dim,
        format!("[-1,1]^{dim}"),
        Arc::new(|x: &Vector, tol| x.iter().all(|v| v.abs() <= 1.0 + tol)),
    )
}

/// `dom ∂f = {ξ₁ > 0} ∪ {(0, ξ₂) : |ξ₂| ≥ 1}` for `f = max{1 − √ξ₁, |ξ₂|}`.
///
/// At positive tolerance a point is accepted when `ξ₁ > tol`, or when it lies
/// within `tol` of the two vertical rays; the strip `0 < ξ₁ ≤ tol` belongs to
/// the set as well.
pub fn root_max_subdiff_domain() -> SetDescriptor {
    SetDescriptor::predicate(
        2,
        "{ξ₁ > 0} ∪ {(0, ξ₂) : |ξ₂| ≥ 1}",
        Arc::new(|x: &Vector, tol| {
            x[0] > 0.0 || (x[0] >= -tol && x[0] <= tol && x[1].abs() >= 1.0 - tol)
        }),
    )
}

/// `ran ∂f = {(p, q) : p ≤ 0, |q| ≤ 1}` for `f = max{1 − √ξ₁, |ξ₂|}`.
pub fn root_max_subdiff_range() -> SetDescriptor {
    SetDescriptor::predicate(
        2,
        "{p ≤ 0, |q| ≤ 1}",
        Arc::new(|x: &Vector, tol| x[0] <= tol && x[1].abs() <= 1.0 + tol),
    )
}

fn fmt_matrix(m: &DMatrix<f64>) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|r| {
            let entries: Vec<String> = m.row(r).iter().map(|v| format!("{v}")).collect();
            format!("[{}]", entries.join(","))
        })
        .collect();
    format!("[{}]", rows.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    fn rotation() -> OperatorDescriptor {
        OperatorDescriptor::linear(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])).unwrap()
    }

    #[test]
    fn ball_projection() {
        let a = OperatorDescriptor::normal_cone_ball(Vector::zeros(2), 1.0).unwrap();
        assert_eq!(a.resolvent(&vector(&[2.0, 0.0])).unwrap(), vector(&[1.0, 0.0]));
        assert_eq!(a.resolvent(&vector(&[0.3, 0.0])).unwrap(), vector(&[0.3, 0.0]));
        assert_eq!(a.reflected_resolvent(&vector(&[2.0, 0.0])).unwrap(), vector(&[0.0, 0.0]));
        assert!(a.flags().is_3star);
        assert!(a.resolvent(&vector(&[1.0])).is_err());
    }

    #[test]
    fn rotation_resolvent_and_reflection() {
        let a = rotation();
        let j = a.resolvent(&vector(&[1.0, 1.0])).unwrap();
        assert!((j - vector(&[1.0, 0.0])).norm() < 1e-15);
        let r = a.reflected_resolvent(&vector(&[1.0, 2.0])).unwrap();
        assert!((r - vector(&[2.0, -1.0])).norm() < 1e-15);
        assert!(!a.flags().is_3star);
        let b = OperatorDescriptor::linear(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0])).unwrap();
        assert!(b.flags().is_3star);
    }

    #[test]
    fn non_monotone_matrix_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(matches!(OperatorDescriptor::linear(m), Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn transforms() {
        let a = OperatorDescriptor::normal_cone_ball(vector(&[3.0, 0.0]), 1.0).unwrap();
        let v = a.vee();
        assert_eq!(v.resolvent(&vector(&[-5.0, 0.0])).unwrap(), vector(&[-4.0, 0.0]));
        assert!(v.domain().contains(&vector(&[-3.5, 0.0]), 0.0));
        let unit = OperatorDescriptor::normal_cone_ball(Vector::zeros(2), 1.0).unwrap();
        let s = unit.shift_inner(&vector(&[5.0, 0.0])).unwrap();
        assert_eq!(s.resolvent(&vector(&[7.0, 0.0])).unwrap(), vector(&[6.0, 0.0]));
        let inv = unit.inverse();
        assert_eq!(inv.resolvent(&vector(&[2.0, 0.0])).unwrap(), vector(&[1.0, 0.0]));
        let origin = OperatorDescriptor::zero(2).inverse();
        assert_eq!(origin.resolvent(&vector(&[4.0, -1.0])).unwrap(), Vector::zeros(2));
    }

    #[test]
    fn outer_shift_of_subspace_cone() {
        // N_S + b with S = span(e1) in R^2 and b = (0, 2): J x = P_S(x − b)
        let s = OperatorDescriptor::normal_cone_subspace(&DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let b = vector(&[0.5, 2.0]);
        let shifted = s.shift_outer(&-&b).unwrap();
        let x = vector(&[3.0, 1.0]);
        assert_eq!(shifted.resolvent(&x).unwrap(), vector(&[2.5, 0.0]));
    }

    #[test]
    fn root_max_prox_lands_in_domain() {
        let a = OperatorDescriptor::subdifferential(BuiltinFunction::RootMax, 2).unwrap();
        for x in [[4.0, 0.0], [-3.0, 0.2], [-1.0, 4.0], [0.5, -0.5]] {
            let x = vector(&x);
            let p = a.resolvent(&x).unwrap();
            assert!(a.domain().contains(&p, 1e-6), "{p}");
            assert!(a.range().contains(&(&x - &p), 1e-6), "{}", &x - &p);
        }
    }
}
