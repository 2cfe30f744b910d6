//! Declarative JSON descriptions of operators and operator pairs.
//!
//! ```json
//! {"A": {"kind": "ball", "center": [0, 0], "radius": 1},
//!  "B": {"kind": "shift-outer", "shift": [0, -1],
//!        "inner": {"kind": "affine-subspace", "base-point": [0, 0], "basis": [[1, 0]]}}}
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Vector};
use crate::operators::OperatorDescriptor;
use crate::prox::BuiltinFunction;
use crate::splitting::OperatorPair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OperatorSpec {
    /// Normal cone of a closed ball.
    Ball(BallSpec),
    /// Normal cone of an affine subspace; `basis` lists spanning vectors as rows.
    AffineSubspace(AffineSpec),
    /// A monotone linear map, matrix given row-major.
    Linear(LinearSpec),
    /// Subdifferential of a builtin function, resolvent = prox. With `depth`
    /// the prox is computed by the grid solver instead.
    Prox(ProxSpec),
    /// `T^{-1} − Id` for a builtin firmly nonexpansive `T`.
    Fne(FneSpec),
    Inverse(InnerSpec),
    Vee(InnerSpec),
    ShiftInner(ShiftSpec),
    ShiftOuter(ShiftSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct AffineSpec {
    pub base_point: Vec<f64>,
    #[serde(default)]
    pub basis: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSpec {
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxSpec {
    pub function: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FneMap {
    /// `T = Id`, the zero operator.
    Identity,
    /// `T = Id/2`, the identity operator.
    Half,
    /// `T = 0`, the normal cone of `{0}`.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FneSpec {
    pub map: FneMap,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerSpec {
    pub inner: Box<OperatorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpec {
    pub inner: Box<OperatorSpec>,
    pub shift: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    #[serde(rename = "A")]
    pub a: OperatorSpec,
    #[serde(rename = "B")]
    pub b: OperatorSpec,
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidSpec {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn finite_vector(field: &str, v: &[f64]) -> Result<Vector> {
    if v.is_empty() {
        return Err(invalid(field, "must be a nonempty array"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid(field, "entries must be finite"));
    }
    Ok(Vector::from_column_slice(v))
}

fn positive_dim(field: &str, dim: usize) -> Result<usize> {
    if dim == 0 {
        Err(invalid(field, "dimension must be positive"))
    } else {
        Ok(dim)
    }
}

/// Builds the operator described by `spec`.
pub fn make_operator(spec: &OperatorSpec) -> Result<OperatorDescriptor> {
    match spec {
        OperatorSpec::Ball(s) => {
            let center = finite_vector("center", &s.center)?;
            OperatorDescriptor::normal_cone_ball(center, s.radius)
        }
        OperatorSpec::AffineSubspace(s) => {
            let base = finite_vector("base-point", &s.base_point)?;
            let dim = base.len();
            let mut rows = Vec::with_capacity(s.basis.len());
            for row in &s.basis {
                if row.len() != dim {
                    return Err(invalid(
                        "basis",
                        format!("row of length {} in a space of dimension {dim}", row.len()),
                    ));
                }
                rows.push(finite_vector("basis", row)?);
            }
            let basis = linalg::basis_from_rows(&rows, dim);
            OperatorDescriptor::normal_cone_affine(base, &basis)
        }
        OperatorSpec::Linear(s) => {
            let n = s.matrix.len();
            if n == 0 || s.matrix.iter().any(|r| r.len() != n) {
                return Err(invalid("matrix", "must be a nonempty square array of rows"));
            }
            let m = DMatrix::from_fn(n, n, |r, c| s.matrix[r][c]);
            OperatorDescriptor::linear(m)
        }
        OperatorSpec::Prox(s) => {
            let f: BuiltinFunction = s.function.parse()?;
            let dim = positive_dim("dim", s.dim)?;
            f.check_dim(dim).map_err(|_| invalid("dim", format!("{f} is not defined in dimension {dim}")))?;
            match s.depth {
                None => OperatorDescriptor::subdifferential(f, dim),
                Some(0) => Err(invalid("depth", "must be positive")),
                Some(depth) => OperatorDescriptor::subdifferential_with_depth(f, dim, depth),
            }
        }
        OperatorSpec::Fne(s) => {
            let dim = positive_dim("dim", s.dim)?;
            Ok(match s.map {
                FneMap::Identity => OperatorDescriptor::zero(dim),
                FneMap::Half => OperatorDescriptor::identity(dim),
                FneMap::Zero => OperatorDescriptor::normal_cone_origin(dim),
            })
        }
        OperatorSpec::Inverse(s) => Ok(make_operator(&s.inner)?.inverse()),
        OperatorSpec::Vee(s) => Ok(make_operator(&s.inner)?.vee()),
        OperatorSpec::ShiftInner(s) | OperatorSpec::ShiftOuter(s) => {
            let inner = make_operator(&s.inner)?;
            let w = finite_vector("shift", &s.shift)?;
            check_dim(inner.dim(), w.len()).map_err(|e| invalid("shift", e.to_string()))?;
            if matches!(spec, OperatorSpec::ShiftInner(_)) {
                inner.shift_inner(&w)
            } else {
                inner.shift_outer(&w)
            }
        }
    }
}

pub fn make_pair(spec: &PairSpec) -> Result<OperatorPair> {
    let a = make_operator(&spec.a)?;
    let b = make_operator(&spec.b)?;
    check_dim(a.dim(), b.dim()).map_err(|e| invalid("B", e.to_string()))?;
    OperatorPair::new(a, b)
}

pub fn parse_pair(json: &str) -> Result<PairSpec> {
    Ok(serde_json::from_str(json)?)
}

pub fn load_pair(path: &Path) -> Result<OperatorPair> {
    let text = std::fs::read_to_string(path)?;
    make_pair(&parse_pair(&text)?)
}
