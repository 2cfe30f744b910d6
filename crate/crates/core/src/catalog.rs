//! Named operators and pairs used by the experiments and property checks,
//! together with the checks themselves.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::linalg::{self, vector, Rng, Vector};
use crate::operators::OperatorDescriptor;
use crate::prox::BuiltinFunction;
use crate::sets::{Window, MEMBERSHIP_TOL};
use crate::splitting::{attouch_thera_dual, OperatorPair};

#[derive(Debug, Clone)]
pub struct CatalogOperator {
    pub name: &'static str,
    pub op: OperatorDescriptor,
}

#[derive(Debug, Clone)]
pub struct CatalogPair {
    pub name: &'static str,
    pub pair: OperatorPair,
}

pub fn rotation() -> OperatorDescriptor {
    OperatorDescriptor::linear(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])).expect("skew")
}

pub fn neg_rotation() -> OperatorDescriptor {
    OperatorDescriptor::linear(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).expect("skew")
}

/// `[[1, 1], [−1, 1]]`: monotone, 3*, not symmetric.
pub fn skew_monotone() -> OperatorDescriptor {
    OperatorDescriptor::linear(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0])).expect("monotone")
}

pub fn ball(center: &[f64], radius: f64) -> OperatorDescriptor {
    OperatorDescriptor::normal_cone_ball(vector(center), radius).expect("positive radius")
}

/// `N_V` for the line `base + R·direction` in the plane.
pub fn line(base: &[f64], direction: &[f64]) -> OperatorDescriptor {
    OperatorDescriptor::normal_cone_affine(vector(base), &DMatrix::from_column_slice(2, 1, direction)).expect("planar line")
}

pub fn x_axis() -> OperatorDescriptor {
    line(&[0.0, 0.0], &[1.0, 0.0])
}

/// `x ↦ diag(0, 1) x + (1, 0)`: full domain, range the line `{(1, s)}`.
pub fn affine_full_domain() -> OperatorDescriptor {
    OperatorDescriptor::linear(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]))
        .expect("psd")
        .shift_outer(&vector(&[-1.0, 0.0]))
        .expect("planar")
}

/// `A = N_{S+a}` and `B = N_S + b` in `R⁴` with `S = span(e1, e2)`,
/// `a = sin θ·e3` and `b = cos θ·e1`.
pub fn angle_pair(theta: f64) -> OperatorPair {
    let s = DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    let a = vector(&[0.0, 0.0, theta.sin(), 0.0]);
    let b = vector(&[theta.cos(), 0.0, 0.0, 0.0]);
    let op_a = OperatorDescriptor::normal_cone_affine(a, &s).expect("consistent dims");
    let op_b = OperatorDescriptor::normal_cone_subspace(&s)
        .expect("consistent dims")
        .shift_outer(&-b)
        .expect("consistent dims");
    OperatorPair::new(op_a, op_b).expect("same dimension")
}

/// Random subspaces `U`, `V` of `R^dim` and the pair `(N_U, N_V)`. With
/// `shared > 0` the subspaces contain a common random subspace of that
/// dimension.
pub fn subspace_pair(dim: usize, dim_u: usize, dim_v: usize, shared: usize, rng: &mut Rng) -> (DMatrix<f64>, DMatrix<f64>, OperatorPair) {
    assert!(shared <= dim_u.min(dim_v) && dim_u + dim_v - shared <= dim);
    let q = linalg::random_orthogonal(dim, rng);
    let common = q.columns(0, shared).into_owned();
    let rest = q.columns(shared, dim - shared).into_owned();
    // rotate the remaining directions so that U and V are in general position
    let mix = linalg::random_orthogonal(dim - shared, rng);
    let rest_v = &rest * &mix;
    let u = linalg::span_sum(&common, &rest.columns(0, dim_u - shared).into_owned());
    let v = linalg::span_sum(&common, &rest_v.columns(0, dim_v - shared).into_owned());
    let pair = OperatorPair::new(
        OperatorDescriptor::normal_cone_subspace(&u).expect("dims"),
        OperatorDescriptor::normal_cone_subspace(&v).expect("dims"),
    )
    .expect("same dimension");
    (u, v, pair)
}

pub fn root_max() -> OperatorDescriptor {
    OperatorDescriptor::subdifferential(BuiltinFunction::RootMax, 2).expect("planar")
}

/// `∂f*` for the root-max function, realized as the inverse of `∂f`.
pub fn root_max_conjugate() -> OperatorDescriptor {
    root_max().inverse()
}

pub fn operator_catalog() -> Vec<CatalogOperator> {
    let exact = |name, op| CatalogOperator { name, op };
    let psd3 = OperatorDescriptor::linear(DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0])).expect("monotone");
    let plane4 = OperatorDescriptor::normal_cone_affine(
        vector(&[0.0, 0.0, 0.5, -1.0]),
        &DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0]),
    )
    .expect("dims");
    vec![
        exact("ball", ball(&[0.0, 0.0], 1.0)),
        exact("ball_offset", ball(&[3.0, 0.0], 1.0)),
        exact("line", line(&[0.0, 2.0], &[1.0, 0.0])),
        exact("x_axis", x_axis()),
        exact("rotation", rotation()),
        exact("skew_monotone", skew_monotone()),
        exact("identity", OperatorDescriptor::identity(2)),
        exact("zero", OperatorDescriptor::zero(2)),
        exact("origin_cone", OperatorDescriptor::normal_cone_origin(2)),
        exact("abs", OperatorDescriptor::subdifferential(BuiltinFunction::Abs, 2).expect("abs")),
        exact("half_sq_norm", OperatorDescriptor::subdifferential(BuiltinFunction::HalfSqNorm, 2).expect("quadratic")),
        exact("psd_3d", psd3),
        exact("plane_4d", plane4),
        exact("inverse_ball", ball(&[0.0, 0.0], 1.0).inverse()),
        exact("inverse_skew", skew_monotone().inverse()),
        exact("vee_ball_offset", ball(&[3.0, 0.0], 1.0).vee()),
        exact("vee_inverse_line", line(&[0.0, 2.0], &[1.0, 1.0]).inverse().vee()),
        exact("shift_inner_ball", ball(&[0.0, 0.0], 1.0).shift_inner(&vector(&[5.0, 0.0])).expect("dims")),
        exact("shift_outer_axis", x_axis().shift_outer(&vector(&[0.5, -2.0])).expect("dims")),
        exact("affine_full_domain", affine_full_domain()),
        exact("root_max", root_max()),
        exact("root_max_conjugate", root_max_conjugate()),
    ]
}

pub fn pair_catalog() -> Vec<CatalogPair> {
    let exact = |name, a, b| CatalogPair {
        name,
        pair: OperatorPair::new(a, b).expect("same dimension"),
    };
    let mut rng = linalg::seeded_rng(11);
    let (_, _, subspaces) = subspace_pair(6, 2, 3, 0, &mut rng);
    vec![
        exact("rotation_counterexample", rotation(), neg_rotation()),
        exact("rotation_line", rotation(), x_axis()),
        exact("disjoint_balls", ball(&[0.0, 0.0], 1.0), ball(&[3.0, 0.0], 1.0)),
        exact("overlapping_balls", ball(&[0.0, 0.0], 1.0), ball(&[1.0, 0.0], 1.0)),
        exact("ball_line", ball(&[0.0, 0.0], 1.0), line(&[0.0, 2.0], &[1.0, 0.0])),
        exact("ball_skew", ball(&[0.0, 0.0], 1.0), skew_monotone()),
        exact("ball_identity", ball(&[0.0, 0.0], 1.0), OperatorDescriptor::identity(2)),
        exact("rotation_ball", rotation(), ball(&[0.0, 0.0], 1.0)),
        exact("full_domain", line(&[0.0, 1.0], &[1.0, 0.0]), affine_full_domain()),
        exact("abs_ball", OperatorDescriptor::subdifferential(BuiltinFunction::Abs, 2).expect("abs"), ball(&[3.0, 0.0], 1.0)),
        CatalogPair {
            name: "subspaces_r6",
            pair: subspaces,
        },
        CatalogPair {
            name: "angle_pi_4",
            pair: angle_pair(std::f64::consts::FRAC_PI_4),
        },
        CatalogPair {
            name: "root_max_conjugate_twice",
            pair: OperatorPair::new(root_max_conjugate(), root_max_conjugate()).expect("planar"),
        },
    ]
}

pub fn named_pair(name: &str) -> Option<CatalogPair> {
    pair_catalog().into_iter().find(|p| p.name == name)
}

/// Random points of the cube `[−half, half]^dim`.
pub fn random_points(dim: usize, count: usize, half: f64, rng: &mut Rng) -> Vec<Vector> {
    let w = Window::cube(dim, half);
    (0..count).map(|_| w.sample(rng)).collect()
}

/// Largest violation of `‖Jx − Jy‖² + ‖(Id − J)x − (Id − J)y‖² ≤ ‖x − y‖²`
/// over consecutive pairs of `points`.
pub fn firm_nonexpansiveness_violation(j: &dyn Fn(&Vector) -> Vector, points: &[Vector]) -> f64 {
    let images: Vec<Vector> = points.iter().map(j).collect();
    let mut worst = f64::NEG_INFINITY;
    for k in 0..points.len().saturating_sub(1) {
        let (x, y) = (&points[k], &points[k + 1]);
        let (jx, jy) = (&images[k], &images[k + 1]);
        let dj = jx - jy;
        let dc = (x - jx) - (y - jy);
        worst = worst.max(dj.norm_squared() + dc.norm_squared() - (x - y).norm_squared());
    }
    worst
}

/// Smallest `⟨J x − J y, (x − J x) − (y − J y)⟩` over consecutive pairs.
pub fn graph_monotonicity(op: &OperatorDescriptor, points: &[Vector]) -> f64 {
    let images: Vec<Vector> = points.iter().map(|x| op.apply(x)).collect();
    let mut worst = f64::INFINITY;
    for k in 0..points.len().saturating_sub(1) {
        let (x, y) = (&points[k], &points[k + 1]);
        let (jx, jy) = (&images[k], &images[k + 1]);
        worst = worst.min((jx - jy).dot(&((x - jx) - (y - jy))));
    }
    worst
}

/// Largest `‖J_A x + J_{A^{-1}} x − x‖`.
pub fn inverse_identity_error(op: &OperatorDescriptor, points: &[Vector]) -> f64 {
    let inv = op.inverse();
    points
        .iter()
        .map(|x| (op.apply(x) + inv.apply(x) - x).norm())
        .fold(0.0, f64::max)
}

/// Largest `‖J_{(A^{-1})^∨} x − J_{(A^∨)^{-1}} x‖`.
pub fn vee_inverse_commutation_error(op: &OperatorDescriptor, points: &[Vector]) -> f64 {
    let a = op.inverse().vee();
    let b = op.vee().inverse();
    points.iter().map(|x| (a.apply(x) - b.apply(x)).norm()).fold(0.0, f64::max)
}

/// Number of points whose Minty pair `(J x, x − J x)` misses the domain or
/// range descriptor at tolerance `tol`.
pub fn minty_failures(op: &OperatorDescriptor, points: &[Vector], tol: f64) -> usize {
    points
        .iter()
        .filter(|x| {
            let j = op.apply(x);
            let c = *x - &j;
            !(op.domain().contains(&j, tol) && op.range().contains(&c, tol))
        })
        .count()
}

pub fn default_minty_tol() -> f64 {
    MEMBERSHIP_TOL
}

/// Largest `‖T_{(A,B)} x − T_{(A^{-1}, B^{-∨})} x‖`.
pub fn self_duality_error(pair: &OperatorPair, points: &[Vector]) -> f64 {
    let dual = attouch_thera_dual(pair);
    points.iter().map(|x| (pair.t(x) - dual.t(x)).norm()).fold(0.0, f64::max)
}

/// Largest `‖T_{(A,B)} x + T_{(A,B^{-1})} x − x‖`.
pub fn inverse_pair_error(pair: &OperatorPair, points: &[Vector]) -> f64 {
    let other = OperatorPair::new(pair.a.clone(), pair.b.inverse()).expect("same dimension");
    points
        .iter()
        .map(|x| (pair.t(x) + other.t(x) - x).norm())
        .fold(0.0, f64::max)
}

/// Largest gap between the two evaluation forms of `T`.
pub fn reflected_form_error(pair: &OperatorPair, points: &[Vector]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in points {
        let a = crate::splitting::dr_map(pair, x)?;
        let b = crate::splitting::dr_map_reflected(pair, x)?;
        worst = worst.max((a - b).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogs_build() {
        assert!(operator_catalog().len() >= 20);
        let pairs = pair_catalog();
        assert!(pairs.iter().any(|p| p.name == "disjoint_balls"));
        assert!(named_pair("angle_pi_4").is_some());
    }

    #[test]
    fn shared_subspaces_intersect() {
        let mut rng = linalg::seeded_rng(1);
        let (u, v, _) = subspace_pair(6, 2, 3, 1, &mut rng);
        assert_eq!(linalg::span_intersection(&u, &v).ncols(), 1);
        let (u, v, _) = subspace_pair(6, 2, 3, 0, &mut rng);
        assert_eq!(linalg::span_intersection(&u, &v).ncols(), 0);
    }
}
