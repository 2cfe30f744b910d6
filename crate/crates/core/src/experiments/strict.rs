use super::{to_vec, uniform_inputs, Run};
use crate::catalog;
use crate::error::Result;
use crate::io;
use crate::linalg::{vector, Vector};
use crate::operators::root_max_subdiff_domain;
use crate::operators::OperatorDescriptor;
use crate::prox::{BuiltinFunction, DEFAULT_DEPTH};

/// Accuracy of the grid prox behind the sampled check.
const GRID_TOL: f64 = 1e-3;

/// `ran A = {ξ₁ > 0} ∪ {(0, ξ₂) : |ξ₂| ≥ 1}`.
fn in_ran_a(x: &Vector) -> bool {
    x[0] > 0.0 || (x[0] == 0.0 && x[1].abs() >= 1.0)
}

/// `ran(A + A) = 2·ran A`, written out.
fn in_ran_a_plus_a(x: &Vector) -> bool {
    x[0] > 0.0 || (x[0] == 0.0 && x[1].abs() >= 2.0)
}

/// `ran A + ran A = {ξ₁ ≥ 0}`.
fn in_sum_of_ranges(x: &Vector) -> bool {
    x[0] >= 0.0
}

pub(super) fn brezis_haraux_gap(run: &mut Run) -> Result<()> {
    let samples = run.params.usize("samples", 1000)?;
    let half = run.params.f64("half_width", 3.0)?;
    let grid = run.params.usize("grid", 41)?;
    run.params.require("samples", samples > 1, "must be at least 2")?;
    run.params.require("grid", grid > 1, "must be at least 2")?;
    run.params_done()?;
    run.note(format!(
        "f(ξ) = {} on ξ₁ ≥ 0, A = ∂f*; ran A = dom ∂f",
        BuiltinFunction::RootMax.name()
    ));

    let witness = vector(&[0.0, 1.5]);
    run.check_eq("(0, 3/2) ∈ ran A + ran A", true, in_sum_of_ranges(&witness));
    run.check_eq("(0, 3/2) ∈ ran(A + A)", false, in_ran_a_plus_a(&witness));
    let inner = vector(&[1.0, 0.0]);
    run.check_eq(
        "(1, 0) in both sets",
        (true, true),
        (in_sum_of_ranges(&inner), in_ran_a_plus_a(&inner)),
    );
    let (p, q) = (vector(&[0.0, 3.0]), vector(&[0.0, -1.5]));
    run.check_eq(
        "(0, 3/2) = (0, 3) + (0, −3/2) with both summands in ran A",
        (true, true),
        (in_ran_a(&p), in_ran_a(&q)),
    );

    // odd grid sizes put points on the axis ξ₁ = 0
    let mut mismatches = 0;
    for i in 0..grid {
        for j in 0..grid {
            let t = |k: usize| -4.0 + 8.0 * k as f64 / (grid - 1) as f64;
            let x = vector(&[t(i), t(j)]);
            if in_ran_a_plus_a(&x) != in_ran_a(&(&x * 0.5)) {
                mismatches += 1;
            }
        }
    }
    run.check_eq("grid: ran(A + A)(p) = ran A(p/2)", 0, mismatches);

    // sampled: x − J_A x = prox_f(x) ∈ dom ∂f, with the grid prox
    let op = OperatorDescriptor::subdifferential_with_depth(BuiltinFunction::RootMax, 2, DEFAULT_DEPTH)?.inverse();
    let domain = root_max_subdiff_domain();
    let inputs = uniform_inputs(2, samples, half, &mut run.rng(1));
    let ranges = crate::geometry::PointCloud::from_points(
        2,
        inputs.points.iter().map(|x| x - op.resolvent(x).expect("planar")).collect(),
    );
    let misses: Vec<Vec<f64>> = ranges
        .points
        .iter()
        .filter(|p| !domain.contains(p, GRID_TOL))
        .map(to_vec)
        .collect();
    run.check(
        format!("{samples} sampled points of ran ∂f* satisfy the ran-A predicate"),
        0,
        misses.len(),
        Some(GRID_TOL),
        misses.is_empty(),
    );
    let min_first = ranges.points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    run.check(
        "sampled ran ∂f* lies in the closed half-plane ξ₁ ≥ 0",
        format!("≥ −{GRID_TOL:e}"),
        min_first,
        Some(GRID_TOL),
        min_first >= -GRID_TOL,
    );
    let exact = catalog::root_max_conjugate();
    let disagreement = inputs
        .points
        .iter()
        .zip(&ranges.points)
        .map(|(x, p)| (x - exact.resolvent(x).expect("planar") - p).norm())
        .fold(0.0, f64::max);
    run.check_small("grid prox agrees with the bisection prox", disagreement, GRID_TOL);
    run.artifact("ran_conjugate_subdifferential.csv", |p| io::write_cloud_csv(p, &ranges))?;
    Ok(())
}
