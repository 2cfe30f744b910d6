use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{to_vec, uniform_inputs, Run};
use crate::catalog;
use crate::error::Result;
use crate::linalg::{self, vector, SparseMatrix, Vector};
use crate::operators::OperatorDescriptor;
use crate::ranges::{estimate_displacement_vector, sample_displacement_range, solve_perturbed, sum_range_membership, Status};
use crate::splitting::OperatorPair;

const V_TOL: f64 = 1e-6;
const ANGLE_TOL: f64 = 1e-5;
const SUBSPACE_TOL: f64 = 1e-10;
const MEMBERSHIP_TOL: f64 = 1e-6;
const MEMBERSHIP_ITERS: usize = 100_000;
const ROUND_TRIP_TOL: f64 = 1e-9;
const TRUNCATION_TOL: f64 = 1e-8;

pub(super) fn angle_v(run: &mut Run) -> Result<()> {
    let thetas = run.params.f64_list("theta", &[0.0, PI / 6.0, PI / 4.0, PI / 3.0])?;
    let iters = run.params.usize("iterations", 2000)?;
    run.params.require("iterations", iters >= 100, "must be at least 100")?;
    run.params_done()?;
    let x0 = vector(&[0.4, -1.0, 0.3, 2.0]);
    for theta in thetas {
        let pair = catalog::angle_pair(theta);
        let v_ab = estimate_displacement_vector(&pair, &x0, iters)?.vector();
        let v_ba = estimate_displacement_vector(&pair.swapped(), &x0, iters)?.vector();
        let (a, b) = (vector(&[0.0, 0.0, theta.sin(), 0.0]), vector(&[theta.cos(), 0.0, 0.0, 0.0]));
        let tag = format!("θ = {theta:.6}");
        run.check(
            format!("{tag}: v_(A,B) = b + a"),
            to_vec(&(&b + &a)),
            to_vec(&v_ab),
            Some(V_TOL),
            (&v_ab - (&b + &a)).norm() <= V_TOL,
        );
        run.check(
            format!("{tag}: v_(B,A) = b − a"),
            to_vec(&(&b - &a)),
            to_vec(&v_ba),
            Some(V_TOL),
            (&v_ba - (&b - &a)).norm() <= V_TOL,
        );
        let cosine = v_ab.normalize().dot(&v_ba.normalize());
        let expected = (2.0 * theta).cos();
        run.check(
            format!("{tag}: ⟨v̂_(A,B), v̂_(B,A)⟩ = cos 2θ"),
            expected,
            cosine,
            Some(ANGLE_TOL),
            (cosine - expected).abs() <= ANGLE_TOL,
        );
        run.check_small(format!("{tag}: |‖v_(A,B)‖ − ‖v_(B,A)‖|"), (v_ab.norm() - v_ba.norm()).abs(), V_TOL);
    }
    Ok(())
}

pub(super) fn two_subspaces(run: &mut Run) -> Result<()> {
    let pairs = run.params.usize("pairs", 5)?;
    let dim = run.params.usize("dim", 6)?;
    let dim_u = run.params.usize("dim_u", 2)?;
    let dim_v = run.params.usize("dim_v", 3)?;
    let shared = run.params.usize("shared", 0)?;
    let samples = run.params.usize("samples", 500)?;
    run.params.require("dim_u", dim_u >= shared && dim_u <= dim, "must lie between shared and dim")?;
    run.params.require("dim_v", dim_v >= shared && dim_u + dim_v - shared <= dim, "U and V do not fit in dim")?;
    run.params.require("samples", samples > 0, "must be positive")?;
    run.params_done()?;
    let mut rng = run.rng(1);
    for k in 0..pairs {
        let (u, v, pair) = catalog::subspace_pair(dim, dim_u, dim_v, shared, &mut rng);
        let u_perp = linalg::complement(&u, dim);
        let v_perp = linalg::complement(&v, dim);
        let target = linalg::span_intersection(&linalg::span_sum(&u, &v), &linalg::span_sum(&u_perp, &v_perp));
        let inputs = uniform_inputs(dim, samples, 10.0, &mut rng);
        let disp = sample_displacement_range(&pair, &inputs)?;
        let worst = disp
            .points
            .iter()
            .map(|p| linalg::distance_to_span(&target, p) / (1.0 + p.norm()))
            .fold(0.0, f64::max);
        run.check_small(format!("pair {k}: relative distance of displacements to (U+V)∩(U⊥+V⊥)"), worst, SUBSPACE_TOL);
        let stacked = DMatrix::from_columns(&disp.points);
        let rank = linalg::orthonormal_columns(&stacked, linalg::RANK_TOL).ncols();
        run.check_eq(format!("pair {k}: rank of sampled displacements"), target.ncols(), rank);
    }
    Ok(())
}

fn membership_check(run: &mut Run, label: &str, pair: &OperatorPair, ys: &[Vector], x0: &Vector) -> Result<()> {
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for y in ys {
        let verdict = sum_range_membership(pair, y, x0, MEMBERSHIP_TOL, MEMBERSHIP_ITERS)?;
        worst = worst.max(verdict.residual);
        if verdict.status != Status::Solved {
            failures += 1;
        }
    }
    run.check(
        format!("{label}: every image lies in ran(A + B) (SOLVED)"),
        0,
        failures,
        Some(MEMBERSHIP_TOL),
        failures == 0,
    );
    run.note(format!("{label}: worst residual {worst:.2e} over {} points", ys.len()));
    Ok(())
}

fn linear_matrix(op: &OperatorDescriptor) -> DMatrix<f64> {
    op.matrix().expect("linear operator").clone()
}

pub(super) fn linear_transport(run: &mut Run) -> Result<()> {
    let samples = run.params.usize("samples", 200)?;
    let lambdas = run.params.f64_list("lambda", &[0.0, 0.5, 1.0])?;
    run.params.require("samples", samples > 0, "must be positive")?;
    run.params.require("lambda", lambdas.iter().all(|l| (0.0..=1.0).contains(l)), "entries must lie in [0, 1]")?;
    run.params_done()?;
    let mut rng = run.rng(1);

    // (i) B linear: (Id + B) w ∈ ran(A + B) for every displacement w
    let pair = catalog::named_pair("ball_skew").expect("catalog").pair;
    let m = linear_matrix(&pair.b);
    let x0 = Vector::zeros(2);
    let disp = sample_displacement_range(&pair, &uniform_inputs(2, samples, 5.0, &mut rng))?;
    let ys: Vec<Vector> = disp.points.iter().map(|w| w + &m * w).collect();
    let round_trip = disp
        .points
        .iter()
        .zip(&ys)
        .map(|(w, y)| (pair.b.resolvent(y).expect("dims") - w).norm())
        .fold(0.0, f64::max);
    run.check_small("(i) J_B((Id + B)w) = w", round_trip, ROUND_TRIP_TOL);
    membership_check(run, "(i) ball with [[1,1],[−1,1]], y = (Id + B)w", &pair, &ys, &x0)?;

    // (ii) A linear: (Id − A) w ∈ ran(A + B)
    let pair = catalog::named_pair("rotation_ball").expect("catalog").pair;
    let m = linear_matrix(&pair.a);
    let disp = sample_displacement_range(&pair, &uniform_inputs(2, samples, 5.0, &mut rng))?;
    let ys: Vec<Vector> = disp.points.iter().map(|w| w - &m * w).collect();
    let back = (DMatrix::identity(2, 2) - &m).try_inverse().expect("Id − A invertible for skew A");
    let round_trip = disp
        .points
        .iter()
        .zip(&ys)
        .map(|(w, y)| (&back * y - w).norm())
        .fold(0.0, f64::max);
    run.check_small("(ii) (Id − A)^{-1}((Id − A)w) = w", round_trip, ROUND_TRIP_TOL);
    membership_check(run, "(ii) rotation with ball, y = (Id − A)w", &pair, &ys, &x0)?;

    // (iii) skew A and symmetric B in R³, C = λA* + (1 − λ)B
    let a = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let b = DMatrix::from_diagonal(&vector(&[1.0, 0.0, 0.0]));
    let pair = OperatorPair::new(OperatorDescriptor::linear(a.clone())?, OperatorDescriptor::linear(b.clone())?)?;
    let sum_range = linalg::orthonormal_columns(&(&a + &b), linalg::RANK_TOL);
    run.check_eq("(iii) dim ran(A + B)", 2, sum_range.ncols());
    let x0 = Vector::zeros(3);
    let count = samples.min(50);
    for lambda in lambdas {
        let c = a.transpose() * lambda + &b * (1.0 - lambda);
        let j_c = OperatorDescriptor::linear(c.clone())?;
        let disp = sample_displacement_range(&pair, &uniform_inputs(3, count, 5.0, &mut rng))?;
        let ys: Vec<Vector> = disp.points.iter().map(|w| w + &c * w).collect();
        let off = ys.iter().map(|y| linalg::distance_to_span(&sum_range, y)).fold(0.0, f64::max);
        run.check_small(format!("(iii) λ = {lambda}: (Id + C)w lies in ran(A + B)"), off, ROUND_TRIP_TOL);
        membership_check(run, &format!("(iii) λ = {lambda}, y = (Id + C)w"), &pair, &ys, &x0)?;

        // reverse direction: J_C maps ran(A + B) into ran(Id − T)
        let mut unsolved = 0;
        for _ in 0..count.min(10) {
            let y = &sum_range * linalg::random_unit(2, &mut rng) * 3.0;
            let w = j_c.resolvent(&y)?;
            if solve_perturbed(&pair, &w, &x0, MEMBERSHIP_TOL, MEMBERSHIP_ITERS)?.status != Status::Solved {
                unsolved += 1;
            }
        }
        run.check(
            format!("(iii) λ = {lambda}: perturbed problem at J_C(y), y ∈ ran(A + B), is SOLVED"),
            0,
            unsolved,
            Some(MEMBERSHIP_TOL),
            unsolved == 0,
        );
        let w = j_c.resolvent(&vector(&[0.0, 0.0, 1.0]))?;
        let verdict = solve_perturbed(&pair, &w, &x0, MEMBERSHIP_TOL, MEMBERSHIP_ITERS)?;
        run.check(
            format!("(iii) λ = {lambda}: control J_C(e3), e3 ∉ ran(A + B)"),
            Status::Unsolved,
            verdict.status,
            Some(MEMBERSHIP_TOL),
            verdict.status == Status::Unsolved,
        );
    }
    Ok(())
}

/// Closed-form minimal preimage for `α_n = 1/(n + 1)`.
fn truncation_closed_form(n: usize, p: f64) -> Vector {
    let mut u = Vector::zeros(2 * n);
    for k in 0..n {
        let alpha = 1.0 / (k as f64 + 1.0);
        u[2 * k] = -alpha.powf(p - 2.0);
        u[2 * k + 1] = alpha.powf(p - 1.0);
    }
    u
}

pub(super) fn l2_truncation(run: &mut Run) -> Result<()> {
    let sizes = run.params.usize_list("N", &[10, 100, 1000])?;
    let p = run.params.f64("p", 2.0)?;
    run.params.require("N", sizes.iter().all(|&n| n > 0), "entries must be positive")?;
    run.params.require("p", p > 1.5 && p <= 2.5, "must lie in (3/2, 5/2]")?;
    run.params_done()?;
    run.note("α_n = 1/(n + 1); U = {x_{2n+1} = −α_n x_{2n}}, E = {x_{2n} = 0}, w_{2n} = α_n^p, w_{2n+1} = α_n^{p−1}");
    let mut previous = 0.0;
    for n in sizes {
        // rows 2k: P_E u = P_E w; rows 2k+1: u ∈ U
        let mut m = SparseMatrix::new(2 * n, 2 * n);
        let mut rhs = Vector::zeros(2 * n);
        for k in 0..n {
            let alpha = 1.0 / (k as f64 + 1.0);
            m.push(2 * k, 2 * k + 1, 1.0);
            rhs[2 * k] = alpha.powf(p - 1.0);
            m.push(2 * k + 1, 2 * k + 1, 1.0);
            m.push(2 * k + 1, 2 * k, alpha);
        }
        let ls = linalg::cgls(&m, &rhs, 1e-15, 20 * n + 100);
        let closed = truncation_closed_form(n, p);
        let err = (&ls.solution - &closed).amax();
        run.check_small(format!("N = {n}: least-squares preimage vs closed form (max abs)"), err, TRUNCATION_TOL);
        let norm_sq = ls.solution.norm_squared();
        let bound = 0.9 * n as f64;
        run.check(
            format!("N = {n}: ‖u‖² ≥ 0.9·N"),
            format!("≥ {bound}"),
            norm_sq,
            None,
            norm_sq >= bound,
        );
        run.check(
            format!("N = {n}: ‖u‖² grows with N"),
            format!("> {previous}"),
            norm_sq,
            None,
            norm_sq > previous,
        );
        previous = norm_sq;
        run.note(format!("N = {n}: CGLS {} iterations, residual {:.2e}", ls.iterations, ls.residual_norm));
    }
    Ok(())
}
