use nalgebra::DMatrix;

use super::{to_vec, uniform_inputs, Run};
use crate::catalog;
use crate::error::Result;
use crate::geometry::{self, affine_hull, near_equal, PointCloud};
use crate::io;
use crate::linalg::{self, vector, Vector};
use crate::ranges::{self, build_pair_sets, estimate_displacement_vector, sample_displacement_range, solve_perturbed, Status};
use crate::sets::{SetDescriptor, Window};
use crate::splitting::{dr_iterate, OperatorPair};

const EXACT_TOL: f64 = 1e-12;
const SPAN_TOL: f64 = 1e-9;
const V_TOL: f64 = 1e-6;
const VERDICT_TOL: f64 = 1e-6;
const VERDICT_ITERS: usize = 100_000;
const ESTIMATE_ITERS: usize = 10_000;

pub(super) fn rotation_counterexample(run: &mut Run) -> Result<()> {
    let samples = run.params.usize("samples", 1000)?;
    let half = run.params.f64("half_width", 10.0)?;
    run.params.require("samples", samples > 0, "must be positive")?;
    run.params_done()?;
    let pair = catalog::named_pair("rotation_counterexample").expect("catalog").pair;
    run.check_eq("A is not 3* monotone", false, pair.a.flags().is_3star);
    let inputs = uniform_inputs(2, samples, half, &mut run.rng(1));
    let disp = sample_displacement_range(&pair, &inputs)?;
    run.check_small("max ‖(Id − T)x‖ over sampled x", disp.max_norm(), EXACT_TOL);

    let sets = build_pair_sets(&pair, samples, &Window::cube(2, half), run.seed())?;
    let d_cap_r = sets.d_cap_r();
    run.check_eq("D ∩ R is the whole plane", true, d_cap_r.is_whole_space());
    let window = Window::cube(2, 5.0);
    let plane = SetDescriptor::whole_space(2).sample(samples, &window, &mut run.rng(2));
    let origin = PointCloud::from_points(2, vec![Vector::zeros(2)]);
    let report = near_equal(&origin, &plane, geometry::DEFAULT_SET_TOL, 256, &window)?;
    run.check(
        "near_equal({0}, sampled plane)",
        false,
        report.verdict,
        Some(report.tolerance_used),
        !report.verdict,
    );
    run.note(format!("max support gap between {{0}} and the plane: {:.3}", report.max_support_gap));
    run.artifact("displacements.csv", |p| io::write_cloud_csv(p, &disp))?;
    Ok(())
}

pub(super) fn rotation_line(run: &mut Run) -> Result<()> {
    let samples = run.params.usize("samples", 1000)?;
    let half = run.params.f64("half_width", 10.0)?;
    run.params.require("samples", samples > 1, "must be at least 2")?;
    run.params_done()?;
    let pair = catalog::named_pair("rotation_line").expect("catalog").pair;
    let inputs = uniform_inputs(2, samples, half, &mut run.rng(1));
    let disp = sample_displacement_range(&pair, &inputs)?;
    let line = DMatrix::from_column_slice(2, 1, &[1.0, -1.0]).normalize();
    let worst = disp
        .points
        .iter()
        .map(|p| linalg::distance_to_span(&line, p))
        .fold(0.0, f64::max);
    run.check_small("distance of sampled displacements to R·(1, −1)", worst, SPAN_TOL);
    let hull = affine_hull(&disp, geometry::AFFINE_REL_TOL)?;
    run.check_eq("affine hull dimension", 1, hull.dim);
    let alignment = hull
        .basis
        .first()
        .map(|b| (b[0] * line[0] + b[1] * line[1]).abs())
        .unwrap_or(0.0);
    run.check_small("hull basis is ±(1, −1)/√2: 1 − |⟨b, (1,−1)/√2⟩|", 1.0 - alignment, SPAN_TOL);
    let sets = build_pair_sets(&pair, samples, &Window::cube(2, half), run.seed())?;
    run.check_eq("D ∩ R is the whole plane (strict inclusion)", true, sets.d_cap_r().is_whole_space());
    run.artifact("displacements.csv", |p| io::write_cloud_csv(p, &disp))?;
    Ok(())
}

fn ball_pair(u: &[f64], r: f64, v: &[f64], s: f64) -> Result<OperatorPair> {
    OperatorPair::new(
        crate::operators::OperatorDescriptor::normal_cone_ball(vector(u), r)?,
        crate::operators::OperatorDescriptor::normal_cone_ball(vector(v), s)?,
    )
}

pub(super) fn two_balls(run: &mut Run) -> Result<()> {
    let u = run.params.vector("u", &[0.0, 0.0])?;
    let v = run.params.vector("v", &[3.0, 0.0])?;
    let r = run.params.f64("r", 1.0)?;
    let s = run.params.f64("s", 1.0)?;
    let samples = run.params.usize("samples", 10_000)?;
    let half = run.params.f64("half_width", 20.0)?;
    run.params.require("samples", samples > 0, "must be positive")?;
    let pair = ball_pair(&u, r, &v, s)?;
    run.params_done()?;
    let (u, v) = (vector(&u), vector(&v));
    let diff = &u - &v;
    let dist = diff.norm();
    run.params.require("v", dist > r + s, "balls must be disjoint")?;

    // oracle: projection of the origin onto B(u − v, r + s)
    let oracle = &diff * (1.0 - (r + s) / dist);
    let sets = build_pair_sets(&pair, 10, &Window::cube(2, half), run.seed())?;
    let cap = sets.d_cap_r();
    let (base, basis, radius) = cap.tube_parts().expect("exact ball");
    run.check(
        "D ∩ R = B(u − v, r + s)",
        (to_vec(&diff), r + s),
        (to_vec(&base), radius),
        Some(1e-12),
        basis.ncols() == 0 && (&base - &diff).norm() <= 1e-12 && (radius - (r + s)).abs() <= 1e-12,
    );

    let x0 = vector(&[0.3, 0.7]);
    let est = estimate_displacement_vector(&pair, &x0, ESTIMATE_ITERS)?;
    let err = (est.vector() - &oracle).norm();
    run.check(
        "displacement vector estimate vs P_{B(u−v, r+s)}(0)",
        to_vec(&oracle),
        est.v.clone(),
        Some(V_TOL),
        err <= V_TOL,
    );
    run.note(format!(
        "tail and Cesàro estimates differ by {:.2e} after {} iterations",
        est.agreement_gap, est.iterations
    ));
    run.note(
        "v is checked against the projection of the origin onto the closed ball D ∩ R",
    );

    let unit = &diff / dist;
    let perp = vector(&[-unit[1], unit[0]]);
    let near = &diff * (1.0 - (r + s) / dist);
    let far = &diff * (1.0 + (r + s) / dist);
    let side = &diff + &perp * (r + s);
    for (label, w, expected) in [
        ("exceptional boundary point (1 − (r+s)/‖u−v‖)(u − v)", near, Status::Solved),
        ("exceptional boundary point (1 + (r+s)/‖u−v‖)(u − v)", far, Status::Solved),
        ("boundary point (u − v) + (r+s)·n, n ⊥ u − v", side, Status::Unsolved),
    ] {
        let verdict = solve_perturbed(&pair, &w, &x0, VERDICT_TOL, VERDICT_ITERS)?;
        run.check(
            format!("perturbed problem at {label} = {}", crate::sets::fmt_vec(&w)),
            expected,
            verdict.status,
            Some(VERDICT_TOL),
            verdict.status == expected,
        );
    }

    // density: sampled displacements fill the ball up to the sampling tolerance
    let inputs = uniform_inputs(2, samples, half, &mut run.rng(1));
    let disp = sample_displacement_range(&pair, &inputs)?;
    let outside = disp.points.iter().filter(|p| !cap.contains(p, 1e-9)).count();
    run.check_eq("sampled displacements inside D ∩ R", 0, outside);
    let window = Window::around(&diff, r + s + 1.0);
    let reference = cap.sample(samples, &window, &mut run.rng(2));
    let report = near_equal(&disp, &reference, geometry::DEFAULT_SET_TOL, 256, &window)?;
    run.check(
        "sampled ran(Id − T) nearly equals sampled D ∩ R",
        true,
        report.verdict,
        Some(report.tolerance_used),
        report.verdict,
    );
    run.note(format!("max support gap {:.4}", report.max_support_gap));
    let gaps = geometry::support_gaps(&disp, &reference, 256, &window, geometry::DEFAULT_DIRECTION_SEED)?;
    let trace = dr_iterate(&pair, &x0, 200, 0.0)?;
    run.artifact("displacements.csv", |p| io::write_cloud_csv(p, &disp))?;
    run.artifact("support_gaps.csv", |p| io::write_support_csv(p, &gaps))?;
    run.artifact("trace.csv", |p| io::write_trace_csv(p, &trace))?;
    Ok(())
}

pub(super) fn norm_symmetry(run: &mut Run) -> Result<()> {
    let iters = run.params.usize("iterations", ESTIMATE_ITERS)?;
    run.params.require("iterations", iters >= 100, "must be at least 100")?;
    run.params_done()?;
    let x0 = vector(&[0.3, 0.7]);
    let window = Window::cube(2, 10.0);
    for (name, sign) in [("disjoint_balls", -1.0), ("full_domain", 1.0)] {
        let pair = catalog::named_pair(name).expect("catalog").pair;
        let swapped = pair.swapped();
        let v_ab = estimate_displacement_vector(&pair, &x0, iters)?.vector();
        let v_ba = estimate_displacement_vector(&swapped, &x0, iters)?.vector();
        run.check_small(
            format!("{name}: |‖v_(A,B)‖ − ‖v_(B,A)‖|"),
            (v_ab.norm() - v_ba.norm()).abs(),
            V_TOL,
        );
        run.check_small(
            format!("{name}: ‖v_(B,A) − ({sign})·v_(A,B)‖"),
            (&v_ba - &v_ab * sign).norm(),
            V_TOL,
        );
        // both estimates against the projection of the origin onto D ∩ R
        for (label, p, v) in [("(A,B)", &pair, &v_ab), ("(B,A)", &swapped, &v_ba)] {
            let cap = build_pair_sets(p, 10, &window, run.seed())?.d_cap_r();
            match cap.project(&Vector::zeros(2)) {
                Some(oracle) => run.check(
                    format!("{name}: v_{label} equals the projection of 0 onto D ∩ R"),
                    to_vec(&oracle),
                    to_vec(v),
                    Some(V_TOL),
                    (&oracle - v).norm() <= V_TOL,
                ),
                None => run.note(format!("{name}: no closed-form D ∩ R for {label}")),
            }
        }
    }
    run.note(format!("estimates use {} DR steps; stall tolerance {:e}", iters, ranges::ESTIMATE_TOL));
    Ok(())
}
