use super::{uniform_inputs, Run};
use crate::catalog::{self, random_points};
use crate::error::Result;
use crate::geometry::{self, near_equal, PointCloud};
use crate::io;
use crate::operators::OperatorDescriptor;
use crate::ranges::{build_pair_sets, sample_displacement_range, sample_t_range};
use crate::sets::{SetDescriptor, Window, MEMBERSHIP_TOL};
use crate::splitting::OperatorPair;

const DUALITY_TOL: f64 = 1e-10;
const EXACT_TOL: f64 = 1e-12;
const DIRECTIONS: usize = 256;
const INCLUSION_TOL: f64 = 1e-9;

pub(super) fn self_duality(run: &mut Run) -> Result<()> {
    let samples = run.params.usize("samples", 1000)?;
    let half = run.params.f64("half_width", 10.0)?;
    run.params.require("samples", samples > 1, "must be at least 2")?;
    run.params_done()?;
    let mut rng = run.rng(1);
    for entry in catalog::pair_catalog() {
        let points = random_points(entry.pair.dim(), samples, half, &mut rng);
        let duality = catalog::self_duality_error(&entry.pair, &points);
        run.check_small(format!("{}: ‖T_(A,B) x − T_(A⁻¹,B⁻∨) x‖", entry.name), duality, DUALITY_TOL);
        let inverse = catalog::inverse_pair_error(&entry.pair, &points);
        run.check_small(format!("{}: ‖T_(A,B) x + T_(A,B⁻¹) x − x‖", entry.name), inverse, DUALITY_TOL);
        let reflected = catalog::reflected_form_error(&entry.pair, &points)?;
        run.check_small(format!("{}: T = ½(Id + R_B R_A)", entry.name), reflected, DUALITY_TOL);
    }
    Ok(())
}

struct Instance {
    name: &'static str,
    pair: OperatorPair,
    input_half: f64,
}

fn theorem_instances() -> Vec<Instance> {
    let named = |name: &'static str, input_half| Instance {
        name,
        pair: catalog::named_pair(name).expect("catalog").pair,
        input_half,
    };
    vec![
        named("overlapping_balls", 20.0),
        named("ball_line", 60.0),
        named("ball_skew", 25.0),
    ]
}

/// Compares a sampled range with a sample of `target` inside `window`.
fn compare(
    run: &mut Run,
    label: &str,
    sampled: &PointCloud,
    target: &SetDescriptor,
    window: &Window,
    samples: usize,
    salt: u64,
) -> Result<()> {
    let outside = sampled.points.iter().filter(|p| !target.contains(p, INCLUSION_TOL)).count();
    run.check_eq(format!("{label}: every sample lies in {}", target.label()), 0, outside);
    // sampled beyond the window so that clamping reaches its faces and corners
    let reference = target.sample(samples, &window.scaled(2.0), &mut run.rng(salt));
    let report = near_equal(sampled, &reference, geometry::DEFAULT_SET_TOL, DIRECTIONS, window)?;
    run.check(
        format!("{label}: near-equality with {} in the window", target.label()),
        true,
        report.verdict,
        Some(report.tolerance_used),
        report.verdict,
    );
    run.note(format!(
        "{label}: max support gap {:.4}, affine dims {:?}",
        report.max_support_gap, report.affine_dims
    ));
    let gaps = geometry::support_gaps(sampled, &reference, DIRECTIONS, window, geometry::DEFAULT_DIRECTION_SEED)?;
    let file = format!("{}_support.csv", label.replace(' ', "_"));
    run.artifact(&file, |p| io::write_support_csv(p, &gaps))
}

pub(super) fn main_theorem(run: &mut Run) -> Result<()> {
    let samples = run.params.usize("samples", 10_000)?;
    let half = run.params.f64("window", 5.0)?;
    run.params.require("samples", samples > 0, "must be positive")?;
    run.params.require("window", half > 0.0, "must be positive")?;
    run.params_done()?;
    let window = Window::cube(2, half);
    for (k, inst) in theorem_instances().into_iter().enumerate() {
        let flags = (inst.pair.a.flags().is_3star, inst.pair.b.flags().is_3star);
        run.check_eq(format!("{}: both operators are 3*", inst.name), (true, true), flags);
        let inputs = uniform_inputs(2, samples, inst.input_half, &mut run.rng(10 + k as u64));
        let disp = sample_displacement_range(&inst.pair, &inputs)?;
        let sets = build_pair_sets(&inst.pair, samples, &Window::cube(2, inst.input_half), run.seed())?;
        compare(run, inst.name, &disp, &sets.d_cap_r(), &window, samples, 20 + k as u64)?;
    }

    // full-domain case: B = Id makes T = Id/2
    let pair = OperatorPair::new(catalog::ball(&[0.0, 0.0], 1.0), OperatorDescriptor::identity(2))?;
    let points = random_points(2, samples.min(1000), 10.0, &mut run.rng(2));
    let worst = points
        .iter()
        .map(|x| (crate::splitting::dr_map(&pair, x).expect("dims") - x * 0.5).norm())
        .fold(0.0, f64::max);
    run.check_small("ball with Id: ‖(Id − T)x − x/2‖", worst, EXACT_TOL);
    let sets = build_pair_sets(&pair, 10, &window, run.seed())?;
    run.check_eq("ball with Id: D ∩ R is the whole plane", true, sets.d_cap_r().is_whole_space());
    Ok(())
}

pub(super) fn range_of_t(run: &mut Run) -> Result<()> {
    let samples = run.params.usize("samples", 10_000)?;
    let half = run.params.f64("window", 5.0)?;
    run.params.require("samples", samples > 0, "must be positive")?;
    run.params.require("window", half > 0.0, "must be positive")?;
    run.params_done()?;
    let window = Window::cube(2, half);
    for (k, inst) in theorem_instances().into_iter().enumerate() {
        let inputs = uniform_inputs(2, samples, inst.input_half, &mut run.rng(10 + k as u64));
        let t_range = sample_t_range(&inst.pair, &inputs)?;
        let sets = build_pair_sets(&inst.pair, samples, &Window::cube(2, inst.input_half), run.seed())?;
        compare(run, &format!("{} T", inst.name), &t_range, &sets.dual_cap(), &window, samples, 20 + k as u64)?;
    }
    Ok(())
}

pub(super) fn subdifferential_ranges(run: &mut Run) -> Result<()> {
    let samples = run.params.usize("samples", 1000)?;
    run.params.require("samples", samples > 0, "must be positive")?;
    run.params_done()?;
    // f = ι_{B(0,1)}, g = ½‖·‖²; f* = ‖·‖ and g* = g have full domain
    let pair = OperatorPair::new(catalog::ball(&[0.0, 0.0], 1.0), OperatorDescriptor::identity(2))?;
    run.check_eq(
        "both operators are subdifferentials",
        (true, true),
        (pair.a.flags().is_subdifferential, pair.b.flags().is_subdifferential),
    );
    let inputs = uniform_inputs(2, samples, 20.0, &mut run.rng(1));
    let disp = sample_displacement_range(&pair, &inputs)?;
    let worst = inputs
        .points
        .iter()
        .zip(&disp.points)
        .map(|(x, d)| (d - x * 0.5).norm())
        .fold(0.0, f64::max);
    run.check_small("displacement map equals x/2", worst, EXACT_TOL);
    let window = Window::cube(2, 5.0);
    let sets = build_pair_sets(&pair, 10, &window, run.seed())?;
    // dom f − dom g and dom f* + dom g* from the operator descriptors
    run.check_eq("dom f − dom g is the whole plane", true, sets.d.is_whole_space());
    run.check_eq("dom f* + dom g* is the whole plane", true, sets.r.is_whole_space());
    let plane = SetDescriptor::whole_space(2);
    for p in [[1e3, -1e3], [0.0, 0.0], [-7.5, 2.0]] {
        let x = crate::linalg::vector(&p);
        run.check_eq(
            format!("{} ∈ (dom f − dom g) ∩ (dom f* + dom g*)", crate::sets::fmt_vec(&x)),
            true,
            sets.d_cap_r().contains(&x, MEMBERSHIP_TOL),
        );
    }
    compare(run, "ball_identity", &disp, &plane, &window, samples, 2)?;
    Ok(())
}
