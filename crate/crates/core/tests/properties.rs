use proptest::prelude::*;
use splitrange::catalog::{self, operator_catalog, pair_catalog, random_points};
use splitrange::linalg::{seeded_rng, vector, Vector};
use splitrange::splitting::{attouch_thera_dual, dr_iterate, dr_map, OperatorPair};

fn fne_violation(op: &splitrange::OperatorDescriptor, x: &Vector, y: &Vector) -> f64 {
    let jx = op.resolvent(x).unwrap();
    let jy = op.resolvent(y).unwrap();
    let cx = x - &jx;
    let cy = y - &jy;
    (&jx - &jy).norm_squared() + (cx - cy).norm_squared() - (x - y).norm_squared()
}

#[test]
fn resolvents_are_firmly_nonexpansive() {
    let mut rng = seeded_rng(7);
    for entry in operator_catalog() {
        let points = random_points(entry.op.dim(), 1000, 10.0, &mut rng);
        let worst = points
            .windows(2)
            .map(|w| fne_violation(&entry.op, &w[0], &w[1]))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(worst <= 1e-10, "{}: {worst:e}", entry.name);
    }
}

#[test]
fn inverse_resolvent_identity() {
    let mut rng = seeded_rng(8);
    for entry in operator_catalog() {
        let inv = entry.op.inverse();
        for x in random_points(entry.op.dim(), 100, 10.0, &mut rng) {
            let err = (entry.op.resolvent(&x).unwrap() + inv.resolvent(&x).unwrap() - &x).norm();
            assert!(err <= 1e-12 * (1.0 + x.norm()), "{}: {err:e}", entry.name);
        }
    }
}

#[test]
fn vee_and_inverse_commute() {
    let mut rng = seeded_rng(9);
    for entry in operator_catalog() {
        let points = random_points(entry.op.dim(), 100, 10.0, &mut rng);
        let err = catalog::vee_inverse_commutation_error(&entry.op, &points);
        assert!(err <= 1e-12, "{}: {err:e}", entry.name);
    }
}

#[test]
fn minty_pairs_land_in_domain_and_range() {
    let mut rng = seeded_rng(10);
    for entry in operator_catalog() {
        let points = random_points(entry.op.dim(), 500, 5.0, &mut rng);
        assert_eq!(catalog::minty_failures(&entry.op, &points, catalog::default_minty_tol()), 0, "{}", entry.name);
    }
}

#[test]
fn displacement_norms_never_increase() {
    let mut rng = seeded_rng(11);
    for entry in pair_catalog() {
        for x0 in random_points(entry.pair.dim(), 5, 10.0, &mut rng) {
            let trace = dr_iterate(&entry.pair, &x0, 300, 0.0).unwrap();
            for w in trace.displacement_norms.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0]), "{}: {} > {}", entry.name, w[1], w[0]);
            }
        }
    }
}

#[test]
fn swapping_twice_is_identity() {
    let pair = catalog::named_pair("ball_skew").unwrap().pair;
    let x = vector(&[1.5, -0.25]);
    let back = pair.swapped().swapped();
    assert_eq!(dr_map(&pair, &x).unwrap(), dr_map(&back, &x).unwrap());
}

fn ball_pair() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-5.0..5.0f64, -5.0..5.0f64, 0.1..3.0f64, 0.1..3.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_pair_has_same_dr_operator((cx, cy, r, s) in ball_pair(), x in prop::array::uniform2(-20.0..20.0f64)) {
        let pair = OperatorPair::new(catalog::ball(&[0.0, 0.0], r), catalog::ball(&[cx, cy], s)).unwrap();
        let dual = attouch_thera_dual(&pair);
        let x = vector(&x);
        let err = (dr_map(&pair, &x).unwrap() - dr_map(&dual, &x).unwrap()).norm();
        prop_assert!(err <= 1e-10, "{err:e}");
    }

    #[test]
    fn ball_displacements_lie_in_the_difference_ball((cx, cy, r, s) in ball_pair(), x in prop::array::uniform2(-20.0..20.0f64)) {
        let pair = OperatorPair::new(catalog::ball(&[0.0, 0.0], r), catalog::ball(&[cx, cy], s)).unwrap();
        let x = vector(&x);
        let d = &x - dr_map(&pair, &x).unwrap();
        // D = B(0, r) − B(c, s) = B(−c, r + s)
        let dist = (d + vector(&[cx, cy])).norm();
        prop_assert!(dist <= r + s + 1e-9);
    }

    #[test]
    fn shifts_translate_resolvents(w in prop::array::uniform2(-3.0..3.0f64), x in prop::array::uniform2(-10.0..10.0f64)) {
        let op = catalog::skew_monotone();
        let (w, x) = (vector(&w), vector(&x));
        let inner = op.shift_inner(&w).unwrap().resolvent(&x).unwrap();
        prop_assert!((inner - (&w + op.resolvent(&(&x - &w)).unwrap())).norm() <= 1e-12);
        let outer = op.shift_outer(&w).unwrap().resolvent(&x).unwrap();
        prop_assert!((outer - op.resolvent(&(&x + &w)).unwrap()).norm() <= 1e-12);
    }

    #[test]
    fn vee_negates_through_the_resolvent(x in prop::array::uniform2(-10.0..10.0f64)) {
        let op = catalog::ball(&[3.0, 1.0], 1.0);
        let x = vector(&x);
        let lhs = op.vee().resolvent(&x).unwrap();
        let rhs = -op.resolvent(&(-&x)).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-15);
    }
}

/// Brute-force minimizer of f + ½‖· − x‖²: a coarse grid, then a fine grid around the best cell.
fn dense_grid_prox(f: splitrange::prox::BuiltinFunction, x: &Vector) -> Vector {
    let objective = |p: &Vector| f.value(p) + 0.5 * (p - x).norm_squared();
    let mut best = x.clone();
    let mut best_val = objective(&best);
    for (center, half, step) in [(x.clone(), 4.0_f64, 1e-2_f64), (Vector::zeros(2), 0.02, 1e-4)] {
        let center = if center.norm() == 0.0 { best.clone() } else { center };
        let n = (2.0 * half / step).round() as i64;
        for i in 0..=n {
            for j in 0..=n {
                let p = vector(&[
                    center[0] - half + i as f64 * step,
                    center[1] - half + j as f64 * step,
                ]);
                let v = objective(&p);
                if v < best_val {
                    best_val = v;
                    best = p;
                }
            }
        }
    }
    best
}

#[test]
fn root_max_prox_matches_dense_grid() {
    use splitrange::prox::{numeric_prox, prox_window, BuiltinFunction, DEFAULT_DEPTH};
    let f = BuiltinFunction::RootMax;
    for p in [[4.0, 0.0], [0.5, 2.0], [-1.0, 0.3], [0.2, -0.1]] {
        let x = vector(&p);
        let oracle = dense_grid_prox(f, &x);
        let exact = f.prox(&x).unwrap();
        let grid = numeric_prox(f, &x, &prox_window(f, &x), DEFAULT_DEPTH).unwrap();
        assert!((&exact - &oracle).norm() < 3e-4, "{p:?}: exact {exact} vs oracle {oracle}");
        assert!((&grid - &oracle).norm() < 3e-4, "{p:?}: grid {grid} vs oracle {oracle}");
    }
}
