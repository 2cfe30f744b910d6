use splitrange::experiments::{experiment_names, run_experiment, ExperimentContext, ParamMap};

#[test]
fn every_experiment_passes_with_defaults() {
    let ctx = ExperimentContext::default();
    let mut failed = Vec::new();
    for name in experiment_names() {
        let start = std::time::Instant::now();
        let report = run_experiment(name, &ParamMap::new(), &ctx).unwrap();
        eprintln!("{name}: pass={} in {:?}", report.pass, start.elapsed());
        for c in report.failed_checks() {
            eprintln!("  FAILED {}: expected {} observed {}", c.description, c.expected, c.observed);
        }
        for n in &report.notes {
            eprintln!("  note: {n}");
        }
        if !report.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "{failed:?}");
}
