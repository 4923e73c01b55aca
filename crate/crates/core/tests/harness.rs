use qsearch::ensembles::EnsembleKind;
use qsearch::estimators::EstimatorKind;
use qsearch::harness::{run_experiment, ExperimentConfig, ExperimentResult, Expectation, Figure, MRule};

fn in_pool(threads: usize, cfg: &ExperimentConfig) -> ExperimentResult {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| run_experiment(cfg).unwrap())
}

fn small_sweep() -> ExperimentConfig {
    ExperimentConfig {
        ns: vec![8, 9],
        ks: vec![3],
        m_rules: vec![MRule::Alpha(10.0), MRule::Mu(1.0)],
        kinds: vec![EnsembleKind::RandomSoluble, EnsembleKind::Balanced],
        instances: 12,
        base_seed: 77,
        gsat: true,
        expectations: vec![Expectation::BoundHolds],
        ..ExperimentConfig::default()
    }
}

#[test]
fn output_is_independent_of_worker_count() {
    let cfg = small_sweep();
    let one = in_pool(1, &cfg);
    let four = in_pool(4, &cfg);
    assert_eq!(one.rows_csv(), four.rows_csv());
    assert_eq!(one.summary_csv(), four.summary_csv());
    assert_eq!(one.summary_json(), four.summary_json());
    let seeds: Vec<u64> = one.rows.iter().take(12).map(|r| r.instance_seed).collect();
    assert_eq!(seeds, (77..89).collect::<Vec<_>>());
}

#[test]
fn files_are_written_with_echoed_header() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_experiment(&small_sweep()).unwrap();
    res.write_to(dir.path()).unwrap();
    let rows = std::fs::read_to_string(dir.path().join("rows.csv")).unwrap();
    assert!(rows.starts_with("# figure = custom\n"));
    assert!(rows.contains("# base_seed = 77\n"));
    assert!(rows.contains("# gsat_tie_policy = uniform_random\n"));
    assert!(!rows.contains("wall_time"));
    let header = rows.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header.split(',').count(), 10);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["summary"].as_array().unwrap().len(), res.summary.len());
    assert_eq!(json["checks"][0]["passed"], true);
}

#[test]
fn probabilities_and_bounds_are_well_formed() {
    let res = run_experiment(&small_sweep()).unwrap();
    for r in &res.rows {
        let p = r.p_soln.unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert!(r.p_soln_lower_bound.is_some() && r.eta_abs.is_some());
        assert!(r.gsat_steps.is_some());
    }
    for s in &res.summary {
        assert!(s.sem.unwrap() >= 0.0);
        assert!(s.bound.is_some());
    }
}

#[test]
fn timing_column_is_opt_in() {
    let cfg = ExperimentConfig { timing: true, instances: 2, ..small_sweep() };
    let res = run_experiment(&cfg).unwrap();
    assert!(res.rows_csv().contains(",wall_time\n"));
    assert!(res.rows.iter().all(|r| r.wall_time.is_some()));
}

#[test]
fn fig1_stays_above_bound() {
    let mut cfg = ExperimentConfig::preset(Figure::Fig1);
    cfg.ns = (6..=14).collect();
    cfg.instances = 1;
    let res = run_experiment(&cfg).unwrap();
    assert!(res.all_checks_passed(), "{:?}", res.checks);
    for s in &res.summary {
        assert_eq!(s.point.estimator, EstimatorKind::MaxConstrainedEq7);
        assert!(s.mean.unwrap() >= s.bound.unwrap() - 1e-12);
    }
}

#[test]
fn fig3_bound_holds_at_n10() {
    let mut cfg = ExperimentConfig::preset(Figure::Fig3);
    cfg.ns = vec![10];
    cfg.instances = 100;
    let res = run_experiment(&cfg).unwrap();
    assert!(res.all_checks_passed(), "{:?}", res.checks);
    assert!(res.summary.iter().all(|s| s.x == s.point.m as f64 / 10.0));
}

#[test]
fn fig4_preflight_reports_infeasible_densities() {
    let mut cfg = ExperimentConfig::preset(Figure::Fig4);
    cfg.ns = (6..=12).collect();
    cfg.quantum = false;
    cfg.analysis = false;
    cfg.gsat = true;
    let (points, skipped) = qsearch::harness::preflight(&cfg);
    // 18n² never fits below n = 19, 8n² needs n >= 10
    assert!(skipped.iter().filter(|s| s.m_rule == "mu:18").count() == 7);
    assert!(points.iter().all(|p| p.m_rule != "mu:18"));
    assert_eq!(
        points.iter().filter(|p| p.m_rule == "mu:8").map(|p| p.n).collect::<Vec<_>>(),
        vec![10, 11, 12]
    );
}
