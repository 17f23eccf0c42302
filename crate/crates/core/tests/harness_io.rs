//! Output files of an experiment run: CSV round trip, SVG validity,
//! deterministic reduction and early I/O failure.

use std::fs;

use ris_anm::harness::report::{read_metrics_csv, MetricRow};
use ris_anm::harness::{run_experiment, ExperimentConfig, SetupSelector};
use ris_anm::Error;

fn small_config(dir: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        setups: vec![SetupSelector::Table(3)],
        p_t_sweep_dbm: vec![10.0],
        n_trials: 2,
        seed: 3,
        output_dir: dir.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

fn same_value(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

#[test]
fn smoke_run_writes_parsable_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&small_config(dir.path())).unwrap();
    assert_eq!(report.cells.len(), 1);
    assert_eq!(report.cells[0].n_trials, 2);

    let parsed = read_metrics_csv(&dir.path().join("metrics.csv")).unwrap();
    assert_eq!(parsed.len(), report.rows.len());
    for (a, b) in parsed.iter().zip(&report.rows) {
        let MetricRow { setup, p_t_dbm, metric, mean, stderr, n } = a;
        assert_eq!((setup, metric, n), (&b.setup, &b.metric, &b.n));
        assert!(same_value(*p_t_dbm, b.p_t_dbm));
        assert!(same_value(*mean, b.mean), "{metric}: {mean} vs {}", b.mean);
        assert!(same_value(*stderr, b.stderr));
    }
    let header = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert!(header.starts_with("setup,p_t_dbm,metric,mean,stderr,n\n"));

    let frozen = ExperimentConfig::load(&dir.path().join("config.json")).unwrap();
    assert_eq!(frozen, report.config);

    let mut svgs = 0;
    for entry in fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "svg") {
            let text = fs::read_to_string(&path).unwrap();
            let doc = roxmltree::Document::parse(&text).unwrap();
            assert_eq!(doc.root_element().tag_name().name(), "svg");
            svgs += 1;
        }
    }
    assert!(svgs >= 5);
}

#[test]
fn metrics_are_independent_of_thread_count() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir_a.path());
    cfg.n_trials = 3;
    run_experiment(&cfg).unwrap();
    cfg.output_dir = dir_b.path().to_path_buf();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    pool.install(|| run_experiment(&cfg)).unwrap();
    let a = fs::read(dir_a.path().join("metrics.csv")).unwrap();
    let b = fs::read(dir_b.path().join("metrics.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unwritable_output_fails_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let mut cfg = small_config(&blocker.join("out"));
    // enough trials that computing first would be noticeable
    cfg.n_trials = 10_000;
    let start = std::time::Instant::now();
    assert!(matches!(run_experiment(&cfg), Err(Error::Io(_))));
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn invalid_configs_are_rejected_upstream() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.p_t_sweep_dbm.clear();
    assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn baseline_curves_are_overlaid() {
    let dir = tempfile::tempdir().unwrap();
    let baseline = dir.path().join("baseline.csv");
    fs::write(
        &baseline,
        "series,p_t_dbm,metric,value\npassive,0,mse_theta_mr,0.1\npassive,10,mse_theta_mr,0.01\n",
    )
    .unwrap();
    let mut cfg = small_config(&dir.path().join("out"));
    cfg.baseline = Some(baseline);
    run_experiment(&cfg).unwrap();
    let svg = fs::read_to_string(dir.path().join("out/mse_theta_mr.svg")).unwrap();
    roxmltree::Document::parse(&svg).unwrap();
    assert!(svg.contains("passive (reference)"));
}
