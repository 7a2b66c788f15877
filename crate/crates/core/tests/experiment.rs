use ktrr::experiment::{
    cluster_pipeline, corrupt_curve_as, emit_report, grid, mean_std, run_experiment, run_experiment_as,
    DatasetConfig, DatasetKind, ExperimentConfig, Mode, RunReport,
};
use ktrr::KernelKind;

fn small_circles() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(DatasetConfig::circles(), 2);
    cfg.dataset.per_cluster = 30;
    cfg.runs = 2;
    cfg.kmeans.restarts = 5;
    cfg.seed = 11;
    cfg
}

#[test]
fn json_round_trip() {
    let mut cfg = small_circles();
    cfg.corruption.kind = ktrr::CorruptionKind::SaltPepper;
    cfg.corruption.ratio = Some(0.05);
    let report = run_experiment(&cfg).unwrap();
    let back = RunReport::from_json(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn csv_rows_cover_runs_and_grid() {
    let mut cfg = small_circles();
    cfg.runs = 3;
    cfg.sweep.lambda = Some(vec![0.01, 0.1]);
    cfg.sweep.eta = Some(vec![2, 4, 6]);
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.mode, Mode::Sweep);
    let csv = report.to_csv();
    assert_eq!(csv.lines().count() - 1, 3 * 6);
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&report, None, dir.path()).unwrap();
    assert_eq!(files.len(), 2);
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(RunReport::from_json(&text).unwrap(), report);
}

#[test]
fn full_paper_grid_is_complete() {
    let mut cfg = small_circles();
    cfg.runs = 1;
    cfg.kmeans.restarts = 2;
    cfg.sweep.lambda = Some(vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0]);
    cfg.sweep.eta = Some((1..=50).collect());
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.points.len(), 8 * 50);
    assert!(report.complete, "{:?}", report.points.iter().find(|p| p.error.is_some()));
    assert_eq!(report.to_csv().lines().count() - 1, 400);
    let mut seen: Vec<(u64, usize)> = report.points.iter().map(|p| (p.lambda.to_bits(), p.eta)).collect();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 400);
}

#[test]
fn reports_are_reproducible_across_thread_counts() {
    let mut cfg = small_circles();
    cfg.corruption.kind = ktrr::CorruptionKind::GaussianSnr;
    cfg.corruption.snr_db = Some(20.0);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.points, b.points);
    assert_eq!(a.dataset, b.dataset);
}

#[test]
fn adding_runs_keeps_earlier_runs() {
    let mut cfg = small_circles();
    cfg.corruption.kind = ktrr::CorruptionKind::GaussianSnr;
    cfg.corruption.snr_db = Some(15.0);
    let two = run_experiment(&cfg).unwrap();
    cfg.runs = 4;
    let four = run_experiment(&cfg).unwrap();
    assert_eq!(two.points[0].runs[..], four.points[0].runs[..2]);
}

#[test]
fn clean_runs_vary_only_kmeans() {
    let report = run_experiment(&small_circles()).unwrap();
    let p = &report.points[0];
    assert!(p.graph_shared);
    assert!(p.runs.iter().all(|r| r.corruption_seed.is_none()));
    assert_ne!(p.runs[0].kmeans_seed, p.runs[1].kmeans_seed);
    assert_eq!(report.decisions.varying_streams, vec!["kmeans".to_string()]);
}

#[test]
fn failing_grid_points_are_marked() {
    let mut cfg = small_circles();
    cfg.sweep.eta = Some(vec![3, 500]);
    let report = run_experiment(&cfg).unwrap();
    assert!(!report.complete);
    assert!(report.points[0].error.is_none());
    let err = report.points[1].error.as_deref().unwrap();
    assert!(err.starts_with("solver:"), "{err}");
    assert_eq!(report.to_csv().lines().count() - 1, 2);
}

#[test]
fn corrupt_curve_uses_default_grid() {
    let mut cfg = small_circles();
    cfg.kernel.kind = KernelKind::Exponential;
    let out = corrupt_curve_as::<f64>(&cfg).unwrap();
    let snrs: Vec<f64> = out.report.points.iter().map(|p| p.snr_db.unwrap()).collect();
    assert_eq!(snrs, vec![10.0, 20.0, 30.0, 40.0, 50.0]);
    assert_eq!(out.report.mode, Mode::CorruptCurve);
}

#[test]
fn grid_order_is_kernel_lambda_eta_corruption() {
    let mut cfg = small_circles();
    cfg.sweep.kernel = Some(vec![KernelKind::Gaussian, KernelKind::Linear]);
    cfg.sweep.eta = Some(vec![1, 2]);
    cfg.sweep.snr_db = Some(vec![10.0, 20.0]);
    let g = grid(&cfg);
    assert_eq!(g.len(), 8);
    assert_eq!(g[0].kernel, KernelKind::Gaussian);
    assert_eq!((g[1].eta, g[1].corruption.snr_db), (1, Some(20.0)));
    assert_eq!(g[4].kernel, KernelKind::Linear);
}

#[test]
fn single_precision_runs() {
    let out = run_experiment_as::<f32>(&small_circles(), Mode::Run).unwrap();
    assert!(out.report.points[0].mean.unwrap().ac > 0.9);
}

#[test]
fn pipeline_on_subspaces() {
    let mut cfg = ExperimentConfig::new(DatasetConfig::circles(), 3);
    cfg.dataset.kind = DatasetKind::Subspaces;
    cfg.dataset.per_cluster = 10;
    cfg.kernel.kind = KernelKind::Linear;
    cfg.kmeans.restarts = 20;
    let ds = ktrr::experiment::load_dataset::<f64>(&cfg).unwrap();
    let labels = cluster_pipeline(&ds.x, &cfg).unwrap();
    assert_eq!(ktrr::metrics::accuracy(&labels.labels, &ds.truth).unwrap(), 1.0);
}

#[test]
fn matrix_dumps() {
    let mut cfg = small_circles();
    cfg.output.dump_matrices = true;
    let out = run_experiment_as::<f64>(&cfg, Mode::Run).unwrap();
    let a = out.artifacts.expect("dumps requested");
    assert_eq!((a.affinity.rows(), a.embedding.cols()), (60, 2));
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&out.report, Some(&a), dir.path()).unwrap();
    assert_eq!(files.len(), 5);
    let affinity = std::fs::read_to_string(dir.path().join("affinity.csv")).unwrap();
    assert_eq!(affinity.lines().count(), 60);
}

#[test]
fn sample_std() {
    assert_eq!(mean_std(&[1.0]), (1.0, 0.0));
    let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m, 2.5);
    assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
}
