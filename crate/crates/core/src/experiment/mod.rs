//! Repeated trials, parameter grids and corruption curves.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod seeds;

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::corruption::{corrupt, CorruptionKind};
use crate::dataio::{first_k_classes, load_csv, load_idx, subsample_per_class, Dataset};
use crate::error::{Error, Result};
use crate::kernels::{KernelKind, KernelSpec};
use crate::kmeans::kmeans;
use crate::metrics::{evaluate, Scores};
use crate::scalar::Scalar;
use crate::solver::RegressionParams;
use crate::synthetic::{concentric_circles, linear_subspaces};

pub use config::{CorruptionConfig, DatasetConfig, DatasetKind, ExperimentConfig, CONFIG_KEYS};
pub use pipeline::{build_graph, cluster_pipeline, cluster_pipeline_with, kmeans_params, Graph, PipelineParams};
pub use report::{emit_report, Artifacts, Clock, DatasetSummary, Decisions, Mode, PointReport, RunRecord, RunReport};
pub use seeds::{derive_seed, Stream};

/// SNR grid used by corruption curves when none is configured.
pub const DEFAULT_SNR_GRID: [f64; 5] = [10.0, 20.0, 30.0, 40.0, 50.0];
/// Salt-and-pepper grid used by corruption curves when none is configured.
pub const DEFAULT_RATIO_GRID: [f64; 6] = [0.0, 0.05, 0.10, 0.15, 0.20, 0.25];

/// Loads or generates the configured dataset, then applies class filters.
pub fn load_dataset<T: Scalar>(cfg: &ExperimentConfig) -> Result<Dataset<T>> {
    let d = &cfg.dataset;
    let seed = d.seed.unwrap_or_else(|| derive_seed(cfg.seed, 0, Stream::Dataset));
    let missing = |key: &str| Error::Config(format!("dataset.{key} is required"));
    let mut ds = match d.kind {
        DatasetKind::Csv => load_csv(d.path.as_deref().ok_or_else(|| missing("path"))?, d.label_column)?,
        DatasetKind::Idx => load_idx(
            d.images.as_deref().ok_or_else(|| missing("images"))?,
            d.labels.as_deref().ok_or_else(|| missing("labels"))?,
        )?,
        DatasetKind::Circles => concentric_circles(&d.radii, d.per_cluster, d.noise, seed)?,
        DatasetKind::Subspaces => linear_subspaces(d.count, d.ambient, d.sub_dim, d.per_cluster, seed)?,
    };
    if let Some(k) = d.first_k {
        ds = first_k_classes(&ds, k)?;
    }
    if let Some(per_class) = d.per_class {
        ds = subsample_per_class(&ds, per_class, seed);
    }
    Ok(ds)
}

/// One cell of the parameter grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub lambda: f64,
    pub eta: usize,
    pub kernel: KernelKind,
    pub corruption: CorruptionConfig,
}

/// Cartesian product of the sweep grids, kernel outermost and corruption
/// innermost. Axes without a grid take the base value.
pub fn grid(cfg: &ExperimentConfig) -> Vec<GridPoint> {
    let s = &cfg.sweep;
    let kernels = s.kernel.clone().unwrap_or_else(|| vec![cfg.kernel.kind]);
    let lambdas = s.lambda.clone().unwrap_or_else(|| vec![cfg.lambda]);
    let etas = s.eta.clone().unwrap_or_else(|| vec![cfg.eta]);
    let corruptions: Vec<CorruptionConfig> = match (&s.snr_db, &s.ratio) {
        (Some(snr), _) => snr
            .iter()
            .map(|&v| CorruptionConfig {
                kind: CorruptionKind::GaussianSnr,
                snr_db: Some(v),
                ..cfg.corruption
            })
            .collect(),
        (None, Some(ratio)) => ratio
            .iter()
            .map(|&v| CorruptionConfig {
                kind: CorruptionKind::SaltPepper,
                ratio: Some(v),
                ..cfg.corruption
            })
            .collect(),
        (None, None) => vec![cfg.corruption],
    };
    let mut points = Vec::new();
    for &kernel in &kernels {
        for &lambda in &lambdas {
            for &eta in &etas {
                for &corruption in &corruptions {
                    points.push(GridPoint {
                        lambda,
                        eta,
                        kernel,
                        corruption,
                    });
                }
            }
        }
    }
    points
}

/// Sample mean and standard deviation (`n - 1`; zero for a single run).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn aggregate(runs: &[RunRecord]) -> (Scores, Scores) {
    let stat = |f: fn(&Scores) -> f64| mean_std(&runs.iter().map(|r| f(&r.scores)).collect::<Vec<_>>());
    let (ac, ac_s) = stat(|s| s.ac);
    let (nmi, nmi_s) = stat(|s| s.nmi);
    let (ari, ari_s) = stat(|s| s.ari);
    let (f, f_s) = stat(|s| s.fscore);
    (
        Scores { ac, nmi, ari, fscore: f },
        Scores {
            ac: ac_s,
            nmi: nmi_s,
            ari: ari_s,
            fscore: f_s,
        },
    )
}

/// Report plus optional matrix dumps.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: RunReport,
    pub artifacts: Option<Artifacts>,
}

struct PointOutcome {
    runs: Vec<RunRecord>,
    t1: Vec<f64>,
    t2: Vec<f64>,
    artifacts: Option<Artifacts>,
}

fn run_point<T: Scalar>(
    cfg: &ExperimentConfig,
    ds: &Dataset<T>,
    point: &GridPoint,
    want_artifacts: bool,
) -> Result<PointOutcome> {
    let params = PipelineParams {
        kernel: KernelSpec {
            kind: point.kernel,
            ..cfg.kernel
        },
        regression: RegressionParams::new(point.lambda, point.eta),
        ..PipelineParams::from_config(cfg)
    };
    let range = ds.meta.value_range;
    let corruption_base = point.corruption.seed.unwrap_or(cfg.seed);
    let clean = point.corruption.kind == CorruptionKind::None;
    let shared = if clean { Some(build_graph(&ds.x, &params)?) } else { None };

    let mut out = PointOutcome {
        runs: Vec::with_capacity(cfg.runs),
        t1: Vec::with_capacity(cfg.runs),
        t2: Vec::with_capacity(cfg.runs),
        artifacts: None,
    };
    for run in 0..cfg.runs {
        let start = Instant::now();
        let kmeans_seed = derive_seed(cfg.seed, run, Stream::KMeans);
        let (owned, corruption_seed, clipped, selected) = match &shared {
            Some(_) => (None, None, 0, 0),
            None => {
                let seed = derive_seed(corruption_base, run, Stream::Corruption);
                let spec = point.corruption.spec(range, seed).map_err(Error::at("corruption"))?;
                let c = corrupt(&ds.x, &spec).map_err(Error::at("corruption"))?;
                (Some(build_graph(&c.data, &params)?), Some(seed), c.clipped, c.selected)
            }
        };
        let graph = shared.as_ref().or(owned.as_ref()).expect("graph built above");
        let labels = kmeans(&graph.embedding.y, &kmeans_params(cfg, kmeans_seed)).map_err(Error::at("kmeans"))?;
        let scores = evaluate(&labels.labels, &ds.truth, cfg.metrics.nmi_norm).map_err(Error::at("metrics"))?;
        let mut t2 = start.elapsed();
        if shared.is_some() {
            t2 += graph.elapsed;
        }
        out.t1.push(graph.t1.as_secs_f64());
        out.t2.push(t2.as_secs_f64());
        out.runs.push(RunRecord {
            run,
            kmeans_seed,
            corruption_seed,
            scores,
            inertia: labels.inertia,
            factorization: graph.coefficients.path,
            sigma: graph.kernel.sigma().filter(|_| graph.kernel.kind.uses_bandwidth()),
            near_zero_eigenvalues: graph.embedding.near_zero_eigenvalues,
            isolated_vertices: graph.isolated.len(),
            zero_embedding_rows: graph.embedding.zero_rows.len(),
            guarded_entries: graph.guarded_entries,
            clipped_entries: clipped,
            corrupted_entries: selected,
        });
        if want_artifacts && run == 0 {
            out.artifacts = Some(Artifacts {
                coefficients: graph.coefficients.values.cast(),
                affinity: graph.affinity.values.cast(),
                embedding: graph.embedding.y.cast(),
            });
        }
    }
    Ok(out)
}

/// Runs every grid point of `cfg` in `mode`. A failing grid point is recorded
/// with its error and the report is marked incomplete. Only loading errors
/// abort the whole experiment.
pub fn run_experiment_as<T: Scalar>(cfg: &ExperimentConfig, mode: Mode) -> Result<Outcome> {
    cfg.validate()?;
    let ds: Dataset<T> = load_dataset(cfg).map_err(Error::at("dataset"))?;
    let timestamp_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let mut clock = Clock {
        timestamp_unix,
        ..Clock::default()
    };
    let mut points = Vec::new();
    let mut artifacts = None;
    let mut warnings = Vec::new();
    if !ds.meta.shortfall_classes.is_empty() {
        warnings.push(format!(
            "classes {:?} had fewer than dataset.per_class samples and were kept whole",
            ds.meta.shortfall_classes
        ));
    }
    let grid = grid(cfg);
    let mut any_corruption = false;
    for (index, point) in grid.iter().enumerate() {
        any_corruption |= point.corruption.kind != CorruptionKind::None;
        let mut rep = PointReport {
            index,
            lambda: point.lambda,
            eta: point.eta,
            kernel: point.kernel,
            corruption: point.corruption.kind,
            snr_db: point.corruption.snr_db.filter(|_| point.corruption.kind == CorruptionKind::GaussianSnr),
            ratio: point.corruption.ratio.filter(|_| point.corruption.kind == CorruptionKind::SaltPepper),
            graph_shared: point.corruption.kind == CorruptionKind::None,
            runs: Vec::new(),
            mean: None,
            std: None,
            error: None,
        };
        match run_point(cfg, &ds, point, cfg.output.dump_matrices && index == 0) {
            Ok(o) => {
                let (mean, std) = aggregate(&o.runs);
                rep.mean = Some(mean);
                rep.std = Some(std);
                rep.runs = o.runs;
                clock.t1.push(o.t1);
                clock.t2.push(o.t2);
                if o.artifacts.is_some() {
                    artifacts = o.artifacts;
                }
            }
            Err(e) => {
                rep.error = Some(e.to_string());
                clock.t1.push(Vec::new());
                clock.t2.push(Vec::new());
            }
        }
        points.push(rep);
    }
    let mut varying_streams = vec!["kmeans".to_string()];
    if any_corruption {
        varying_streams.push("corruption".into());
    }
    let report = RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode,
        complete: points.iter().all(|p| p.error.is_none()),
        config: cfg.clone(),
        dataset: DatasetSummary {
            source: ds.meta.source.clone(),
            n_samples: ds.n_samples(),
            dim: ds.x.dim(),
            n_classes: ds.n_classes(),
            original_range: ds.meta.original_range,
            rescaled: ds.meta.rescaled,
            value_range: ds.meta.value_range,
            shortfall_classes: ds.meta.shortfall_classes.clone(),
        },
        decisions: Decisions {
            threshold_mode: cfg.threshold.mode,
            zero_eigenvalues: if cfg.embedding.skip_zero_eigs { "skipped" } else { "kept" }.into(),
            clip_to_range: true,
            nmi_norm: cfg.metrics.nmi_norm,
            std_denominator: "n-1".into(),
            varying_streams,
        },
        points,
        warnings,
        clock,
    };
    Ok(Outcome { report, artifacts })
}

/// Runs `cfg` in double precision: a single point when no sweep is
/// configured, the full grid otherwise.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let mode = if cfg.sweep.is_empty() { Mode::Run } else { Mode::Sweep };
    Ok(run_experiment_as::<f64>(cfg, mode)?.report)
}

/// Sweeps corruption strength. Without an explicit `sweep.snr_db` or
/// `sweep.ratio` grid, a default grid matching `corruption.kind` is used.
/// Mean accuracy that rises with corruption strength only produces a warning.
pub fn corrupt_curve_as<T: Scalar>(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut cfg = cfg.clone();
    if cfg.sweep.snr_db.is_none() && cfg.sweep.ratio.is_none() {
        if cfg.corruption.kind == CorruptionKind::SaltPepper {
            cfg.sweep.ratio = Some(DEFAULT_RATIO_GRID.to_vec());
        } else {
            cfg.sweep.snr_db = Some(DEFAULT_SNR_GRID.to_vec());
        }
    }
    let mut outcome = run_experiment_as::<T>(&cfg, Mode::CorruptCurve)?;
    let warnings = monotonicity_warnings(&outcome.report.points);
    outcome.report.warnings.extend(warnings);
    Ok(outcome)
}

/// Compares mean accuracy between neighbouring corruption levels of points
/// that share kernel, lambda and eta.
pub fn monotonicity_warnings(points: &[PointReport]) -> Vec<String> {
    let severity = |p: &PointReport| match p.corruption {
        CorruptionKind::GaussianSnr => -p.snr_db.unwrap_or(f64::INFINITY),
        CorruptionKind::SaltPepper => p.ratio.unwrap_or(0.0),
        CorruptionKind::None => f64::NEG_INFINITY,
    };
    let mut warnings = Vec::new();
    let mut groups: Vec<Vec<&PointReport>> = Vec::new();
    for p in points.iter().filter(|p| p.mean.is_some()) {
        match groups
            .iter_mut()
            .find(|g| g[0].kernel == p.kernel && g[0].lambda == p.lambda && g[0].eta == p.eta)
        {
            Some(g) => g.push(p),
            None => groups.push(vec![p]),
        }
    }
    for mut g in groups {
        g.sort_by(|a, b| severity(a).total_cmp(&severity(b)));
        for w in g.windows(2) {
            let (milder, harsher) = (w[0].mean.unwrap().ac, w[1].mean.unwrap().ac);
            if harsher > milder + 1e-12 {
                warnings.push(format!(
                    "mean AC rose from {milder:.4} (point {}) to {harsher:.4} (point {}) under stronger corruption",
                    w[0].index, w[1].index
                ));
            }
        }
    }
    warnings
}
