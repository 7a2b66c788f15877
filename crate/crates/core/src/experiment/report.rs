//! Run reports and their JSON/CSV serialization.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corruption::CorruptionKind;
use crate::dataio::write_atomic;
use crate::error::Result;
use crate::kernels::KernelKind;
use crate::matrix::Matrix;
use crate::metrics::{NmiNorm, Scores};
use crate::solver::{FactorizationPath, ThresholdMode};

use super::config::ExperimentConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Run,
    Sweep,
    CorruptCurve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub source: String,
    pub n_samples: usize,
    pub dim: usize,
    pub n_classes: usize,
    pub original_range: (f64, f64),
    pub rescaled: bool,
    pub value_range: (f64, f64),
    pub shortfall_classes: Vec<usize>,
}

/// Interpretation choices that affect the numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decisions {
    pub threshold_mode: ThresholdMode,
    /// `"kept"`: the L smallest eigenvalues including zeros. `"skipped"`:
    /// near-zero eigenvalues are passed over first.
    pub zero_eigenvalues: String,
    /// Corrupted values are clipped back into the value range.
    pub clip_to_range: bool,
    pub nmi_norm: NmiNorm,
    /// Standard deviations use the `n - 1` denominator.
    pub std_denominator: String,
    /// Which random streams vary between runs.
    pub varying_streams: Vec<String>,
}

/// One trial at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub kmeans_seed: u64,
    pub corruption_seed: Option<u64>,
    pub scores: Scores,
    pub inertia: f64,
    pub factorization: FactorizationPath,
    pub sigma: Option<f64>,
    pub near_zero_eigenvalues: usize,
    pub isolated_vertices: usize,
    pub zero_embedding_rows: usize,
    pub guarded_entries: usize,
    pub clipped_entries: usize,
    pub corrupted_entries: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub index: usize,
    pub lambda: f64,
    pub eta: usize,
    pub kernel: KernelKind,
    pub corruption: CorruptionKind,
    pub snr_db: Option<f64>,
    pub ratio: Option<f64>,
    /// Clean data: the graph is built once and only k-means varies per run.
    pub graph_shared: bool,
    pub runs: Vec<RunRecord>,
    pub mean: Option<Scores>,
    pub std: Option<Scores>,
    pub error: Option<String>,
}

/// Wall-clock data, kept apart so the rest of the report is reproducible.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Clock {
    pub timestamp_unix: u64,
    /// Seconds per grid point and run: kernel, solve, threshold, affinity.
    pub t1: Vec<Vec<f64>>,
    /// Seconds per grid point and run: the whole pipeline.
    pub t2: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub mode: Mode,
    pub complete: bool,
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub decisions: Decisions,
    pub points: Vec<PointReport>,
    pub warnings: Vec<String>,
    pub clock: Clock,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per run and grid point, with the point's mean and std
    /// repeated on each row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "point,lambda,eta,kernel,corruption,snr_db,ratio,run,ac,nmi,ari,fscore,\
             mean_ac,std_ac,mean_nmi,std_nmi,mean_ari,std_ari,mean_fscore,std_fscore,t1,t2\n",
        );
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        for p in &self.points {
            let (Some(mean), Some(std)) = (p.mean, p.std) else {
                continue;
            };
            for r in &p.runs {
                let time = |t: &Vec<Vec<f64>>| {
                    t.get(p.index).and_then(|v| v.get(r.run)).map_or(String::new(), |v| v.to_string())
                };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    p.index,
                    p.lambda,
                    p.eta,
                    p.kernel.name(),
                    corruption_name(p.corruption),
                    opt(p.snr_db),
                    opt(p.ratio),
                    r.run,
                    r.scores.ac,
                    r.scores.nmi,
                    r.scores.ari,
                    r.scores.fscore,
                    mean.ac,
                    std.ac,
                    mean.nmi,
                    std.nmi,
                    mean.ari,
                    std.ari,
                    mean.fscore,
                    std.fscore,
                    time(&self.clock.t1),
                    time(&self.clock.t2),
                );
            }
        }
        out
    }
}

fn corruption_name(kind: CorruptionKind) -> &'static str {
    match kind {
        CorruptionKind::None => "none",
        CorruptionKind::GaussianSnr => "gaussian_snr",
        CorruptionKind::SaltPepper => "salt_pepper",
    }
}

/// Matrices of the first run at the first grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifacts {
    pub coefficients: Matrix<f64>,
    pub affinity: Matrix<f64>,
    pub embedding: Matrix<f64>,
}

pub fn matrix_csv(m: &Matrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(f64::to_string).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Writes `report.json`, `report.csv` and, when given, the matrix dumps into
/// `dir`. Returns the written paths.
pub fn emit_report(report: &RunReport, artifacts: Option<&Artifacts>, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        write_atomic(&path, body.as_bytes())?;
        written.push(path);
        Ok(())
    };
    put("report.json", report.to_json()?)?;
    put("report.csv", report.to_csv())?;
    if let Some(a) = artifacts {
        put("coefficients.csv", matrix_csv(&a.coefficients))?;
        put("affinity.csv", matrix_csv(&a.affinity))?;
        put("embedding.csv", matrix_csv(&a.embedding))?;
    }
    Ok(written)
}
