//! Experiment configuration: a TOML file plus `key.path=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corruption::{CorruptionKind, CorruptionSpec};
use crate::error::{Error, Result};
use crate::kernels::{KernelKind, KernelSpec};
use crate::metrics::NmiNorm;
use crate::solver::ThresholdMode;

/// Every accepted key with a short description, in file order.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("seed", "master seed (integer, default 0)"),
    ("runs", "trials per grid point (default 10)"),
    ("num_clusters", "number of clusters L (required)"),
    ("lambda", "ridge parameter, > 0 (default 0.1)"),
    ("eta", "coefficients kept per column, in [1, n-1] (default 5)"),
    ("dataset.kind", "csv | idx | circles | subspaces (required)"),
    ("dataset.path", "csv: input file"),
    ("dataset.label_column", "csv: zero-based label column (default last)"),
    ("dataset.images", "idx: image file"),
    ("dataset.labels", "idx: label file"),
    ("dataset.per_class", "keep this many samples per class (optional)"),
    ("dataset.first_k", "keep the first k classes by appearance (optional)"),
    ("dataset.radii", "circles: ring radii (default [1, 5])"),
    ("dataset.per_cluster", "circles/subspaces: points per cluster (default 100)"),
    ("dataset.noise", "circles: jitter standard deviation (default 0.05)"),
    ("dataset.count", "subspaces: number of subspaces (default 3)"),
    ("dataset.ambient", "subspaces: ambient dimension (default 30)"),
    ("dataset.sub_dim", "subspaces: subspace dimension (default 3)"),
    ("dataset.seed", "synthetic generation and subsampling seed (default derived from seed)"),
    ("kernel.kind", "gaussian | heat | poly2 | poly3 | exponential | inv_dist | inv_dist_sq | linear"),
    ("kernel.sigma", "bandwidth, a positive number or \"auto\" (default auto)"),
    ("kernel.diag_guard", "distance floor for inverse-distance kernels (default 1e-8)"),
    ("threshold.mode", "magnitude | signed (default magnitude)"),
    ("embedding.skip_zero_eigs", "skip near-zero Laplacian eigenvalues (default false)"),
    ("kmeans.restarts", "k-means++ restarts (default 500)"),
    ("kmeans.max_iters", "Lloyd iterations per restart (default 100)"),
    ("kmeans.tol", "relative inertia tolerance (default 1e-9)"),
    ("corruption.kind", "none | gaussian_snr | salt_pepper (default none)"),
    ("corruption.snr_db", "gaussian_snr: target SNR in dB"),
    ("corruption.ratio", "salt_pepper: fraction of entries hit"),
    ("corruption.low", "lower value bound (default 0, or data minimum for synthetic data)"),
    ("corruption.high", "upper value bound (default 1, or data maximum for synthetic data)"),
    ("corruption.seed", "base seed for corruption streams (default seed)"),
    ("metrics.nmi_norm", "sqrt | max | min (default sqrt)"),
    ("sweep.lambda", "grid of lambda values"),
    ("sweep.eta", "grid of eta values"),
    ("sweep.snr_db", "grid of SNR values (implies gaussian_snr)"),
    ("sweep.ratio", "grid of salt-and-pepper ratios (implies salt_pepper)"),
    ("sweep.kernel", "grid of kernel kinds"),
    ("output.dir", "report directory (default \"out\"); relative paths resolve against the config file"),
    ("output.dump_matrices", "also write coefficients, affinity and embedding CSVs (default false)"),
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Csv,
    Idx,
    #[default]
    Circles,
    Subspaces,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_k: Option<usize>,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_per_cluster")]
    pub per_cluster: usize,
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_ambient")]
    pub ambient: usize,
    #[serde(default = "default_sub_dim")]
    pub sub_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_radii() -> Vec<f64> {
    vec![1.0, 5.0]
}
fn default_per_cluster() -> usize {
    100
}
fn default_noise() -> f64 {
    0.05
}
fn default_count() -> usize {
    3
}
fn default_ambient() -> usize {
    30
}
fn default_sub_dim() -> usize {
    3
}

impl DatasetConfig {
    pub fn circles() -> Self {
        Self {
            kind: DatasetKind::Circles,
            path: None,
            label_column: None,
            images: None,
            labels: None,
            per_class: None,
            first_k: None,
            radii: default_radii(),
            per_cluster: default_per_cluster(),
            noise: default_noise(),
            count: default_count(),
            ambient: default_ambient(),
            sub_dim: default_sub_dim(),
            seed: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    #[serde(default)]
    pub mode: ThresholdMode,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    #[serde(default)]
    pub skip_zero_eigs: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KMeansConfig {
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_restarts() -> usize {
    500
}
fn default_max_iters() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-9
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: default_restarts(),
            max_iters: default_max_iters(),
            tol: default_tol(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionConfig {
    #[serde(default)]
    pub kind: CorruptionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CorruptionConfig {
    /// Builds the spec for one trial. `range` is used where no bound is set.
    pub fn spec(&self, range: (f64, f64), seed: u64) -> Result<CorruptionSpec> {
        let spec = match self.kind {
            CorruptionKind::None => CorruptionSpec::none(),
            CorruptionKind::GaussianSnr => CorruptionSpec::gaussian_snr(
                self.snr_db
                    .ok_or_else(|| Error::Config("corruption.snr_db is required for gaussian_snr".into()))?,
                seed,
            ),
            CorruptionKind::SaltPepper => CorruptionSpec::salt_pepper(
                self.ratio
                    .ok_or_else(|| Error::Config("corruption.ratio is required for salt_pepper".into()))?,
                seed,
            ),
        };
        let spec = spec.with_range(self.low.unwrap_or(range.0), self.high.unwrap_or(range.1));
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    #[serde(default)]
    pub nmi_norm: NmiNorm,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Vec<KernelKind>>,
}

impl SweepConfig {
    pub fn is_empty(&self) -> bool {
        self.lambda.is_none()
            && self.eta.is_none()
            && self.snr_db.is_none()
            && self.ratio.is_none()
            && self.kernel.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub dump_matrices: bool,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            dump_matrices: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    pub num_clusters: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_eta")]
    pub eta: usize,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub threshold: ThresholdConfig,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub kmeans: KMeansConfig,
    #[serde(default)]
    pub corruption: CorruptionConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_runs() -> usize {
    10
}
fn default_lambda() -> f64 {
    0.1
}
fn default_eta() -> usize {
    5
}

impl ExperimentConfig {
    /// Defaults around the given dataset.
    pub fn new(dataset: DatasetConfig, num_clusters: usize) -> Self {
        Self {
            seed: 0,
            runs: default_runs(),
            num_clusters,
            lambda: default_lambda(),
            eta: default_eta(),
            dataset,
            kernel: KernelSpec::default(),
            threshold: ThresholdConfig::default(),
            embedding: EmbeddingConfig::default(),
            kmeans: KMeansConfig::default(),
            corruption: CorruptionConfig::default(),
            metrics: MetricsConfig::default(),
            sweep: SweepConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with(text, &[])
    }

    /// Parses `text`, applies `key.path=value` overrides, and validates.
    /// Values are read as TOML literals, falling back to bare strings.
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_with(&text, overrides)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    /// Makes relative file paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let d = &mut self.dataset;
        for p in [&mut d.path, &mut d.images, &mut d.labels].into_iter().flatten() {
            fix(p);
        }
        fix(&mut self.output.dir);
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.runs == 0 {
            return bad("runs must be positive".into());
        }
        if self.num_clusters == 0 {
            return bad("num_clusters must be positive".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if self.eta == 0 {
            return bad("eta must be at least 1".into());
        }
        self.kernel.validate()?;
        if self.kmeans.restarts == 0 || self.kmeans.max_iters == 0 {
            return bad("kmeans.restarts and kmeans.max_iters must be positive".into());
        }
        let d = &self.dataset;
        match d.kind {
            DatasetKind::Csv if d.path.is_none() => return bad("dataset.path is required for csv".into()),
            DatasetKind::Idx if d.images.is_none() || d.labels.is_none() => {
                return bad("dataset.images and dataset.labels are required for idx".into())
            }
            _ => {}
        }
        if d.per_class == Some(0) || d.first_k == Some(0) {
            return bad("dataset.per_class and dataset.first_k must be positive".into());
        }
        let s = &self.sweep;
        let empty = [
            ("lambda", s.lambda.as_ref().map(Vec::len)),
            ("eta", s.eta.as_ref().map(Vec::len)),
            ("snr_db", s.snr_db.as_ref().map(Vec::len)),
            ("ratio", s.ratio.as_ref().map(Vec::len)),
            ("kernel", s.kernel.as_ref().map(Vec::len)),
        ];
        if let Some((key, _)) = empty.iter().find(|(_, len)| *len == Some(0)) {
            return bad(format!("sweep.{key} must not be empty"));
        }
        if s.snr_db.is_some() && s.ratio.is_some() {
            return bad("sweep.snr_db and sweep.ratio cannot be combined".into());
        }
        if let Some(l) = s.lambda.as_ref().and_then(|v| v.iter().find(|l| !(**l > 0.0 && l.is_finite()))) {
            return bad(format!("sweep.lambda values must be positive, got {l}"));
        }
        if s.eta.as_ref().is_some_and(|v| v.contains(&0)) {
            return bad("sweep.eta values must be at least 1".into());
        }
        Ok(())
    }
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    if !CONFIG_KEYS.iter().any(|(k, _)| *k == key) {
        return Err(Error::Config(format!("unknown key {key:?}")));
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop().expect("split yields at least one part");
    let mut cur = table;
    for p in parts {
        cur = cur
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{p} is not a table")))?;
    }
    cur.insert(leaf.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Bandwidth;

    const MINIMAL: &str = "num_clusters = 2\n[dataset]\nkind = \"circles\"\n";

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.runs, 10);
        assert_eq!(cfg.kmeans.restarts, 500);
        assert_eq!(cfg.kernel.bandwidth, Bandwidth::Auto);
        assert_eq!(cfg, ExperimentConfig::new(DatasetConfig::circles(), 2));
    }

    #[test]
    fn overrides() {
        let cfg = ExperimentConfig::from_toml_with(
            MINIMAL,
            &[
                "kernel.sigma=2.5".into(),
                "kernel.kind=linear".into(),
                "sweep.lambda=[0.1, 1.0]".into(),
                "runs=3".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.kernel.bandwidth, Bandwidth::Fixed(2.5));
        assert_eq!(cfg.kernel.kind, KernelKind::Linear);
        assert_eq!(cfg.sweep.lambda, Some(vec![0.1, 1.0]));
        assert_eq!(cfg.runs, 3);
        assert!(ExperimentConfig::from_toml_with(MINIMAL, &["nope=1".into()]).is_err());
        assert!(ExperimentConfig::from_toml_with(MINIMAL, &["runs".into()]).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        for extra in [
            "runs = 0",
            "lambda = -1.0",
            "eta = 0",
            "[sweep]\nlambda = []",
            "[sweep]\nsnr_db = [10.0]\nratio = [0.1]",
            "[kernel]\nkind = \"gaussian\"\nsigma = \"wide\"",
            "bogus = 1",
        ] {
            let text = format!("{extra}\n{MINIMAL}");
            let text = if extra.starts_with('[') { format!("{MINIMAL}{extra}\n") } else { text };
            assert!(ExperimentConfig::from_toml_str(&text).is_err(), "{extra}");
        }
    }

    #[test]
    fn every_key_is_accepted() {
        for (key, _) in CONFIG_KEYS {
            let value = match *key {
                "dataset.kind" => "\"circles\"",
                "kernel.kind" => "\"gaussian\"",
                "threshold.mode" => "\"magnitude\"",
                "corruption.kind" => "\"none\"",
                "metrics.nmi_norm" => "\"sqrt\"",
                "sweep.kernel" => "[\"linear\"]",
                "sweep.lambda" | "sweep.snr_db" | "sweep.ratio" | "dataset.radii" => "[1.0]",
                "sweep.eta" => "[2]",
                "kernel.sigma" => "\"auto\"",
                "dataset.path" | "dataset.images" | "dataset.labels" | "output.dir" => "\"x\"",
                "embedding.skip_zero_eigs" | "output.dump_matrices" => "true",
                "lambda" | "kernel.diag_guard" | "kmeans.tol" | "dataset.noise" | "corruption.snr_db"
                | "corruption.ratio" | "corruption.low" => "0.5",
                "corruption.high" => "1.5",
                _ => "2",
            };
            let r = ExperimentConfig::from_toml_with(MINIMAL, &[format!("{key}={value}")]);
            assert!(r.is_ok(), "{key}: {r:?}");
        }
    }
}
