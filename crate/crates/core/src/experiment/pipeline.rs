//! One pass of the clustering pipeline: kernel, codes, graph, embedding,
//! k-means.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::graph::{build_affinity, normalized_laplacian, spectral_embedding, AffinityMatrix, SpectralEmbedding};
use crate::kernels::{compute_kernel_matrix, KernelSpec};
use crate::kmeans::{kmeans, KMeansParams, Labeling};
use crate::matrix::DataMatrix;
use crate::scalar::Scalar;
use crate::solver::{fit_ktrr, hard_threshold, CoefficientMatrix, RegressionParams, ThresholdMode};

use super::config::ExperimentConfig;
use super::seeds::{derive_seed, Stream};

/// Everything needed to go from samples to an embedding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineParams {
    pub kernel: KernelSpec,
    pub regression: RegressionParams,
    pub threshold: ThresholdMode,
    pub num_clusters: usize,
    pub skip_zero_eigs: bool,
}

impl PipelineParams {
    pub fn new(kernel: KernelSpec, lambda: f64, eta: usize, num_clusters: usize) -> Self {
        Self {
            kernel,
            regression: RegressionParams::new(lambda, eta),
            threshold: ThresholdMode::default(),
            num_clusters,
            skip_zero_eigs: false,
        }
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            kernel: cfg.kernel,
            regression: RegressionParams::new(cfg.lambda, cfg.eta),
            threshold: cfg.threshold.mode,
            num_clusters: cfg.num_clusters,
            skip_zero_eigs: cfg.embedding.skip_zero_eigs,
        }
    }
}

/// k-means settings from the config with an explicit seed.
pub fn kmeans_params(cfg: &ExperimentConfig, seed: u64) -> KMeansParams {
    KMeansParams {
        k: cfg.num_clusters,
        restarts: cfg.kmeans.restarts,
        max_iters: cfg.kmeans.max_iters,
        seed,
        tol: cfg.kmeans.tol,
    }
}

/// Similarity graph and spectral embedding of one dataset.
#[derive(Clone, Debug)]
pub struct Graph<T> {
    /// Kernel with its bandwidth resolved.
    pub kernel: KernelSpec,
    pub guarded_entries: usize,
    pub coefficients: CoefficientMatrix<T>,
    pub affinity: AffinityMatrix<T>,
    pub isolated: Vec<usize>,
    pub embedding: SpectralEmbedding<T>,
    /// Kernel, solve, threshold and affinity.
    pub t1: Duration,
    /// Everything up to and including the embedding.
    pub elapsed: Duration,
}

pub fn build_graph<T: Scalar>(x: &DataMatrix<T>, p: &PipelineParams) -> Result<Graph<T>> {
    let start = Instant::now();
    let k = compute_kernel_matrix(x, &p.kernel).map_err(Error::at("kernel"))?;
    let c = fit_ktrr(&k, &p.regression).map_err(Error::at("solver"))?;
    let c = hard_threshold(&c, p.regression.eta, p.threshold);
    let w = build_affinity(&c).map_err(Error::at("affinity"))?;
    let t1 = start.elapsed();
    let lap = normalized_laplacian(&w);
    let embedding =
        spectral_embedding(&lap.values, p.num_clusters, p.skip_zero_eigs).map_err(Error::at("embedding"))?;
    Ok(Graph {
        kernel: k.spec,
        guarded_entries: k.guarded_entries,
        coefficients: c,
        affinity: w,
        isolated: lap.isolated,
        embedding,
        t1,
        elapsed: start.elapsed(),
    })
}

pub fn cluster_pipeline_with<T: Scalar>(
    x: &DataMatrix<T>,
    p: &PipelineParams,
    km: &KMeansParams,
) -> Result<Labeling> {
    let g = build_graph(x, p)?;
    kmeans(&g.embedding.y, km).map_err(Error::at("kmeans"))
}

/// Clusters `x` with the settings of `cfg` and the first run's k-means seed.
pub fn cluster_pipeline<T: Scalar>(x: &DataMatrix<T>, cfg: &ExperimentConfig) -> Result<Labeling> {
    cfg.validate()?;
    let km = kmeans_params(cfg, derive_seed(cfg.seed, 0, Stream::KMeans));
    cluster_pipeline_with(x, &PipelineParams::from_config(cfg), &km)
}
