//! Kernel truncated regression representation (KTRR) for subspace clustering.
//!
//! Each sample is expressed as a ridge-regularized combination of the others
//! in kernel space, with its own coefficient pinned to zero. All columns share
//! one factorization of `K + λI`. The coefficients are hard-thresholded,
//! symmetrized into an affinity, and clustered spectrally.
//!
//! ```
//! use ktrr::{synthetic, experiment::{cluster_pipeline_with, PipelineParams}};
//! use ktrr::{KernelKind, KernelSpec, KMeansParams};
//!
//! let ds = synthetic::linear_subspaces::<f64>(3, 30, 3, 10, 1).unwrap();
//! let params = PipelineParams::new(KernelSpec::new(KernelKind::Linear), 0.1, 5, 3);
//! let out = cluster_pipeline_with(&ds.x, &params, &KMeansParams::new(3, 0).with_restarts(10)).unwrap();
//! assert_eq!(ktrr::metrics::accuracy(&out.labels, &ds.truth).unwrap(), 1.0);
//! ```

pub mod corruption;
pub mod dataio;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod kernels;
pub mod kmeans;
pub mod linalg;
pub mod matrix;
pub mod metrics;
mod scalar;
pub mod solver;
pub mod synthetic;

pub use corruption::{corrupt, CorruptionKind, CorruptionSpec};
pub use dataio::{Dataset, DatasetMeta};
pub use error::{Error, Result};
pub use graph::{build_affinity, normalized_laplacian, spectral_embedding, AffinityMatrix};
pub use kernels::{compute_kernel_matrix, default_bandwidth, Bandwidth, KernelKind, KernelMatrix, KernelSpec};
pub use kmeans::{kmeans, KMeansParams, Labeling};
pub use matrix::{DataMatrix, Matrix};
pub use metrics::{evaluate, NmiNorm, Scores};
pub use scalar::Scalar;
pub use solver::{
    factorization_count, fit_ktrr, hard_threshold, solve_column, CoefficientMatrix, FactorizationPath,
    RegressionParams, ThresholdMode,
};

pub type MatrixF64 = Matrix<f64>;
pub type MatrixF32 = Matrix<f32>;
pub type DataMatrixF64 = DataMatrix<f64>;
pub type DataMatrixF32 = DataMatrix<f32>;
pub type KernelMatrixF64 = KernelMatrix<f64>;
pub type KernelMatrixF32 = KernelMatrix<f32>;
pub type CoefficientMatrixF64 = CoefficientMatrix<f64>;
pub type CoefficientMatrixF32 = CoefficientMatrix<f32>;
pub type AffinityMatrixF64 = AffinityMatrix<f64>;
pub type AffinityMatrixF32 = AffinityMatrix<f32>;
pub type DatasetF64 = Dataset<f64>;
pub type DatasetF32 = Dataset<f32>;
