//! Dense linear algebra kernels used by the solver and the spectral step.
//!
//! Everything here is generic over [`Scalar`](crate::Scalar) and operates on
//! row-major [`Matrix`](crate::Matrix) storage.

mod cholesky;
mod eigen;
mod lu;

pub use cholesky::Cholesky;
pub use eigen::SymmetricEigen;
pub use lu::FullPivLu;
