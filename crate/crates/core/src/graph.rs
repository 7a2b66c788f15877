//! Affinity graph, normalized Laplacian and spectral embedding.

use crate::error::{Error, Result};
use crate::linalg::SymmetricEigen;
use crate::matrix::Matrix;
use crate::scalar::{dot, Scalar};
use crate::solver::CoefficientMatrix;

/// Degree used in place of zero for isolated vertices.
pub const ISOLATED_DEGREE: f64 = 1e-12;

/// Eigenvalues at or below this count as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-8;

/// Symmetric nonnegative similarity matrix with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityMatrix<T> {
    pub values: Matrix<T>,
}

impl<T: Scalar> AffinityMatrix<T> {
    /// Wraps an arbitrary matrix after checking symmetry and sign.
    pub fn from_matrix(values: Matrix<T>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::DimensionMismatch {
                expected: values.rows(),
                found: values.cols(),
            });
        }
        if !values.is_symmetric_exact() {
            return Err(Error::InvalidParameter("affinity must be symmetric".into()));
        }
        if values.as_slice().iter().any(|&v| v < T::zero() || !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "affinity entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }
}

/// `W = |Cᵀ| + |C|`; requires a thresholded coefficient matrix.
pub fn build_affinity<T: Scalar>(c: &CoefficientMatrix<T>) -> Result<AffinityMatrix<T>> {
    if !c.thresholded {
        return Err(Error::Unthresholded);
    }
    let n = c.n();
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = c.values[(i, j)].abs() + c.values[(j, i)].abs();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(AffinityMatrix { values: w })
}

/// `I − D^{-1/2} W D^{-1/2}` plus the degree bookkeeping.
#[derive(Clone, Debug)]
pub struct Laplacian<T> {
    pub values: Matrix<T>,
    /// Row sums of `W` (before the isolated-vertex substitution).
    pub degrees: Vec<T>,
    /// Vertices with zero degree.
    pub isolated: Vec<usize>,
}

pub fn normalized_laplacian<T: Scalar>(w: &AffinityMatrix<T>) -> Laplacian<T> {
    let n = w.n();
    let degrees: Vec<T> = (0..n).map(|i| w.values.row(i).iter().copied().sum()).collect();
    let isolated: Vec<usize> = (0..n).filter(|&i| degrees[i] == T::zero()).collect();
    let inv_sqrt: Vec<T> = degrees
        .iter()
        .map(|&d| {
            let d = if d == T::zero() { T::of(ISOLATED_DEGREE) } else { d };
            T::one() / d.sqrt()
        })
        .collect();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let identity = if i == j { T::one() } else { T::zero() };
            let v = identity - w.values[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
            l[(i, j)] = v;
            l[(j, i)] = v;
        }
    }
    Laplacian {
        values: l,
        degrees,
        isolated,
    }
}

/// Rows of `y` are the embedded points.
#[derive(Clone, Debug)]
pub struct SpectralEmbedding<T> {
    /// `n × L`, rows normalized to unit length.
    pub y: Matrix<T>,
    /// The selected eigenvectors as columns, before row normalization.
    pub eigenvectors: Matrix<T>,
    /// Eigenvalues of the selected eigenvectors, ascending.
    pub eigenvalues: Vec<T>,
    /// Rows that were exactly zero and were left unnormalized.
    pub zero_rows: Vec<usize>,
    /// Count of eigenvalues of the whole Laplacian at or below
    /// [`ZERO_EIGENVALUE_TOL`].
    pub near_zero_eigenvalues: usize,
}

/// Embeds the graph using the eigenvectors of the `num_clusters` smallest
/// eigenvalues of `l`. With `skip_zero_eigs` the eigenvalues at or below
/// [`ZERO_EIGENVALUE_TOL`] are passed over first.
///
/// Each eigenvector's sign is fixed so that its largest-magnitude entry
/// (lowest index on ties) is positive.
pub fn spectral_embedding<T: Scalar>(
    l: &Matrix<T>,
    num_clusters: usize,
    skip_zero_eigs: bool,
) -> Result<SpectralEmbedding<T>> {
    let n = l.rows();
    if !l.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: l.cols(),
        });
    }
    if num_clusters == 0 || num_clusters >= n {
        return Err(Error::InvalidParameter(format!(
            "num_clusters must lie in [1, n-1] = [1, {}], got {num_clusters}",
            n.saturating_sub(1)
        )));
    }
    let eig = SymmetricEigen::new(l)?;
    let zero_tol = T::of(ZERO_EIGENVALUE_TOL);
    let near_zero = eig.values.iter().filter(|&&v| v <= zero_tol).count();
    let start = if skip_zero_eigs { near_zero } else { 0 };
    if start + num_clusters > n {
        return Err(Error::InvalidParameter(format!(
            "only {} nonzero eigenvalues available, {num_clusters} requested",
            n - start
        )));
    }
    let selected: Vec<usize> = (start..start + num_clusters).collect();

    let mut eigenvectors = Matrix::zeros(n, num_clusters);
    for (col, &j) in selected.iter().enumerate() {
        let mut v = eig.eigenvector(j).to_vec();
        let mut pivot = 0;
        for (r, x) in v.iter().enumerate() {
            if x.abs() > v[pivot].abs() {
                pivot = r;
            }
        }
        if v[pivot] < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        eigenvectors.set_column(col, &v);
    }

    let mut y = eigenvectors.clone();
    let mut zero_rows = Vec::new();
    for r in 0..n {
        let row = y.row_mut(r);
        let norm = dot(row, row).sqrt();
        if norm == T::zero() {
            zero_rows.push(r);
        } else {
            row.iter_mut().for_each(|x| *x /= norm);
        }
    }
    Ok(SpectralEmbedding {
        y,
        eigenvectors,
        eigenvalues: selected.iter().map(|&j| eig.values[j]).collect(),
        zero_rows,
        near_zero_eigenvalues: near_zero,
    })
}
