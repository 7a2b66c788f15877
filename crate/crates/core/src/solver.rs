//! Closed-form kernel self-expression with a zero self-coefficient, followed
//! by per-column hard thresholding.
//!
//! For each sample `i` the code `c_i` minimizes
//! `½‖φ(x_i) − Φc‖² + (λ/2)‖c‖²` subject to `c[i] = 0`. With
//! `U = (K + λI)⁻¹` and `v_i = U k_i` the minimizer is
//! `c_i = v_i − U e_i · v_i[i] / U_ii`, so one factorization of `K + λI`
//! serves every column.

use std::cell::Cell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelMatrix;
use crate::linalg::{Cholesky, FullPivLu};
use crate::matrix::Matrix;
use crate::scalar::{dot, Scalar};

thread_local! {
    static FACTORIZATIONS: Cell<u64> = const { Cell::new(0) };
}

/// Number of `K + λI` factorizations performed on the calling thread so far.
pub fn factorization_count() -> u64 {
    FACTORIZATIONS.with(Cell::get)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionParams {
    /// ℓ2 weight λ.
    pub lambda: f64,
    /// Entries kept per column after thresholding (η).
    pub eta: usize,
}

impl RegressionParams {
    pub fn new(lambda: f64, eta: usize) -> Self {
        Self { lambda, eta }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        if self.eta == 0 || self.eta + 1 > n {
            return Err(Error::InvalidParameter(format!(
                "eta must lie in [1, n-1] = [1, {}], got {}",
                n.saturating_sub(1),
                self.eta
            )));
        }
        Ok(())
    }
}

/// How "the η largest entries" of a column are ranked.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// By absolute value.
    #[default]
    Magnitude,
    /// By signed value.
    Signed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorizationPath {
    Cholesky,
    FullPivLu,
}

#[derive(Clone, Debug)]
enum Decomposition<T> {
    Cholesky(Cholesky<T>),
    Lu(FullPivLu<T>),
}

/// Factorization of `K + λI` together with its explicit inverse `U`.
#[derive(Clone, Debug)]
pub struct Factorization<T> {
    decomposition: Decomposition<T>,
    inverse: Matrix<T>,
    lambda: f64,
}

impl<T: Scalar> Factorization<T> {
    pub fn path(&self) -> FactorizationPath {
        match self.decomposition {
            Decomposition::Cholesky(_) => FactorizationPath::Cholesky,
            Decomposition::Lu(_) => FactorizationPath::FullPivLu,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.inverse.rows()
    }

    /// `U = (K + λI)⁻¹`.
    pub fn inverse(&self) -> &Matrix<T> {
        &self.inverse
    }

    /// Solves `(K + λI) x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        match &self.decomposition {
            Decomposition::Cholesky(c) => c.solve(b),
            Decomposition::Lu(lu) => lu.solve(b),
        }
    }
}

/// Factors `K + λI`, trying Cholesky first and falling back to LU with
/// complete pivoting for indefinite kernels.
pub fn factor_regularized_kernel<T: Scalar>(
    k: &KernelMatrix<T>,
    lambda: f64,
) -> Result<Factorization<T>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    let n = k.n();
    let mut a = k.values.clone();
    let lam = T::of(lambda);
    for i in 0..n {
        a[(i, i)] += lam;
    }
    FACTORIZATIONS.with(|c| c.set(c.get() + 1));
    let (decomposition, inverse) = match Cholesky::new(&a) {
        Some(ch) => {
            let inv = ch.inverse();
            (Decomposition::Cholesky(ch), inv)
        }
        None => {
            let lu = FullPivLu::new(&a)?;
            let inv = lu.inverse();
            (Decomposition::Lu(lu), inv)
        }
    };
    if !inverse.is_finite() {
        return Err(Error::DegenerateKernel {
            step: n,
            pivot: f64::NAN,
        });
    }
    Ok(Factorization {
        decomposition,
        inverse,
        lambda,
    })
}

/// Self-expression code `c_i` of sample `i`.
pub fn solve_column<T: Scalar>(
    fact: &Factorization<T>,
    k: &KernelMatrix<T>,
    i: usize,
) -> Result<Vec<T>> {
    let n = k.n();
    if i >= n {
        return Err(Error::InvalidParameter(format!(
            "column index {i} out of range for n = {n}"
        )));
    }
    if fact.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: fact.dim(),
        });
    }
    let u = fact.inverse();
    let k_i = k.column(i);
    let v: Vec<T> = (0..n).map(|r| dot(u.row(r), k_i)).collect();
    let u_ii = u[(i, i)];
    if u_ii == T::zero() || !u_ii.is_finite() {
        return Err(Error::DegenerateColumn(i));
    }
    let scale = v[i] / u_ii;
    let mut c: Vec<T> = v
        .iter()
        .enumerate()
        .map(|(r, &vr)| vr - u[(r, i)] * scale)
        .collect();
    debug_assert!(
        c[i].abs() <= T::of(1e-6) * (T::one() + v[i].abs()),
        "self coefficient residue too large"
    );
    c[i] = T::zero();
    Ok(c)
}

/// Coefficient matrix whose column `i` is the code of sample `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix<T> {
    pub values: Matrix<T>,
    pub thresholded: bool,
    pub path: FactorizationPath,
}

impl<T: Scalar> CoefficientMatrix<T> {
    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn column(&self, i: usize) -> Vec<T> {
        self.values.column(i)
    }

    /// Nonzero count of column `i`.
    pub fn column_nnz(&self, i: usize) -> usize {
        (0..self.n())
            .filter(|&r| self.values[(r, i)] != T::zero())
            .count()
    }
}

/// Computes every column through one shared factorization.
pub fn fit_ktrr<T: Scalar>(
    k: &KernelMatrix<T>,
    params: &RegressionParams,
) -> Result<CoefficientMatrix<T>> {
    let n = k.n();
    params.validate(n)?;
    let fact = factor_regularized_kernel(k, params.lambda)?;
    let columns = (0..n)
        .into_par_iter()
        .map(|i| solve_column(&fact, k, i))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Matrix::zeros(n, n);
    for (i, col) in columns.iter().enumerate() {
        values.set_column(i, col);
    }
    Ok(CoefficientMatrix {
        values,
        thresholded: false,
        path: fact.path(),
    })
}

/// Keeps the `eta` top-ranked entries of each column and zeroes the rest.
/// Ties at the boundary go to the lower index. The diagonal never counts.
pub fn hard_threshold<T: Scalar>(
    c: &CoefficientMatrix<T>,
    eta: usize,
    mode: ThresholdMode,
) -> CoefficientMatrix<T> {
    let n = c.n();
    let mut values = Matrix::zeros(n, n);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        let col = c.column(i);
        order.clear();
        order.extend((0..n).filter(|&r| r != i));
        let key = |r: usize| match mode {
            ThresholdMode::Magnitude => col[r].abs(),
            ThresholdMode::Signed => col[r],
        };
        // stable sort keeps ascending index order among equal keys
        order.sort_by(|&a, &b| {
            key(b)
                .partial_cmp(&key(a))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for &r in order.iter().take(eta) {
            values[(r, i)] = col[r];
        }
    }
    CoefficientMatrix {
        values,
        thresholded: true,
        path: c.path,
    }
}

/// `½(K_ii − 2cᵀk_i + cᵀKc) + (λ/2)cᵀc`, the per-sample objective evaluated
/// through the kernel matrix only.
pub fn objective<T: Scalar>(k: &KernelMatrix<T>, i: usize, c: &[T], lambda: f64) -> T {
    let half = T::of(0.5);
    let kc = k.values.matvec(c);
    half * (k.values[(i, i)] - T::of(2.0) * dot(c, k.column(i)) + dot(c, &kc))
        + T::of(lambda) * half * dot(c, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn km(rows: &[Vec<f64>]) -> KernelMatrix<f64> {
        KernelMatrix::from_matrix(Matrix::from_rows(rows)).unwrap()
    }

    fn coeffs(values: Matrix<f64>) -> CoefficientMatrix<f64> {
        CoefficientMatrix {
            values,
            thresholded: false,
            path: FactorizationPath::Cholesky,
        }
    }

    #[test]
    fn identity_kernel_solve() {
        let k = km(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let f = factor_regularized_kernel(&k, 1.0).unwrap();
        assert_eq!(f.path(), FactorizationPath::Cholesky);
        let x = f.solve(&[1.0, 0.0]);
        assert!((x[0] - 0.5).abs() < 1e-15 && x[1] == 0.0);
        assert_eq!(solve_column(&f, &k, 0).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn duplicate_points_inverse_and_codes() {
        let k = km(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let f = factor_regularized_kernel(&k, 1.0).unwrap();
        let want = [2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0];
        for (u, w) in f.inverse().as_slice().iter().zip(want) {
            assert!((u - w).abs() < 1e-15);
        }
        // scalar ridge: K12 / (K22 + λ)
        let c = fit_ktrr(&k, &RegressionParams::new(1.0, 1)).unwrap();
        assert_eq!(c.values[(0, 0)], 0.0);
        assert!((c.values[(1, 0)] - 0.5).abs() < 1e-15);
        assert!((c.values[(0, 1)] - 0.5).abs() < 1e-15);
        assert!(!c.thresholded);
    }

    #[test]
    fn orthogonal_points_give_zero_codes() {
        let k = km(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let c = fit_ktrr(&k, &RegressionParams::new(1.0, 1)).unwrap();
        assert!(c.values.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn indefinite_kernel_falls_back_to_lu() {
        let k = km(&[
            vec![0.0, 3.0, 1.0],
            vec![3.0, 0.0, 2.0],
            vec![1.0, 2.0, 0.0],
        ]);
        let f = factor_regularized_kernel(&k, 0.5).unwrap();
        assert_eq!(f.path(), FactorizationPath::FullPivLu);
        let c = fit_ktrr(&k, &RegressionParams::new(0.5, 1)).unwrap();
        assert_eq!(c.path, FactorizationPath::FullPivLu);
        for i in 0..3 {
            assert_eq!(c.values[(i, i)], 0.0);
        }
    }

    #[test]
    fn singular_regularized_kernel_is_reported() {
        // eigenvalues of K are ±1, so K + 1·I is singular
        let k = km(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(
            factor_regularized_kernel(&k, 1.0),
            Err(Error::DegenerateKernel { .. })
        ));
    }

    #[test]
    fn parameter_validation() {
        assert!(RegressionParams::new(0.0, 1).validate(3).is_err());
        assert!(RegressionParams::new(1.0, 0).validate(3).is_err());
        assert!(RegressionParams::new(1.0, 3).validate(3).is_err());
        assert!(RegressionParams::new(1.0, 2).validate(3).is_ok());
    }

    #[test]
    fn threshold_by_magnitude() {
        let mut m = Matrix::zeros(5, 5);
        // column 4 holds [0.5, -0.9, 0.1, 0.3, 0]
        m.set_column(4, &[0.5, -0.9, 0.1, 0.3, 0.0]);
        let t = hard_threshold(&coeffs(m), 2, ThresholdMode::Magnitude);
        assert_eq!(t.column(4), vec![0.5, -0.9, 0.0, 0.0, 0.0]);
        assert!(t.thresholded);
    }

    #[test]
    fn threshold_signed_mode() {
        let mut m = Matrix::zeros(5, 5);
        m.set_column(4, &[0.5, -0.9, 0.1, 0.3, 0.0]);
        let t = hard_threshold(&coeffs(m), 2, ThresholdMode::Signed);
        assert_eq!(t.column(4), vec![0.5, 0.0, 0.0, 0.3, 0.0]);
    }

    #[test]
    fn threshold_ties_prefer_lower_index() {
        let mut m = Matrix::zeros(4, 4);
        m.set_column(3, &[0.5, 0.5, 0.5, 0.0]);
        let t = hard_threshold(&coeffs(m), 2, ThresholdMode::Magnitude);
        assert_eq!(t.column(3), vec![0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn threshold_full_eta_is_identity() {
        let m = Matrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { (i * 4 + j) as f64 - 7.5 });
        let c = coeffs(m.clone());
        let t = hard_threshold(&c, 3, ThresholdMode::Magnitude);
        assert_eq!(t.values, m);
    }

    #[test]
    fn huge_lambda_shrinks_codes() {
        let k = km(&[
            vec![1.0, 0.8, 0.3],
            vec![0.8, 1.0, 0.5],
            vec![0.3, 0.5, 1.0],
        ]);
        let c = fit_ktrr(&k, &RegressionParams::new(1e6, 2)).unwrap();
        assert!(c.values.max_abs() <= 1e-4);
    }

    #[test]
    fn f32_path() {
        let k = KernelMatrix::from_matrix(Matrix::from_rows(&[vec![1.0f32, 1.0], vec![1.0, 1.0]])).unwrap();
        let c = fit_ktrr(&k, &RegressionParams::new(1.0, 1)).unwrap();
        assert!((c.values[(1, 0)] - 0.5).abs() < 1e-6);
    }
}
