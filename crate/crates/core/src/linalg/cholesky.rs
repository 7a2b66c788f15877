use rayon::prelude::*;

use crate::matrix::Matrix;
use crate::scalar::{dot, Scalar};

/// `A = L Lᵀ` factorization of a symmetric positive definite matrix.
///
/// Only the lower triangle of the input is read.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    /// Lower factor, row-major.
    lower: Matrix<T>,
    /// `Lᵀ`, kept so that back substitution walks contiguous rows.
    upper: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Returns `None` when a non-positive or non-finite pivot shows up.
    pub fn new(a: &Matrix<T>) -> Option<Self> {
        assert!(a.is_square(), "cholesky of a non-square matrix");
        let n = a.rows();
        let mut lower = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s = a[(i, j)] - dot(&lower.row(i)[..j], &lower.row(j)[..j]);
                if i == j {
                    if !(s > T::zero()) || !s.is_finite() {
                        return None;
                    }
                    lower[(i, i)] = s.sqrt();
                } else {
                    lower[(i, j)] = s / lower[(j, j)];
                }
            }
        }
        let upper = lower.transpose();
        Some(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn lower(&self) -> &Matrix<T> {
        &self.lower
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let row = self.lower.row(i);
            y[i] = (b[i] - dot(&row[..i], &y[..i])) / row[i];
        }
        self.back_substitute(y)
    }

    /// Solves `A x = e_j`; the forward sweep skips the leading zeros.
    pub fn solve_unit(&self, j: usize) -> Vec<T> {
        let n = self.dim();
        let mut y = vec![T::zero(); n];
        for i in j..n {
            let row = self.lower.row(i);
            let rhs = if i == j { T::one() } else { T::zero() };
            y[i] = (rhs - dot(&row[j..i], &y[j..i])) / row[i];
        }
        self.back_substitute(y)
    }

    fn back_substitute(&self, mut y: Vec<T>) -> Vec<T> {
        let n = self.dim();
        for i in (0..n).rev() {
            let row = self.upper.row(i);
            let s = dot(&row[i + 1..], &y[i + 1..]);
            y[i] = (y[i] - s) / row[i];
        }
        y
    }

    /// Explicit inverse; exactly symmetric (upper triangle mirrored).
    pub fn inverse(&self) -> Matrix<T> {
        let n = self.dim();
        let columns: Vec<Vec<T>> = (0..n).into_par_iter().map(|j| self.solve_unit(j)).collect();
        let mut inv = Matrix::zeros(n, n);
        for (j, col) in columns.iter().enumerate() {
            for i in 0..=j {
                inv[(i, j)] = col[i];
                inv[(j, i)] = col[i];
            }
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_known_matrix() {
        let a = Matrix::<f64>::from_rows(&[
            vec![4.0, 12.0, -16.0],
            vec![12.0, 37.0, -43.0],
            vec![-16.0, -43.0, 98.0],
        ]);
        let ch = Cholesky::new(&a).unwrap();
        let expected = [2.0, 0.0, 0.0, 6.0, 1.0, 0.0, -8.0, 5.0, 3.0];
        for (got, want) in ch.lower().as_slice().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        let x = ch.solve(&[1.0, 2.0, 3.0]);
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((ri - bi).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = Matrix::<f64>::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(Cholesky::new(&a).is_none());
    }

    #[test]
    fn inverse_is_symmetric_and_correct() {
        let a = Matrix::<f64>::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]]);
        let inv = Cholesky::new(&a).unwrap().inverse();
        assert!(inv.is_symmetric_exact());
        let p = inv.matmul(&a);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p[(i, j)] - want).abs() < 1e-12);
            }
        }
    }
}
