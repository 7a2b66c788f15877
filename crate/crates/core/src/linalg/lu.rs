use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{dot, Scalar};

/// LU factorization with complete pivoting: `P A Q = L U`.
///
/// Used when the regularized kernel is not positive definite.
#[derive(Clone, Debug)]
pub struct FullPivLu<T> {
    lu: Matrix<T>,
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
}

impl<T: Scalar> FullPivLu<T> {
    /// Fails with [`Error::DegenerateKernel`] when the best remaining pivot is
    /// below `n · ε · max|A|`.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        assert!(a.is_square(), "lu of a non-square matrix");
        let n = a.rows();
        let mut lu = a.clone();
        let mut row_perm: Vec<usize> = (0..n).collect();
        let mut col_perm: Vec<usize> = (0..n).collect();
        let tiny = T::of_usize(n.max(1)) * T::epsilon() * a.max_abs();

        for k in 0..n {
            let (mut p, mut q, mut best) = (k, k, T::zero());
            for i in k..n {
                for (j, v) in lu.row(i).iter().enumerate().skip(k) {
                    if v.abs() > best {
                        best = v.abs();
                        p = i;
                        q = j;
                    }
                }
            }
            if !(best > tiny) || !best.is_finite() {
                return Err(Error::DegenerateKernel {
                    step: k,
                    pivot: best.as_f64(),
                });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                row_perm.swap(k, p);
            }
            if q != k {
                for i in 0..n {
                    let tmp = lu[(i, k)];
                    lu[(i, k)] = lu[(i, q)];
                    lu[(i, q)] = tmp;
                }
                col_perm.swap(k, q);
            }
            let pivot = lu[(k, k)];
            let pivot_row: Vec<T> = lu.row(k)[k + 1..].to_vec();
            for i in k + 1..n {
                let l = lu[(i, k)] / pivot;
                lu[(i, k)] = l;
                let row = &mut lu.row_mut(i)[k + 1..];
                for (r, &u) in row.iter_mut().zip(&pivot_row) {
                    *r -= l * u;
                }
            }
        }
        Ok(Self {
            lu,
            row_perm,
            col_perm,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y: Vec<T> = self.row_perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dot(&self.lu.row(i)[..i], &y[..i]);
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s = dot(&row[i + 1..], &y[i + 1..]);
            y[i] = (y[i] - s) / row[i];
        }
        let mut x = vec![T::zero(); n];
        for (k, &c) in self.col_perm.iter().enumerate() {
            x[c] = y[k];
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.dim();
        let columns: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![T::zero(); n];
                e[j] = T::one();
                self.solve(&e)
            })
            .collect();
        let mut inv = Matrix::zeros(n, n);
        for (j, col) in columns.iter().enumerate() {
            inv.set_column(j, col);
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_indefinite_system() {
        let a = Matrix::<f64>::from_rows(&[vec![0.0, 2.0, 1.0], vec![2.0, 0.0, 3.0], vec![1.0, 3.0, -1.0]]);
        let lu = FullPivLu::new(&a).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = lu.solve(&b);
        for (r, bi) in a.matvec(&x).iter().zip(b) {
            assert!((r - bi).abs() < 1e-12);
        }
        let p = lu.inverse().matmul(&a);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p[(i, j)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reports_singular() {
        let a = Matrix::<f64>::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(
            FullPivLu::new(&a),
            Err(Error::DegenerateKernel { step: 1, .. })
        ));
    }
}
