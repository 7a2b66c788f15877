// Householder tridiagonalization followed by the implicit QL algorithm, after
// the EISPACK tred2/tql2 pair as popularized by JAMA. The working array stores
// the transformation matrix transposed so every inner loop is contiguous.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

const MAX_QL_ITERATIONS: usize = 64;

/// Eigendecomposition of a real symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    /// Eigenvalues in ascending order.
    pub values: Vec<T>,
    /// Row `j` is the unit eigenvector of `values[j]`.
    vectors: Matrix<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    /// Decomposes `a`, reading only its lower triangle.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        assert!(a.is_square(), "eigendecomposition of a non-square matrix");
        let n = a.rows();
        if n == 0 {
            return Ok(Self {
                values: Vec::new(),
                vectors: Matrix::zeros(0, 0),
            });
        }
        // z[c * n + r] holds V[r][c]; start from V = lower triangle mirrored.
        let mut z = vec![T::zero(); n * n];
        for r in 0..n {
            for c in 0..=r {
                z[c * n + r] = a[(r, c)];
                z[r * n + c] = a[(r, c)];
            }
        }
        let mut d = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        tridiagonalize(n, &mut z, &mut d, &mut e);
        ql_implicit(n, &mut z, &mut d, &mut e)?;
        Ok(Self {
            values: d,
            vectors: Matrix::from_row_major(n, n, z),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvector(&self, j: usize) -> &[T] {
        self.vectors.row(j)
    }
}

#[inline]
fn ix(n: usize, r: usize, c: usize) -> usize {
    c * n + r
}

fn tridiagonalize<T: Scalar>(n: usize, z: &mut [T], d: &mut [T], e: &mut [T]) {
    let zero = T::zero();
    for j in 0..n {
        d[j] = z[ix(n, n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = z[ix(n, i - 1, j)];
                z[ix(n, i, j)] = zero;
                z[ix(n, j, i)] = zero;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                z[ix(n, j, i)] = f;
                g = e[j] + z[ix(n, j, j)] * f;
                let col = &z[j * n..j * n + i];
                for k in j + 1..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = &mut z[j * n..j * n + i];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = z[ix(n, i - 1, j)];
                z[ix(n, i, j)] = zero;
            }
        }
        d[i] = h;
    }

    // accumulate transformations
    for i in 0..n - 1 {
        z[ix(n, n - 1, i)] = z[ix(n, i, i)];
        z[ix(n, i, i)] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = z[ix(n, k, i + 1)] / h;
            }
            for j in 0..=i {
                let (head, tail) = z.split_at_mut((i + 1) * n);
                let next = &tail[..=i];
                let col = &mut head[j * n..j * n + i + 1];
                let mut g = zero;
                for k in 0..=i {
                    g += next[k] * col[k];
                }
                for k in 0..=i {
                    col[k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            z[ix(n, k, i + 1)] = zero;
        }
    }
    for j in 0..n {
        d[j] = z[ix(n, n - 1, j)];
        z[ix(n, n - 1, j)] = zero;
    }
    z[ix(n, n - 1, n - 1)] = T::one();
    e[0] = zero;
}

fn ql_implicit<T: Scalar>(n: usize, z: &mut [T], d: &mut [T], e: &mut [T]) -> Result<()> {
    let zero = T::zero();
    let one = T::one();
    let two = T::of(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::EigenNoConvergence {
                        index: l,
                        iterations: iter - 1,
                        spectral_radius: tst1.as_f64(),
                        off_diagonal: e[l].abs().as_f64(),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (head, tail) = z.split_at_mut((i + 1) * n);
                    let vi = &mut head[i * n..];
                    let vi1 = &mut tail[..n];
                    for k in 0..n {
                        let hk = vi1[k];
                        vi1[k] = s * vi[k] + c * hk;
                        vi[k] = c * vi[k] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }

    // selection sort keeps the pairing between values and vectors stable
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            let (head, tail) = z.split_at_mut(k * n);
            head[i * n..(i + 1) * n].swap_with_slice(&mut tail[..n]);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_decomposition(a: &Matrix<f64>, tol: f64) {
        let eig = SymmetricEigen::new(a).unwrap();
        let n = a.rows();
        for j in 0..n {
            let v = eig.eigenvector(j);
            let av = a.matvec(v);
            for k in 0..n {
                assert!((av[k] - eig.values[j] * v[k]).abs() < tol, "residual too large");
            }
            for i in 0..n {
                let d: f64 = eig.eigenvector(i).iter().zip(v).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < tol);
            }
        }
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn two_by_two() {
        let a = Matrix::<f64>::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let eig = SymmetricEigen::new(&a).unwrap();
        assert!(eig.values[0].abs() < 1e-14);
        assert!((eig.values[1] - 2.0).abs() < 1e-14);
        check_decomposition(&a, 1e-12);
    }

    #[test]
    fn diagonal_and_one_by_one() {
        let a = Matrix::<f64>::from_rows(&[vec![3.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, 2.0]]);
        let eig = SymmetricEigen::new(&a).unwrap();
        assert_eq!(eig.values, vec![-1.0, 2.0, 3.0]);
        let one = Matrix::from_rows(&[vec![5.0]]);
        assert_eq!(SymmetricEigen::new(&one).unwrap().values, vec![5.0]);
    }

    #[test]
    fn dense_symmetric() {
        let n = 12;
        let a = Matrix::from_fn(n, n, |i, j| {
            let (lo, hi) = (i.min(j) as f64, i.max(j) as f64);
            (lo * 0.7 + hi * 1.3).sin() + if i == j { 2.0 } else { 0.0 }
        });
        check_decomposition(&a, 1e-10);
    }
}
