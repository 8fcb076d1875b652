//! Symmetric eigendecomposition: Householder tridiagonalization followed by
//! the implicit-shift QL iteration, with accumulated eigenvectors. This is
//! the standard tred2/tql2 pair; it is unconditionally stable for real
//! symmetric matrices, which is all the curvature analysis ever produces.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

const MAX_QL_ITERATIONS: usize = 50;

/// Eigenvalues in ascending order; column `i` of `vectors` is the
/// eigenvector for `values[i]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

/// Decomposes a symmetric matrix into eigenvalues and eigenvectors.
pub fn decompose<T: Real>(h: &Matrix<T>) -> Result<SymmetricEigen<T>> {
    if h.rows() != h.cols() {
        return Err(Error::ShapeMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    if h.rows() == 0 {
        return Err(Error::EmptyInput("eigendecomposition of a 0x0 matrix"));
    }
    let n = h.rows();
    let mut v = h.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;
    sort_ascending(&mut v, &mut d);
    Ok(SymmetricEigen {
        values: d,
        vectors: v,
    })
}

/// Eigenvalues of a symmetric matrix, sorted ascending.
pub fn eigen_symmetric<T: Real>(h: &Matrix<T>) -> Result<Vec<T>> {
    decompose(h).map(|eig| eig.values)
}

/// Householder reduction to tridiagonal form, accumulating the
/// transformation in `v`; `d` receives the diagonal, `e` the subdiagonal.
#[allow(clippy::needless_range_loop)]
fn tred2<T: Real>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) {
    let n = v.rows();
    for j in 0..n {
        d[j] = v.get(n - 1, j);
    }

    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for d_k in d.iter().take(i) {
            scale += d_k.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v.get(i - 1, j);
                v.set(i, j, T::zero());
                v.set(j, i, T::zero());
            }
        } else {
            for d_k in d.iter_mut().take(i) {
                *d_k /= scale;
                h += *d_k * *d_k;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for e_j in e.iter_mut().take(i) {
                *e_j = T::zero();
            }

            for j in 0..i {
                f = d[j];
                v.set(j, i, f);
                g = e[j] + v.get(j, j) * f;
                for k in (j + 1)..i {
                    g += v.get(k, j) * d[k];
                    e[k] += v.get(k, j) * f;
                }
                e[j] = g;
            }
            f = T::zero();
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
                for k in j..i {
                    let val = v.get(k, j) - (f * e[k] + g * d[k]);
                    v.set(k, j, val);
                }
                d[j] = v.get(i - 1, j);
                v.set(i, j, T::zero());
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v.set(n - 1, i, v.get(i, i));
        v.set(i, i, T::one());
        let h = d[i + 1];
        if h != T::zero() {
            for (k, d_k) in d.iter_mut().enumerate().take(i + 1) {
                *d_k = v.get(k, i + 1) / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v.get(k, i + 1) * v.get(k, j);
                }
                for (k, d_k) in d.iter().enumerate().take(i + 1) {
                    let val = v.get(k, j) - g * *d_k;
                    v.set(k, j, val);
                }
            }
        }
        for k in 0..=i {
            v.set(k, i + 1, T::zero());
        }
    }
    for j in 0..n {
        d[j] = v.get(n - 1, j);
        v.set(n - 1, j, T::zero());
    }
    v.set(n - 1, n - 1, T::one());
    e[0] = T::zero();
}

/// Implicit-shift QL iteration on the tridiagonal (d, e), rotations
/// accumulated into `v`.
#[allow(clippy::needless_range_loop)]
fn tql2<T: Real>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = v.rows();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    let two = T::one() + T::one();

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::EigenNoConvergence(format!(
                        "QL iteration cap {MAX_QL_ITERATIONS} hit at index {l} of {n}; \
                         off-diagonal |e[l]| = {:e}, scale = {:e}",
                        crate::scalar::to_f64(e[l].abs()),
                        crate::scalar::to_f64(tst1)
                    )));
                }

                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for d_i in d.iter_mut().take(n).skip(l + 2) {
                    *d_i -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let gi = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * gi;
                    d[i + 1] = h + s * (c * gi + s * d[i]);

                    for k in 0..n {
                        h = v.get(k, i + 1);
                        v.set(k, i + 1, s * v.get(k, i) + c * h);
                        v.set(k, i, c * v.get(k, i) - s * h);
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
        e[l] = T::zero();
    }
    Ok(())
}

/// Selection sort into ascending eigenvalue order, swapping the
/// corresponding eigenvector columns along.
#[allow(clippy::needless_range_loop)]
fn sort_ascending<T: Real>(v: &mut Matrix<T>, d: &mut [T]) {
    let n = d.len();
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in (i + 1)..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for row in 0..n {
                let tmp = v.get(row, i);
                v.set(row, i, v.get(row, k));
                v.set(row, k, tmp);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(rows: &[Vec<f64>]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn diagonal_matrix_eigenvalues_sorted() {
        let h = sym(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ]);
        let vals = eigen_symmetric(&h).unwrap();
        assert!((vals[0] - -1.0).abs() < 1e-12);
        assert!(vals[1].abs() < 1e-12);
        assert!((vals[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_hand_computed() {
        // [[2,1],[1,2]]: characteristic polynomial (2-λ)² − 1, roots 1 and 3.
        let h = sym(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let vals = eigen_symmetric(&h).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn one_by_one() {
        let h = sym(&[vec![-4.25]]);
        assert_eq!(eigen_symmetric(&h).unwrap(), vec![-4.25]);
    }

    #[test]
    fn residuals_and_trace_on_random_symmetric() {
        use rand::RngExt;
        let mut rng = crate::seed::derive_rng(7, 0, 1);
        for trial in 0..100 {
            let n = 2 + (trial % 49);
            let mut h = Matrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let x: f64 = rng.random_range(-1.0..1.0);
                    h.set(i, j, x);
                    h.set(j, i, x);
                }
            }
            let eig = decompose(&h).unwrap();

            let trace: f64 = (0..n).map(|i| h.get(i, i)).sum();
            let sum: f64 = eig.values.iter().sum();
            let scale = trace.abs().max(1.0);
            assert!(
                (trace - sum).abs() <= 1e-8 * scale,
                "trace {trace} vs eigensum {sum} at n={n}"
            );

            let h_norm: f64 = h.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (idx, &lambda) in eig.values.iter().enumerate() {
                let mut residual = 0.0_f64;
                for row in 0..n {
                    let mut hv = 0.0;
                    for col in 0..n {
                        hv += h.get(row, col) * eig.vectors.get(col, idx);
                    }
                    let r = hv - lambda * eig.vectors.get(row, idx);
                    residual += r * r;
                }
                assert!(
                    residual.sqrt() <= 1e-8 * h_norm.max(1.0),
                    "residual {:e} for eigenpair {idx} at n={n}",
                    residual.sqrt()
                );
            }
        }
    }
}
