//! Symmetric eigendecomposition and Cholesky factorization.
//!
//! The eigensolver is Householder tridiagonalization followed by the
//! implicit QL iteration (the EISPACK `tred2`/`tql2` pair). Inputs are always
//! symmetrized as `(M + Mᵀ)/2` first.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct SymEigen {
    /// Non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns, column `r` pairs with `eigenvalues[r]`. The
    /// largest-magnitude entry of every column is positive.
    pub eigenvectors: Matrix,
}

impl SymEigen {
    pub fn eigenvector(&self, r: usize) -> Vec<f64> {
        self.eigenvectors.column(r)
    }
}

pub fn sym_eigen(m: &Matrix) -> Result<SymEigen> {
    let n = check_input(m)?;
    let mut v = m.symmetrized()?.into_data();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e, n, true);
    ql_implicit(&mut d, &mut e, Some(&mut v), n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let eigenvalues = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut pivot = 0;
        for row in 0..n {
            if v[row * n + src].abs() > v[pivot * n + src].abs() {
                pivot = row;
            }
        }
        let sign = if v[pivot * n + src] < 0.0 { -1.0 } else { 1.0 };
        for row in 0..n {
            vectors[(row, col)] = sign * v[row * n + src];
        }
    }
    Ok(SymEigen {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// Eigenvalues only, non-increasing. Skips the vector accumulation, which
/// dominates the cost for the `(KJ)² × (KJ)²` null-distribution matrix.
pub fn sym_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    let n = check_input(m)?;
    let mut v = m.symmetrized()?.into_data();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e, n, false);
    ql_implicit(&mut d, &mut e, None, n)?;
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(d)
}

fn check_input(m: &Matrix) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("eigendecomposition input"));
    }
    if m.rows() == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    Ok(m.rows())
}

/// Householder reduction to tridiagonal form. On return `d` holds the
/// diagonal, `e[1..]` the subdiagonal, and `v` the accumulated orthogonal
/// transform when `accumulate` is set.
fn tridiagonalize(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize, accumulate: bool) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
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
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    if !accumulate {
        for j in 0..n {
            d[j] = v[at(j, j)];
        }
        e[0] = 0.0;
        return;
    }

    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)`; rotations are applied to `v`
/// when eigenvectors are wanted.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut v: Option<&mut [f64]>, n: usize) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let max_iter = 30 * n.max(1) + 30;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::NonFinite("eigenvalue iteration did not converge"));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
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
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for k in 0..n {
                            let row = k * n;
                            h = v[row + i + 1];
                            v[row + i + 1] = s * v[row + i] + c * h;
                            v[row + i] = c * v[row + i] - s * h;
                        }
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
        e[l] = 0.0;
    }
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("eigenvalues"));
    }
    Ok(())
}

/// Lower-triangular `L` with `L·Lᵀ = m`. Fails on a non-positive pivot.
pub fn cholesky(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "cholesky needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("cholesky input"));
    }
    let n = m.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = m[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) {
            return Err(Error::Kernel(format!(
                "matrix is not positive definite (pivot {j} is {diag:e})"
            )));
        }
        let ljj = libm::sqrt(diag);
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut acc = m[(i, j)];
            let (ri, rj) = (l.row(i), l.row(j));
            for k in 0..j {
                acc -= ri[k] * rj[k];
            }
            l[(i, j)] = acc / ljj;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    fn random_symmetric(n: usize, seed: &mut u64) -> Matrix {
        Matrix::from_fn(n, n, |_, _| lcg(seed)).symmetrized().unwrap()
    }

    fn reconstruct(eig: &SymEigen) -> Matrix {
        let v = &eig.eigenvectors;
        let lam = Matrix::from_diagonal(&eig.eigenvalues);
        v.matmul(&lam).unwrap().matmul_transposed(v).unwrap()
    }

    #[test]
    fn diagonal_matrix() {
        let eig = sym_eigen(&Matrix::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(eig.eigenvalues, vec![3.0, 2.0, 1.0]);
        assert_eq!(eig.eigenvector(0), vec![1.0, 0.0, 0.0]);
        assert_eq!(eig.eigenvector(1), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn two_by_two() {
        let m = Matrix::new(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let eig = sym_eigen(&m).unwrap();
        assert!((eig.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
        let vals = sym_eigenvalues(&m).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn one_by_one() {
        let eig = sym_eigen(&Matrix::from_diagonal(&[-4.0])).unwrap();
        assert_eq!(eig.eigenvalues, vec![-4.0]);
        assert_eq!(eig.eigenvector(0), vec![1.0]);
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        let mut s = 77;
        for n in [2, 5, 10, 37] {
            let m = random_symmetric(n, &mut s);
            let eig = sym_eigen(&m).unwrap();
            let err = reconstruct(&eig).sub(&m).unwrap().frobenius_norm();
            assert!(err < 1e-10 * m.frobenius_norm().max(1.0), "n={n} err={err}");
            let gram = eig.eigenvectors.transpose().matmul(&eig.eigenvectors).unwrap();
            assert!(gram.sub(&Matrix::identity(n)).unwrap().max_abs() < 1e-10);
            assert!(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            let sum: f64 = eig.eigenvalues.iter().sum();
            assert!((sum - m.trace()).abs() < 1e-10 * m.frobenius_norm().max(1.0));

            let vals = sym_eigenvalues(&m).unwrap();
            for (a, b) in vals.iter().zip(&eig.eigenvalues) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn symmetrizes_input() {
        let m = Matrix::new(2, 2, vec![2.0, 0.0, 2.0, 2.0]).unwrap();
        let eig = sym_eigen(&m).unwrap();
        assert!((eig.eigenvalues[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient() {
        let u = [1.0, 2.0, -1.0, 0.5];
        let m = Matrix::from_fn(4, 4, |i, j| u[i] * u[j]);
        let vals = sym_eigenvalues(&m).unwrap();
        assert!((vals[0] - 6.25).abs() < 1e-12);
        assert!(vals[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rejects_non_finite() {
        let m = Matrix::new(1, 1, vec![f64::INFINITY]).unwrap();
        assert!(matches!(sym_eigen(&m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn cholesky_reconstructs() {
        let mut s = 5;
        let a = Matrix::from_fn(6, 6, |_, _| lcg(&mut s));
        let spd = a
            .matmul_transposed(&a)
            .unwrap()
            .add(&Matrix::identity(6).scale(0.1))
            .unwrap();
        let l = cholesky(&spd).unwrap();
        let back = l.matmul_transposed(&l).unwrap();
        assert!(back.sub(&spd).unwrap().max_abs() < 1e-12);
        for i in 0..6 {
            for j in (i + 1)..6 {
                assert_eq!(l[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = Matrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(cholesky(&m), Err(Error::Kernel(_))));
    }
}
