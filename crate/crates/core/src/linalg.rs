//! Small dense eigen-solvers and LU factorizations.
//!
//! Sizes in this crate stay below a few dozen rows, so everything here is
//! written for clarity over blocking: cyclic Jacobi for symmetric matrices,
//! Householder Hessenberg reduction followed by single-shift complex QR for
//! general real matrices, and partial-pivoting LU in real and complex
//! arithmetic.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Sweep limit for [`symmetric_eigen`].
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns.
pub fn symmetric_eigen(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    let mut a = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);

    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::EigenFailure(format!("Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].total_cmp(&a[[j, j]]));
    let values = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let mut vectors = Array2::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        vectors.column_mut(col).assign(&v.column(i));
    }
    Ok((values, vectors))
}

/// LU factorization with partial pivoting, reusable for many right-hand
/// sides.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Array2<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let norm = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| lu[[i, k]].abs().total_cmp(&lu[[j, k]].abs())).unwrap();
            if lu[[piv, k]].abs() <= 1e-14 * norm.max(f64::MIN_POSITIVE) {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            if piv != k {
                for j in 0..n {
                    lu.swap([k, j], [piv, j]);
                }
                perm.swap(k, piv);
            }
            for i in k + 1..n {
                let f = lu[[i, k]] / lu[[k, k]];
                lu[[i, k]] = f;
                for j in k + 1..n {
                    lu[[i, j]] -= f * lu[[k, j]];
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[[i, j]] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[[i, j]] * x[j];
            }
            x[i] /= self.lu[[i, i]];
        }
        x
    }
}

/// Reduces a real square matrix to upper Hessenberg form by Householder
/// reflections. Only the Hessenberg matrix is returned; similarity is all
/// the eigenvalue stage needs.
pub fn hessenberg(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let alpha_norm: f64 = (k + 1..n).map(|i| h[[i, k]] * h[[i, k]]).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let alpha = if h[[k + 1, k]] > 0.0 { -alpha_norm } else { alpha_norm };
        let mut v = vec![0.0; n];
        v[k + 1] = h[[k + 1, k]] - alpha;
        for i in k + 2..n {
            v[i] = h[[i, k]];
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H <- (I - 2vv^T/|v|^2) H (I - 2vv^T/|v|^2)
        for j in 0..n {
            let dot: f64 = (k + 1..n).map(|i| v[i] * h[[i, j]]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k + 1..n {
                h[[i, j]] -= f * v[i];
            }
        }
        for i in 0..n {
            let dot: f64 = (k + 1..n).map(|j| h[[i, j]] * v[j]).sum();
            let f = 2.0 * dot / vnorm2;
            for j in k + 1..n {
                h[[i, j]] -= f * v[j];
            }
        }
        for i in k + 2..n {
            h[[i, k]] = 0.0;
        }
    }
    h
}

/// Eigenvalues of a real matrix via Hessenberg reduction and single-shift
/// complex QR with Wilkinson shifts.
///
/// Fails with [`Error::EigenFailure`] after `30 · n` iterations without
/// deflation progress.
pub fn eigenvalues(a: &Array2<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    let hr = hessenberg(a);
    let mut h: Vec<Vec<Complex64>> = (0..n)
        .map(|i| (0..n).map(|j| Complex64::new(hr[[i, j]], 0.0)).collect())
        .collect();
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(values);
    }
    let max_iter = 30 * n;
    let mut hi = n - 1;
    let mut iter_total = 0usize;
    let mut iter_block = 0usize;
    loop {
        if hi == 0 {
            values[0] = h[0][0];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let s = h[l - 1][l - 1].norm() + h[l][l].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[l][l - 1].norm() <= f64::EPSILON * s {
                h[l][l - 1] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            values[hi] = h[hi][hi];
            hi -= 1;
            iter_block = 0;
            continue;
        }
        iter_total += 1;
        iter_block += 1;
        if iter_total > max_iter {
            return Err(Error::EigenFailure(format!("QR iteration did not converge in {max_iter} steps")));
        }

        let a11 = h[hi - 1][hi - 1];
        let a12 = h[hi - 1][hi];
        let a21 = h[hi][hi - 1];
        let a22 = h[hi][hi];
        let mu = if iter_block.is_multiple_of(10) {
            a22 + Complex64::new(a21.norm(), 0.0)
        } else {
            let half = (a11 - a22) * 0.5;
            let disc = (half * half + a12 * a21).sqrt();
            let m1 = (a11 + a22) * 0.5 + disc;
            let m2 = (a11 + a22) * 0.5 - disc;
            if (m1 - a22).norm() < (m2 - a22).norm() {
                m1
            } else {
                m2
            }
        };

        for i in l..=hi {
            h[i][i] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let x = h[k][k];
            let y = h[k + 1][k];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
            } else {
                (x / r, y / r)
            };
            for j in k..=hi {
                let a = h[k][j];
                let b = h[k + 1][j];
                h[k][j] = c.conj() * a + s.conj() * b;
                h[k + 1][j] = -s * a + c * b;
            }
            rots.push((c, s));
        }
        for (idx, k) in (l..hi).enumerate() {
            let (c, s) = rots[idx];
            for i in l..=(k + 1).min(hi) {
                let a = h[i][k];
                let b = h[i][k + 1];
                h[i][k] = a * c + b * s;
                h[i][k + 1] = -a * s.conj() + b * c.conj();
            }
        }
        for i in l..=hi {
            h[i][i] += mu;
        }
    }
    Ok(values)
}

/// Complex LU with partial pivoting.
#[derive(Debug, Clone)]
pub struct ComplexLu {
    lu: Vec<Vec<Complex64>>,
    perm: Vec<usize>,
}

impl ComplexLu {
    pub fn new(a: &[Vec<Complex64>]) -> Result<Self> {
        let n = a.len();
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| lu[i][k].norm().total_cmp(&lu[j][k].norm())).unwrap();
            if lu[piv][k].norm() == 0.0 {
                return Err(Error::Singular(format!("zero complex pivot in column {k}")));
            }
            lu.swap(k, piv);
            perm.swap(k, piv);
            for i in k + 1..n {
                let f = lu[i][k] / lu[k][k];
                lu[i][k] = f;
                for j in k + 1..n {
                    let t = lu[k][j];
                    lu[i][j] -= f * t;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.perm.len();
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let t = x[j];
                x[i] -= self.lu[i][j] * t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = x[j];
                x[i] -= self.lu[i][j] * t;
            }
            x[i] /= self.lu[i][i];
        }
        x
    }
}

/// Eigenvector for a known eigenvalue by inverse iteration on `A - λI`.
///
/// The shift is nudged off `λ` by a relative `1e-10` so the factorization
/// stays regular; three iterations are plenty at that separation. The result
/// has unit Euclidean norm.
pub fn inverse_iteration(a: &Array2<f64>, lambda: Complex64) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let shift = lambda + Complex64::new(1e-10 * scale, 1e-10 * scale);
    let shifted: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = if i == j { shift } else { Complex64::new(0.0, 0.0) };
                    Complex64::new(a[[i, j]], 0.0) - d
                })
                .collect()
        })
        .collect();
    let lu = ComplexLu::new(&shifted)?;
    let mut x: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 + 0.1 * i as f64, 0.3)).collect();
    for _ in 0..3 {
        x = lu.solve(&x);
        let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::EigenFailure("inverse iteration produced a degenerate vector".into()));
        }
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
    Ok(x)
}
