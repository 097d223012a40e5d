//! One-sided Jacobi SVD for square nonsingular matrices.
//!
//! Used by the interior-point solver to form the Nesterov–Todd scaling from
//! the product of two Cholesky factors; one-sided Jacobi keeps relative
//! accuracy on the small singular values.

use super::{LinalgError, Mat};

#[derive(Debug, Clone)]
pub struct Svd {
    /// Left singular vectors (columns).
    pub u: Mat,
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// Right singular vectors (columns): A = U diag(σ) Vᵀ.
    pub v: Mat,
}

const MAX_SWEEPS: usize = 64;
const ORTHO_TOL: f64 = 1e-14;

/// Decompose a square matrix A = U Σ Vᵀ by one-sided Jacobi rotations on
/// the columns. Intended for well-posed inputs (products of nonsingular
/// triangular factors); a zero column yields a zero singular value with an
/// arbitrary orthonormal completion.
pub fn jacobi_svd(a: &Mat) -> Result<Svd, LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: a.cols(),
        });
    }
    // work on columns: transpose so each "column" is a contiguous row
    let mut w = a.transpose();
    let mut v = Mat::identity(n);

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let cp = w.row(p);
                    let cq = w.row(q);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for k in 0..n {
                        alpha += cp[k] * cp[k];
                        beta += cq[k] * cq[k];
                        gamma += cp[k] * cq[k];
                    }
                    (alpha, beta, gamma)
                };
                if gamma.abs() <= ORTHO_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rutishauser rotation zeroing the (p,q) inner product
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut w, p, q, c, s);
                rotate_rows(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            iterations: MAX_SWEEPS,
        });
    }

    // singular values are the column norms; normalize to get U
    let mut sigma: Vec<f64> = (0..n)
        .map(|k| w.row(k).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let mut u = Mat::zeros(n, n);
    let mut v_sorted = Mat::zeros(n, n);
    let mut sigma_sorted = Vec::with_capacity(n);
    for (new_col, &old) in order.iter().enumerate() {
        let s = sigma[old];
        sigma_sorted.push(s);
        let inv = if s > 0.0 { 1.0 / s } else { 0.0 };
        for r in 0..n {
            u.set(r, new_col, w.get(old, r) * inv);
            v_sorted.set(r, new_col, v.get(old, r));
        }
    }
    sigma = sigma_sorted;
    Ok(Svd {
        u,
        sigma,
        v: v_sorted,
    })
}

#[inline]
fn rotate_rows(m: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols();
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    let (head, tail) = m.data_mut().split_at_mut(hi * cols);
    let row_lo = &mut head[lo * cols..(lo + 1) * cols];
    let row_hi = &mut tail[..cols];
    let (rp, rq) = if p < q {
        (row_lo, row_hi)
    } else {
        (row_hi, row_lo)
    };
    for k in 0..cols {
        let xp = rp[k];
        let xq = rq[k];
        rp[k] = c * xp - s * xq;
        rq[k] = s * xp + c * xq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matmul, matmul_nt, matmul_tn};

    fn check_svd(a: &Mat, tol: f64) {
        let n = a.rows();
        let svd = jacobi_svd(a).unwrap();
        // descending singular values
        for k in 1..n {
            assert!(svd.sigma[k - 1] >= svd.sigma[k] - 1e-15);
        }
        // orthogonality
        for (label, m) in [("U", &svd.u), ("V", &svd.v)] {
            let g = matmul_tn(m, m);
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (g.get(i, j) - expect).abs() < 1e-12,
                        "{label}ᵀ{label}[{i}][{j}] = {}",
                        g.get(i, j)
                    );
                }
            }
        }
        // reconstruction A = U Σ Vᵀ
        let mut us = svd.u.clone();
        for k in 0..n {
            us.scale_col(k, svd.sigma[k]);
        }
        let rec = matmul_nt(&us, &svd.v);
        let scale = 1.0 + a.frob_norm();
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (rec.get(i, j) - a.get(i, j)).abs() <= tol * scale,
                    "reconstruction [{i}][{j}]: {} vs {}",
                    rec.get(i, j),
                    a.get(i, j)
                );
            }
        }
    }

    #[test]
    fn svd_identity() {
        let svd = jacobi_svd(&Mat::identity(4)).unwrap();
        for s in &svd.sigma {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn svd_random_square() {
        for n in [2, 3, 7, 15] {
            let a = Mat::from_fn(n, n, |i, j| {
                (((i * 13 + j * 7 + n) % 19) as f64 / 19.0 - 0.5) * 3.0
            });
            check_svd(&a, 1e-12);
        }
    }

    #[test]
    fn svd_ill_conditioned_product() {
        // mimic the NT use: product of two triangular factors with a wide
        // spread of scales
        let n = 10;
        let l1 = Mat::from_fn(n, n, |i, j| {
            if j > i {
                0.0
            } else if i == j {
                10.0_f64.powi(-(i as i32) / 2)
            } else {
                0.1 * (((i + j) % 5) as f64 - 2.0) * 10.0_f64.powi(-(i as i32) / 2)
            }
        });
        let l2 = Mat::from_fn(n, n, |i, j| {
            if j > i {
                0.0
            } else if i == j {
                10.0_f64.powi(-((n - i) as i32) / 3)
            } else {
                0.05 * ((i * j % 7) as f64 - 3.0) * 10.0_f64.powi(-((n - i) as i32) / 3)
            }
        });
        let g = matmul_tn(&l2, &l1);
        let svd = jacobi_svd(&g).unwrap();
        assert!(svd.sigma[n - 1] > 0.0);
        // relative reconstruction despite conditioning
        let mut us = svd.u.clone();
        for k in 0..n {
            us.scale_col(k, svd.sigma[k]);
        }
        let rec = matmul_nt(&us, &svd.v);
        let mut err = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = rec.get(i, j) - g.get(i, j);
                err += d * d;
            }
        }
        assert!(err.sqrt() <= 1e-12 * (1.0 + g.frob_norm()));
    }

    #[test]
    fn svd_matches_gram_eigenvalues() {
        let n = 6;
        let a = Mat::from_fn(n, n, |i, j| ((i * 3 + j * 11 + 1) % 13) as f64 / 13.0 - 0.4);
        let svd = jacobi_svd(&a).unwrap();
        let gram = crate::linalg::SymMatrix::from_mat_symmetrized(&matmul(&a.transpose(), &a));
        let evs = crate::linalg::sym_eigvals(&gram).unwrap();
        for (k, s) in svd.sigma.iter().enumerate() {
            let ev = evs[n - 1 - k].max(0.0);
            assert!(
                (s * s - ev).abs() <= 1e-10 * (1.0 + ev),
                "σ²={} vs λ={}",
                s * s,
                ev
            );
        }
    }
}
