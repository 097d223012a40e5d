//! Dense symmetric linear-algebra kernels shared by all solvers.
//!
//! Everything here is plain double precision over row-major storage. The
//! matrices this crate works with (the lifted block matrix has dimension
//! 2n+1) are dense after interior-point scaling, so no sparsity is
//! exploited below the constraint-coefficient level.

mod eig;
mod svd;

pub use eig::{sym_eig, sym_eigvals};
pub use svd::{jacobi_svd, Svd};

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} failed)")]
    NotPositiveDefinite { pivot: usize },
    #[error("eigensolver did not converge within {iterations} QL iterations")]
    NoConvergence { iterations: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

// ---------------------------------------------------------------------------
// vector helpers
// ---------------------------------------------------------------------------

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

// ---------------------------------------------------------------------------
// general dense matrix
// ---------------------------------------------------------------------------

/// Dense row-major matrix. Used for factors, eigenvector bases and other
/// intermediates that are not symmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.data {
            *v *= alpha;
        }
    }

    /// Scale column j by alpha.
    pub fn scale_col(&mut self, j: usize, alpha: f64) {
        for i in 0..self.rows {
            self.data[i * self.cols + j] *= alpha;
        }
    }

    pub fn frob_norm(&self) -> f64 {
        norm2(&self.data)
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }
}

/// C = A B
pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.cols, b.rows);
    let mut c = Mat::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let arow = a.row(i);
        let crow = c.row_mut(i);
        for (k, &aik) in arow.iter().enumerate() {
            if aik != 0.0 {
                axpy(aik, b.row(k), crow);
            }
        }
    }
    c
}

/// C = A Bᵀ
pub fn matmul_nt(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.cols, b.cols);
    let mut c = Mat::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        let arow = a.row(i);
        let crow = c.row_mut(i);
        for j in 0..b.rows {
            crow[j] = dot(arow, b.row(j));
        }
    }
    c
}

/// C = Aᵀ B
pub fn matmul_tn(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.rows, b.rows);
    let mut c = Mat::zeros(a.cols, b.cols);
    for k in 0..a.rows {
        let arow = a.row(k);
        let brow = b.row(k);
        for (i, &aki) in arow.iter().enumerate() {
            if aki != 0.0 {
                axpy(aki, brow, c.row_mut(i));
            }
        }
    }
    c
}

// ---------------------------------------------------------------------------
// symmetric matrix
// ---------------------------------------------------------------------------

/// Dense symmetric matrix. Full row-major storage; `set` mirrors both
/// triangles so the representation stays exactly symmetric, bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn scaled_identity(dim: usize, alpha: f64) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = alpha;
        }
        m
    }

    /// Build from a lower-triangle generator: `f(i, j)` is consulted for
    /// `i >= j` only and mirrored above the diagonal.
    pub fn from_fn_lower(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Symmetrize a square matrix: (A + Aᵀ)/2.
    pub fn from_mat_symmetrized(a: &Mat) -> Self {
        assert_eq!(a.rows(), a.cols());
        let n = a.rows();
        SymMatrix::from_fn_lower(n, |i, j| {
            if i == j {
                a.get(i, i)
            } else {
                0.5 * (a.get(i, j) + a.get(j, i))
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] += v;
        if i != j {
            self.data[j * self.dim + i] += v;
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn to_mat(&self) -> Mat {
        Mat {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    /// Trace inner product ⟨A, B⟩ = Σᵢⱼ AᵢⱼBᵢⱼ.
    pub fn frob_inner(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        dot(&self.data, &other.data)
    }

    pub fn frob_norm(&self) -> f64 {
        norm2(&self.data)
    }

    /// self += alpha * other
    pub fn add_scaled(&mut self, alpha: f64, other: &SymMatrix) {
        debug_assert_eq!(self.dim, other.dim);
        axpy(alpha, &other.data, &mut self.data);
    }

    pub fn add_scaled_identity(&mut self, alpha: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += alpha;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.data {
            *v *= alpha;
        }
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        (0..self.dim).map(|i| dot(self.row(i), x)).collect()
    }

    /// xᵀ A x
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(&self.matvec(x), x)
    }

    /// B = P A Pᵀ for general P (rows may differ from dim).
    pub fn congruence(&self, p: &Mat) -> SymMatrix {
        assert_eq!(p.cols(), self.dim);
        let t = matmul(p, &self.to_mat());
        SymMatrix::from_mat_symmetrized(&matmul_nt(&t, p))
    }
}

// ---------------------------------------------------------------------------
// Cholesky and triangular solves
// ---------------------------------------------------------------------------

/// Lower-triangular Cholesky factor L with L Lᵀ = A.
///
/// Fails with the offending pivot index as soon as a pivot drops to zero or
/// below, which doubles as an inexpensive positive-definiteness test.
pub fn cholesky(a: &SymMatrix) -> Result<Mat, LinalgError> {
    let n = a.dim();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut diag = a.get(j, j);
        for k in 0..j {
            diag -= l.get(j, k) * l.get(j, k);
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { pivot: j });
        }
        let ljj = diag.sqrt();
        l.set(j, j, ljj);
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / ljj);
        }
    }
    Ok(l)
}

/// Solve L x = b in place (L lower triangular).
pub fn solve_lower(l: &Mat, b: &mut [f64]) {
    let n = l.rows();
    debug_assert_eq!(b.len(), n);
    for i in 0..n {
        let mut s = b[i];
        let row = l.row(i);
        for k in 0..i {
            s -= row[k] * b[k];
        }
        b[i] = s / row[i];
    }
}

/// Solve Lᵀ x = b in place (L lower triangular).
pub fn solve_lower_t(l: &Mat, b: &mut [f64]) {
    let n = l.rows();
    debug_assert_eq!(b.len(), n);
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l.get(k, i) * b[k];
        }
        b[i] = s / l.get(i, i);
    }
}

/// Solve L X = B for a full right-hand-side matrix, overwriting B.
pub fn solve_lower_mat(l: &Mat, b: &mut Mat) {
    let n = l.rows();
    assert_eq!(b.rows(), n);
    for k in 0..n {
        let lkk = l.get(k, k);
        // X[k] = (B[k] - sum_{j<k} L[k][j] X[j]) / L[k][k]
        for j in 0..k {
            let lkj = l.get(k, j);
            if lkj != 0.0 {
                let (head, tail) = b.data.split_at_mut(k * b.cols);
                let xj = &head[j * b.cols..(j + 1) * b.cols];
                let xk = &mut tail[..b.cols];
                axpy(-lkj, xj, xk);
            }
        }
        for v in b.row_mut(k) {
            *v /= lkk;
        }
    }
}

/// Solve Lᵀ X = B for a full right-hand-side matrix, overwriting B.
pub fn solve_lower_t_mat(l: &Mat, b: &mut Mat) {
    let n = l.rows();
    assert_eq!(b.rows(), n);
    for k in (0..n).rev() {
        let lkk = l.get(k, k);
        for j in (k + 1)..n {
            let ljk = l.get(j, k);
            if ljk != 0.0 {
                let (head, tail) = b.data.split_at_mut(j * b.cols);
                let xk = &mut head[k * b.cols..(k + 1) * b.cols];
                let xj = &tail[..b.cols];
                axpy(-ljk, xj, xk);
            }
        }
        for v in b.row_mut(k) {
            *v /= lkk;
        }
    }
}

/// Solve A x = b for positive definite A via Cholesky.
pub fn solve_posdef(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if b.len() != a.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.dim(),
            found: b.len(),
        });
    }
    let l = cholesky(a)?;
    let mut x = b.to_vec();
    solve_lower(&l, &mut x);
    solve_lower_t(&l, &mut x);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn cholesky_identity() {
        let a = SymMatrix::identity(3);
        let l = cholesky(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_close(l.get(i, j), if i == j { 1.0 } else { 0.0 }, 1e-15);
            }
        }
    }

    #[test]
    fn cholesky_hand_checked_2x2() {
        let a = SymMatrix::from_fn_lower(2, |i, j| [[4.0, 2.0], [2.0, 3.0]][i][j]);
        let l = cholesky(&a).unwrap();
        assert_close(l.get(0, 0), 2.0, 1e-15);
        assert_close(l.get(1, 0), 1.0, 1e-15);
        assert_close(l.get(1, 1), 2.0_f64.sqrt(), 1e-15);
        assert_close(l.get(0, 1), 0.0, 0.0);
    }

    #[test]
    fn cholesky_indefinite_reports_pivot() {
        let a = SymMatrix::from_fn_lower(2, |i, j| if i == j { 1.0 } else { 2.0 });
        match cholesky(&a) {
            Err(LinalgError::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_reconstructs() {
        // random-ish SPD built from a Gram matrix
        let n = 12;
        let g = Mat::from_fn(n, n, |i, j| {
            ((i * 31 + j * 17 + 3) % 13) as f64 / 13.0 - 0.4
        });
        let a = SymMatrix::from_mat_symmetrized(&matmul_nt(&g, &g));
        let mut spd = a.clone();
        spd.add_scaled_identity(0.5);
        let l = cholesky(&spd).unwrap();
        let rec = SymMatrix::from_mat_symmetrized(&matmul_nt(&l, &l));
        let mut diff = rec.clone();
        diff.add_scaled(-1.0, &spd);
        assert!(diff.frob_norm() <= 1e-10 * (1.0 + spd.frob_norm()));
    }

    #[test]
    fn solve_posdef_identity_and_scaling() {
        let b = vec![1.0, -2.0, 3.0];
        let x = solve_posdef(&SymMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
        let x = solve_posdef(&SymMatrix::scaled_identity(3, 2.0), &b).unwrap();
        for (xi, bi) in x.iter().zip(&b) {
            assert_close(*xi, bi / 2.0, 1e-15);
        }
    }

    #[test]
    fn solve_posdef_constructed_solution() {
        // build b = A x* from a chosen x* and check recovery
        let n = 10;
        let g = Mat::from_fn(n, n, |i, j| (((i + 2) * (j + 7)) % 11) as f64 / 11.0 - 0.3);
        let mut a = SymMatrix::from_mat_symmetrized(&matmul_nt(&g, &g));
        a.add_scaled_identity(1.0);
        let x_star: Vec<f64> = (0..n).map(|i| (i as f64 - 4.0) / 3.0).collect();
        let b = a.matvec(&x_star);
        let x = solve_posdef(&a, &b).unwrap();
        let resid: Vec<f64> = a
            .matvec(&x)
            .iter()
            .zip(&b)
            .map(|(ax, bi)| ax - bi)
            .collect();
        assert!(norm2(&resid) <= 1e-9 * (a.frob_norm() * norm2(&x) + norm2(&b)));
        for (xi, xs) in x.iter().zip(&x_star) {
            assert_close(*xi, *xs, 1e-8);
        }
    }

    #[test]
    fn triangular_matrix_solves() {
        let n = 8;
        let g = Mat::from_fn(n, n, |i, j| ((i * 5 + j * 3 + 1) % 7) as f64 - 2.0);
        let mut a = SymMatrix::from_mat_symmetrized(&matmul_nt(&g, &g));
        a.add_scaled_identity(2.0);
        let l = cholesky(&a).unwrap();
        let b = Mat::from_fn(n, 5, |i, j| (i + 2 * j) as f64 / 3.0 - 1.0);
        let mut x = b.clone();
        solve_lower_mat(&l, &mut x);
        let rec = matmul(&l, &x);
        for i in 0..n {
            for j in 0..5 {
                assert_close(rec.get(i, j), b.get(i, j), 1e-10);
            }
        }
        let mut y = b.clone();
        solve_lower_t_mat(&l, &mut y);
        let rec_t = matmul_tn(&l, &y);
        for i in 0..n {
            for j in 0..5 {
                assert_close(rec_t.get(i, j), b.get(i, j), 1e-10);
            }
        }
    }

    #[test]
    fn matmul_variants_agree() {
        let a = Mat::from_fn(4, 6, |i, j| (i * j) as f64 - 2.0);
        let b = Mat::from_fn(6, 3, |i, j| (i + j) as f64 * 0.5);
        let c = matmul(&a, &b);
        let c_nt = matmul_nt(&a, &b.transpose());
        let c_tn = matmul_tn(&a.transpose(), &b);
        assert_eq!(c, c_nt);
        assert_eq!(c, c_tn);
    }
}
