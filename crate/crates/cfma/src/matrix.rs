//! Dense real matrix kernel for small systems.
//!
//! Everything here targets the matrix sizes that show up in two-user MIMO
//! rate analysis (dimensions up to ~6), so the decompositions favour
//! robustness over asymptotic speed: Jacobi sweeps for eigenvalues and
//! singular values, partially pivoted LU for determinants and inverses,
//! and outer-product Cholesky with tiny-pivot handling for rank-deficient
//! covariance factors.

use std::fmt;
use std::ops::{Add, Mul, Sub};

/// Default absolute tolerance on matrix residuals. All quantities in this
/// crate are O(1)..O(1e3), so a fixed scale works.
pub const EPS: f64 = 1e-9;

/// Errors raised by the matrix kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum MatError {
    /// A Cholesky pivot went negative beyond tolerance.
    NotPsd { pivot: f64 },
    /// An iterative decomposition failed to converge within its sweep cap.
    NoConvergence { what: &'static str },
    /// Inversion or solve hit a numerically singular pivot.
    Singular,
    /// Operand shapes do not conform.
    DimMismatch { ctx: &'static str },
}

impl fmt::Display for MatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatError::NotPsd { pivot } => write!(f, "matrix is not positive semidefinite (pivot {pivot:e})"),
            MatError::NoConvergence { what } => write!(f, "{what} did not converge"),
            MatError::Singular => write!(f, "matrix is numerically singular"),
            MatError::DimMismatch { ctx } => write!(f, "dimension mismatch in {ctx}"),
        }
    }
}

impl std::error::Error for MatError {}

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries. Panics on shape/entry abuse;
    /// construction errors here are programmer errors, not data errors.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        assert_eq!(data.len(), rows * cols, "entry count must match dimensions");
        assert!(data.iter().all(|x| x.is_finite()), "matrix entries must be finite");
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1);
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty());
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix::new(rows.len(), cols, rows.concat())
    }

    /// Column vector from a slice.
    pub fn col_vec(v: &[f64]) -> Self {
        Matrix::new(v.len(), 1, v.to_vec())
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Columns `[lo, hi)` as a new matrix.
    pub fn columns(&self, lo: usize, hi: usize) -> Matrix {
        assert!(lo < hi && hi <= self.cols);
        let mut out = Matrix::zeros(self.rows, hi - lo);
        for i in 0..self.rows {
            for j in lo..hi {
                out[(i, j - lo)] = self[(i, j)];
            }
        }
        out
    }

    /// Horizontal concatenation `[self other]`.
    pub fn hcat(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        let mut out = Matrix::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)];
            }
            for j in 0..other.cols {
                out[(i, self.cols + j)] = other[(i, j)];
            }
        }
        out
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Averages the matrix with its transpose. Kills asymmetry accumulated
    /// through products before eigen/Cholesky work.
    pub fn symmetrized(&self) -> Matrix {
        assert!(self.is_square());
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = 0.5 * (self[(i, j)] + self[(j, i)]);
            }
        }
        out
    }

    /// Lower-triangular factor `B` with `B * B^T = K`, in natural pivot
    /// order. A pivot below the relative zero threshold produces a zero
    /// column, so exactly rank-deficient inputs factor cleanly; a pivot
    /// below `-1e-9 * ||K||` is rejected as not PSD.
    pub fn cholesky(&self) -> Result<Matrix, MatError> {
        let k = self.symmetrized();
        if !self.is_symmetric(1e-10) {
            return Err(MatError::DimMismatch { ctx: "cholesky expects a symmetric matrix" });
        }
        let n = k.rows;
        let scale = k.frob_norm().max(1e-300);
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = k[(j, j)];
            for p in 0..j {
                d -= l[(j, p)] * l[(j, p)];
            }
            if d < -EPS * scale {
                return Err(MatError::NotPsd { pivot: d });
            }
            if d <= EPS * scale {
                // rank-deficient direction: leave the column zero
                continue;
            }
            let root = d.sqrt();
            l[(j, j)] = root;
            for i in (j + 1)..n {
                let mut s = k[(i, j)];
                for p in 0..j {
                    s -= l[(i, p)] * l[(j, p)];
                }
                l[(i, j)] = s / root;
            }
        }
        Ok(l)
    }

    /// Diagonally pivoted Cholesky: returns `(B, rank)` with `B * B^T = K`
    /// and the `rank` leading columns nonzero, trailing columns exactly
    /// zero. Used where downstream code relies on active columns coming
    /// first.
    pub fn cholesky_pivoted(&self) -> Result<(Matrix, usize), MatError> {
        let k = self.symmetrized();
        if !self.is_symmetric(1e-10) {
            return Err(MatError::DimMismatch { ctx: "cholesky_pivoted expects a symmetric matrix" });
        }
        let n = k.rows;
        let scale = k.frob_norm().max(1e-300);
        let mut a = k.clone(); // working copy holding Schur complements
        let mut b = Matrix::zeros(n, n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rank = 0;
        for step in 0..n {
            // pick the largest remaining diagonal
            let (mut pj, mut pd) = (step, a[(perm[step], perm[step])]);
            for j in (step + 1)..n {
                let d = a[(perm[j], perm[j])];
                if d > pd {
                    pj = j;
                    pd = d;
                }
            }
            if pd < -EPS * scale {
                return Err(MatError::NotPsd { pivot: pd });
            }
            if pd <= 1e-8 * scale {
                break;
            }
            perm.swap(step, pj);
            let piv = perm[step];
            let root = pd.sqrt();
            b[(piv, step)] = root;
            for i in (step + 1)..n {
                let r = perm[i];
                let v = a[(r, piv)] / root;
                b[(r, step)] = v;
            }
            // Schur update on the remaining block
            for i in (step + 1)..n {
                for j in (step + 1)..n {
                    let (r, c) = (perm[i], perm[j]);
                    let upd = b[(r, step)] * b[(c, step)];
                    a[(r, c)] -= upd;
                }
            }
            rank += 1;
        }
        Ok((b, rank))
    }

    /// Determinant via partially pivoted LU; 0 for singular input.
    pub fn det(&self) -> f64 {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut sign = 1.0;
        let mut det = 1.0;
        for k in 0..n {
            let (mut piv, mut best) = (k, a[(k, k)].abs());
            for i in (k + 1)..n {
                if a[(i, k)].abs() > best {
                    piv = i;
                    best = a[(i, k)].abs();
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if piv != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(piv, j)];
                    a[(piv, j)] = tmp;
                }
                sign = -sign;
            }
            det *= a[(k, k)];
            for i in (k + 1)..n {
                let f = a[(i, k)] / a[(k, k)];
                for j in k..n {
                    let upd = f * a[(k, j)];
                    a[(i, j)] -= upd;
                }
            }
        }
        sign * det
    }

    /// Inverse via LU with partial pivoting.
    pub fn inverse(&self) -> Result<Matrix, MatError> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        let scale = self.max_abs().max(1e-300);
        for k in 0..n {
            let (mut piv, mut best) = (k, a[(k, k)].abs());
            for i in (k + 1)..n {
                if a[(i, k)].abs() > best {
                    piv = i;
                    best = a[(i, k)].abs();
                }
            }
            if best <= 1e-13 * scale {
                return Err(MatError::Singular);
            }
            if piv != k {
                for j in 0..n {
                    a.data.swap(k * n + j, piv * n + j);
                    inv.data.swap(k * n + j, piv * n + j);
                }
            }
            let d = a[(k, k)];
            for j in 0..n {
                a[(k, j)] /= d;
                inv[(k, j)] /= d;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[(i, k)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let (u, v) = (f * a[(k, j)], f * inv[(k, j)]);
                    a[(i, j)] -= u;
                    inv[(i, j)] -= v;
                }
            }
        }
        Ok(inv)
    }

    /// Eigenvalues (descending) and orthonormal eigenvectors (as columns)
    /// of a symmetric matrix, by cyclic Jacobi rotations. The input is
    /// symmetrized first.
    pub fn sym_eigen(&self) -> Result<(Vec<f64>, Matrix), MatError> {
        if !self.is_symmetric(1e-10) {
            return Err(MatError::DimMismatch { ctx: "sym_eigen expects a symmetric matrix" });
        }
        let mut a = self.symmetrized();
        let n = a.rows;
        let mut v = Matrix::identity(n);
        let scale = a.frob_norm().max(1e-300);
        let mut converged = false;
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
            if off.sqrt() <= 1e-13 * scale {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for i in 0..n {
                        let (aip, aiq) = (a[(i, p)], a[(i, q)]);
                        a[(i, p)] = c * aip - s * aiq;
                        a[(i, q)] = s * aip + c * aiq;
                    }
                    for j in 0..n {
                        let (apj, aqj) = (a[(p, j)], a[(q, j)]);
                        a[(p, j)] = c * apj - s * aqj;
                        a[(q, j)] = s * apj + c * aqj;
                    }
                    for i in 0..n {
                        let (vip, viq) = (v[(i, p)], v[(i, q)]);
                        v[(i, p)] = c * vip - s * viq;
                        v[(i, q)] = s * vip + c * viq;
                    }
                }
            }
        }
        if !converged {
            return Err(MatError::NoConvergence { what: "Jacobi eigendecomposition" });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
        let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
        let mut vecs = Matrix::zeros(n, n);
        for (newj, &oldj) in order.iter().enumerate() {
            for i in 0..n {
                vecs[(i, newj)] = v[(i, oldj)];
            }
        }
        Ok((vals, vecs))
    }

    /// Full singular value decomposition `S * V * D^T = M` with singular
    /// values sorted descending. One-sided Jacobi on the columns; null
    /// directions of `S` are completed by Gram-Schmidt so `S` stays
    /// orthogonal even for rank-deficient input.
    pub fn svd(&self) -> Result<Svd, MatError> {
        let (m, n) = (self.rows, self.cols);
        let mut a = self.clone();
        let mut d = Matrix::identity(n);
        let scale = self.frob_norm().max(1e-300);
        let mut converged = false;
        for _sweep in 0..120 {
            let mut max_cross = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    let mut app = 0.0;
                    let mut aqq = 0.0;
                    let mut apq = 0.0;
                    for i in 0..m {
                        app += a[(i, p)] * a[(i, p)];
                        aqq += a[(i, q)] * a[(i, q)];
                        apq += a[(i, p)] * a[(i, q)];
                    }
                    max_cross = max_cross.max(apq.abs() / scale.powi(2));
                    if apq.abs() <= 1e-15 * scale * scale {
                        continue;
                    }
                    let zeta = (aqq - app) / (2.0 * apq);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for i in 0..m {
                        let (aip, aiq) = (a[(i, p)], a[(i, q)]);
                        a[(i, p)] = c * aip - s * aiq;
                        a[(i, q)] = s * aip + c * aiq;
                    }
                    for i in 0..n {
                        let (dip, diq) = (d[(i, p)], d[(i, q)]);
                        d[(i, p)] = c * dip - s * diq;
                        d[(i, q)] = s * dip + c * diq;
                    }
                }
            }
            if max_cross <= 1e-14 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(MatError::NoConvergence { what: "Jacobi SVD" });
        }
        let mut sigma: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt())
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
        let sorted: Vec<f64> = order.iter().map(|&j| sigma[j]).collect();
        sigma = sorted;
        let mut s = Matrix::zeros(m, m);
        let mut dd = Matrix::zeros(n, n);
        let smax = sigma.first().copied().unwrap_or(0.0);
        let mut filled = 0usize;
        for (newj, &oldj) in order.iter().enumerate() {
            for i in 0..n {
                dd[(i, newj)] = d[(i, oldj)];
            }
            if newj < m && sigma[newj] > 1e-12 * smax.max(1e-300) {
                for i in 0..m {
                    s[(i, newj)] = a[(i, oldj)] / sigma[newj];
                }
                filled = newj + 1;
            }
        }
        // complete the left factor to a full orthonormal basis
        for j in filled..m {
            let mut best: Option<Vec<f64>> = None;
            let mut best_norm = 0.0;
            for e in 0..m {
                let mut v = vec![0.0; m];
                v[e] = 1.0;
                for k in 0..j {
                    let dot: f64 = (0..m).map(|i| s[(i, k)] * v[i]).sum();
                    for (i, vi) in v.iter_mut().enumerate() {
                        *vi -= dot * s[(i, k)];
                    }
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > best_norm {
                    best_norm = norm;
                    best = Some(v);
                }
            }
            let mut v = best.expect("basis completion");
            // one re-orthogonalization pass for numerical hygiene
            for k in 0..j {
                let dot: f64 = (0..m).map(|i| s[(i, k)] * v[i]).sum();
                for (i, vi) in v.iter_mut().enumerate() {
                    *vi -= dot * s[(i, k)];
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for i in 0..m {
                s[(i, j)] = v[i] / norm;
            }
        }
        let sigma_out: Vec<f64> = sigma.into_iter().take(m.min(n)).collect();
        Ok(Svd { s, sigma: sigma_out, d: dd, rows: m, cols: n })
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

impl Mul<f64> for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: f64) -> Matrix {
        self.scale(rhs)
    }
}

/// Result of [`Matrix::svd`].
#[derive(Debug, Clone)]
pub struct Svd {
    /// Left orthogonal factor, `rows x rows`.
    pub s: Matrix,
    /// Singular values, descending, length `min(rows, cols)`.
    pub sigma: Vec<f64>,
    /// Right orthogonal factor, `cols x cols`.
    pub d: Matrix,
    rows: usize,
    cols: usize,
}

impl Svd {
    /// The rectangular diagonal middle factor as a matrix.
    pub fn v_matrix(&self) -> Matrix {
        let mut v = Matrix::zeros(self.rows, self.cols);
        for (i, &s) in self.sigma.iter().enumerate() {
            v[(i, i)] = s;
        }
        v
    }

    /// Reconstructs `S * V * D^T`.
    pub fn reconstruct(&self) -> Matrix {
        &(&self.s * &self.v_matrix()) * &self.d.transpose()
    }
}
