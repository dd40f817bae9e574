//! Dense real linear algebra for the small matrices this crate works with.
//!
//! Everything is backed by a row-major `Vec<f64>`. The decompositions are a
//! cyclic Jacobi symmetric eigensolver and a pseudoinverse built from the
//! eigendecomposition of the Gram matrix `A'A`; candidate blocks here never
//! exceed a handful of columns, so conditioning is benign and no external
//! LAPACK is needed.

use std::ops::{Index, IndexMut};

use crate::{Error, Result};

/// Dense real matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from a row-major vector; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        Mat { rows, cols, data }
    }

    /// Build entrywise from a closure over `(row, col)`.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Diagonal matrix from the given entries.
    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Mat::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Column vector from a slice.
    pub fn col_vec(data: &[f64]) -> Self {
        Mat::from_vec(data.len(), 1, data.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Row `i` as a contiguous slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copy of column `j`.
    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Transpose.
    pub fn t(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// `self * b`.
    pub fn mul(&self, b: &Mat) -> Mat {
        assert_eq!(self.cols, b.rows, "mul: inner dimensions differ");
        let mut out = Mat::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let v = self[(i, l)];
                if v == 0.0 {
                    continue;
                }
                let brow = b.row(l);
                let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
                for j in 0..b.cols {
                    orow[j] += v * brow[j];
                }
            }
        }
        out
    }

    /// `self' * b` without materializing the transpose.
    pub fn tr_mul(&self, b: &Mat) -> Mat {
        assert_eq!(self.rows, b.rows, "tr_mul: row counts differ");
        let mut out = Mat::zeros(self.cols, b.cols);
        for t in 0..self.rows {
            let arow = self.row(t);
            let brow = b.row(t);
            for i in 0..self.cols {
                let v = arow[i];
                if v == 0.0 {
                    continue;
                }
                let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
                for j in 0..b.cols {
                    orow[j] += v * brow[j];
                }
            }
        }
        out
    }

    /// `self * b'`.
    pub fn mul_tr(&self, b: &Mat) -> Mat {
        assert_eq!(self.cols, b.cols, "mul_tr: column counts differ");
        let mut out = Mat::zeros(self.rows, b.rows);
        for i in 0..self.rows {
            let arow = self.row(i);
            for j in 0..b.rows {
                let brow = b.row(j);
                let mut s = 0.0;
                for l in 0..self.cols {
                    s += arow[l] * brow[l];
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    /// Matrix-vector product `self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "mul_vec: dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut s = 0.0;
            for j in 0..self.cols {
                s += row[j] * x[j];
            }
            out[i] = s;
        }
        out
    }

    /// `self' * x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len(), "tr_mul_vec: dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let v = x[i];
            for j in 0..self.cols {
                out[j] += row[j] * v;
            }
        }
        out
    }

    pub fn add(&self, b: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (b.rows, b.cols), "add: shape mismatch");
        let data = self.data.iter().zip(&b.data).map(|(x, y)| x + y).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, b: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (b.rows, b.cols), "sub: shape mismatch");
        let data = self.data.iter().zip(&b.data).map(|(x, y)| x - y).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: f64) -> Mat {
        let data = self.data.iter().map(|x| x * c).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    /// Frobenius norm.
    pub fn frob(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    /// True if every entry is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Trace (square matrices).
    pub fn trace(&self) -> f64 {
        assert_eq!(self.rows, self.cols, "trace: matrix not square");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Keep the columns listed in `idx`, in that order.
    pub fn select_cols(&self, idx: &[usize]) -> Mat {
        let mut out = Mat::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (jj, &j) in idx.iter().enumerate() {
                out[(i, jj)] = self[(i, j)];
            }
        }
        out
    }

    fn is_symmetric_within(&self, rel: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.max_abs().max(1e-300);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > rel * scale {
                    return false;
                }
            }
        }
        true
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Symmetric eigendecomposition with eigenvalues sorted descending and
/// orthonormal eigenvector columns in matching order.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Input must be square and symmetric within `1e-10` relative; the working
/// copy is symmetrized before sweeping so the rotations see an exactly
/// symmetric matrix.
pub fn sym_eig(a: &Mat) -> Result<SymEig> {
    if a.rows() != a.cols() {
        return Err(Error::Dimension(format!(
            "sym_eig requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_symmetric_within(1e-10) {
        return Err(Error::NotSymmetric);
    }
    let n = a.rows();
    let mut d = a.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (d[(i, j)] + d[(j, i)]);
            d[(i, j)] = avg;
            d[(j, i)] = avg;
        }
    }
    let mut v = Mat::identity(n);
    let scale = d.max_abs().max(1e-300);

    for _sweep in 0..64 {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(d[(p, q)].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = d[(p, q)];
                if apq.abs() <= 1e-300 * scale {
                    continue;
                }
                let theta = 0.5 * (d[(q, q)] - d[(p, p)]) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let app = d[(p, p)];
                let aqq = d[(q, q)];
                d[(p, p)] = app - t * apq;
                d[(q, q)] = aqq + t * apq;
                d[(p, q)] = 0.0;
                d[(q, p)] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = d[(r, p)];
                        let arq = d[(r, q)];
                        d[(r, p)] = c * arp - s * arq;
                        d[(p, r)] = d[(r, p)];
                        d[(r, q)] = s * arp + c * arq;
                        d[(q, r)] = d[(r, q)];
                    }
                }
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[(j, j)].partial_cmp(&d[(i, i)]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[(i, i)]).collect();
    let eigenvectors = v.select_cols(&order);
    Ok(SymEig { eigenvalues, eigenvectors })
}

/// Pseudoinverse of a symmetric PSD matrix with singular-value semantics:
/// eigenvalues at or below `(rtol_sv * sigma_max)^2` are truncated to zero,
/// where `sigma_max` is the largest singular value of the matrix whose Gram
/// this is.
fn gram_pinv(g: &Mat, rtol_sv: f64) -> Result<Mat> {
    let eig = sym_eig(g)?;
    let lam_max = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let n = g.rows();
    if lam_max == 0.0 {
        return Ok(Mat::zeros(n, n));
    }
    // Null eigenvalues of a computed Gram matrix carry O(n*eps*lam_max)
    // rounding noise, far above rtol^2*lam_max; the floor keeps that noise
    // truncated whatever the singular-value tolerance is.
    let noise_floor = 100.0 * n as f64 * f64::EPSILON;
    let cut = lam_max * (rtol_sv * rtol_sv).max(noise_floor);
    let mut out = Mat::zeros(n, n);
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam <= cut {
            continue;
        }
        let inv = 1.0 / lam;
        for r in 0..n {
            let vr = eig.eigenvectors[(r, j)];
            if vr == 0.0 {
                continue;
            }
            for c in 0..n {
                out[(r, c)] += inv * vr * eig.eigenvectors[(c, j)];
            }
        }
    }
    Ok(out)
}

/// Default relative truncation tolerance for `pinv`:
/// `max(rows, cols) * machine epsilon` against the largest singular value.
pub fn default_pinv_rtol(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

/// Moore–Penrose pseudoinverse via eigendecomposition of the Gram matrix.
///
/// Singular values at or below `rtol * sigma_max` are truncated to zero; a
/// zero matrix maps to the zero matrix of transposed shape. `rtol = None`
/// uses [`default_pinv_rtol`].
pub fn pinv(a: &Mat, rtol: Option<f64>) -> Mat {
    let rtol = rtol.unwrap_or_else(|| default_pinv_rtol(a.rows(), a.cols()));
    if a.rows() < a.cols() {
        return pinv(&a.t(), Some(rtol)).t();
    }
    let g = a.tr_mul(a);
    // g is symmetric by construction, sym_eig cannot fail here.
    let w = gram_pinv(&g, rtol).expect("Gram matrix is symmetric");
    w.mul_tr(a)
}

/// Annihilator (residual-maker) projection `M_A = I - A (A'A)^+ A'`.
///
/// Symmetric and idempotent; `M_A * A` vanishes. A zero input yields the
/// identity.
pub fn annihilator(a: &Mat) -> Mat {
    let rtol = default_pinv_rtol(a.rows(), a.cols());
    let g = a.tr_mul(a);
    let w = gram_pinv(&g, rtol).expect("Gram matrix is symmetric");
    let aw = a.mul(&w);
    let p = aw.mul_tr(a);
    let t = a.rows();
    let mut m = Mat::zeros(t, t);
    for i in 0..t {
        for j in 0..t {
            let avg = 0.5 * (p[(i, j)] + p[(j, i)]);
            m[(i, j)] = if i == j { 1.0 - avg } else { -avg };
        }
    }
    m
}

/// Log-determinant of a symmetric positive definite matrix as the sum of
/// log-eigenvalues.
///
/// Any eigenvalue at or below the floor (`1e-12 * lambda_max` by default)
/// signals a singular objective via [`Error::NotPositiveDefinite`] instead of
/// clamping; callers treat the subset as inadmissible.
pub fn logdet_pd(a: &Mat, floor: Option<f64>) -> Result<f64> {
    let eig = sym_eig(a)?;
    let lam_max = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if lam_max <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    let floor = floor.unwrap_or(1e-12 * lam_max);
    let mut acc = 0.0;
    for &lam in &eig.eigenvalues {
        if lam <= floor {
            return Err(Error::NotPositiveDefinite);
        }
        acc += lam.ln();
    }
    Ok(acc)
}

/// Symmetric inverse square root `S` of a symmetric positive definite `A`,
/// satisfying `S A S = I`.
pub fn inv_sqrt_sym(a: &Mat) -> Result<Mat> {
    let eig = sym_eig(a)?;
    let lam_max = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if lam_max <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    let n = a.rows();
    let mut out = Mat::zeros(n, n);
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam <= 1e-12 * lam_max {
            return Err(Error::NotPositiveDefinite);
        }
        let w = 1.0 / lam.sqrt();
        for r in 0..n {
            let vr = eig.eigenvectors[(r, j)];
            for c in 0..n {
                out[(r, c)] += w * vr * eig.eigenvectors[(c, j)];
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    Ok(out)
}
