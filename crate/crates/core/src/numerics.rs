//! Dense linear-algebra kernel.
//!
//! Only what the analysis layers need: a row-major [`Matrix`], the top
//! singular value, the spectral radius, Cholesky-based ridge regression and
//! a Gram–Schmidt orthonormalizer for tangent-space iterations.

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::rng::SeededRng;

/// Relative change of the singular-value estimate that stops power iteration.
pub const SPECTRAL_NORM_RTOL: f64 = 1e-12;
pub const SPECTRAL_NORM_MAX_ITER: usize = 10_000;

/// Restarts of plain power iteration before the dense eigensolver takes over.
pub const SPECTRAL_RADIUS_RESTARTS: usize = 3;
const SPECTRAL_RADIUS_MAX_ITER: usize = 1_000;
/// Above this order the eigensolver fallback is still used, but the
/// call is slow; callers with huge reservoirs should prefer `spectral_norm`.
pub const DENSE_EIGEN_LIMIT: usize = 512;

/// Cholesky pivots below `SINGULAR_RTOL * max(diag)` are treated as zero.
pub const SINGULAR_RTOL: f64 = 1e-13;

// Fixed seeds for the internal start vectors; results are deterministic.
const NORM_SEED: u64 = 0x5EED_0001;
const RADIUS_SEED: u64 = 0x5EED_0002;

/// Dense real matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(invalid("ragged rows"));
        }
        Self::from_row_major(r, c, rows.concat())
    }

    /// Single-column matrix.
    pub fn column(v: &[f64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `out = self * x`
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols.max(1))) {
            *o = dot(row, x);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        if self.cols == 0 {
            return out;
        }
        self.matvec_into(x, &mut out);
        out
    }

    /// `selfᵀ * y`
    pub fn tr_matvec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * self`, exploiting symmetry.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for a in 0..n {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                let grow = &mut g.data[a * n..(a + 1) * n];
                for b in a..n {
                    grow[b] += ra * row[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                g.data[a * n + b] = g.data[b * n + a];
            }
        }
        g
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_finite(m: &Matrix) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(invalid("matrix has non-finite entries"))
    }
}

fn random_unit(n: usize, rng: &mut SeededRng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
    let s = norm2(&v);
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Largest singular value σ_max(M), by power iteration on MᵀM.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    check_finite(m)?;
    if m.max_abs() == 0.0 || m.rows == 0 || m.cols == 0 {
        return Ok(0.0);
    }
    let mut rng = SeededRng::new(NORM_SEED);
    let mut v = random_unit(m.cols, &mut rng);
    let mut sigma = 0.0;
    for _ in 0..SPECTRAL_NORM_MAX_ITER {
        let w = m.matvec(&v);
        let next = norm2(&w);
        if next == 0.0 {
            // start vector in the null space; draw another
            v = random_unit(m.cols, &mut rng);
            continue;
        }
        let done = (next - sigma).abs() <= SPECTRAL_NORM_RTOL * next;
        sigma = next;
        if done {
            break;
        }
        v = m.tr_matvec(&w);
        let s = norm2(&v);
        if s == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= s);
    }
    Ok(sigma)
}

/// Spectral radius max |eig(M)|.
///
/// Power iteration with restarts first; it accepts only a real dominant
/// eigenpair with a small residual. Complex or defective dominant spectra
/// fall through to a dense Schur decomposition. A start vector mapped
/// exactly to zero identifies a nilpotent matrix and yields 0.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    if !m.is_square() {
        return Err(invalid(format!(
            "spectral radius needs a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    check_finite(m)?;
    let n = m.rows;
    if n == 0 || m.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let scale = m.frobenius_norm();
    let mut rng = SeededRng::new(RADIUS_SEED);
    for _ in 0..SPECTRAL_RADIUS_RESTARTS {
        let mut v = random_unit(n, &mut rng);
        for _ in 0..SPECTRAL_RADIUS_MAX_ITER {
            let w = m.matvec(&v);
            let wn = norm2(&w);
            if wn == 0.0 {
                return Ok(0.0);
            }
            let mu = dot(&v, &w);
            let resid = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - mu * b).powi(2))
                .sum::<f64>()
                .sqrt();
            if resid <= 1e-12 * scale {
                return Ok(mu.abs());
            }
            v = w.into_iter().map(|x| x / wn).collect();
        }
    }
    dense_spectral_radius(m)
}

fn dense_spectral_radius(m: &Matrix) -> Result<f64> {
    let a = m.to_nalgebra();
    let mut rng = SeededRng::new(RADIUS_SEED ^ 0x5c4u64);
    // Permutation-like matrices stall the unshifted QR sweep; a random
    // orthogonal similarity leaves the spectrum alone and breaks the symmetry.
    for attempt in 0..4 {
        let b = if attempt == 0 {
            a.clone()
        } else {
            let q = random_orthogonal(m.rows, &mut rng).to_nalgebra();
            q.transpose() * &a * q
        };
        if let Some(schur) = nalgebra::linalg::Schur::try_new(b, f64::EPSILON, 20_000) {
            return Ok(schur
                .complex_eigenvalues()
                .iter()
                .fold(0.0, |acc, z| acc.max(z.norm())));
        }
    }
    Err(invalid("eigensolver did not converge"))
}

/// Cholesky factor of a symmetric positive-definite matrix (lower triangle).
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn new(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(invalid("Cholesky needs a square matrix"));
        }
        let n = a.rows;
        let max_diag = (0..n).fold(0.0f64, |m, i| m.max(a[(i, i)].abs()));
        let floor = SINGULAR_RTOL * max_diag;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > floor) {
                return Err(Error::Singular(format!(
                    "normal matrix is numerically singular at pivot {j}; use a ridge parameter mu > 0"
                )));
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `A w = b` with one round of iterative refinement against `a`.
    pub fn solve_refined(&self, a: &Matrix, b: &[f64]) -> Vec<f64> {
        let mut w = b.to_vec();
        self.solve_in_place(&mut w);
        let aw = a.matvec(&w);
        let mut r: Vec<f64> = b.iter().zip(&aw).map(|(x, y)| x - y).collect();
        self.solve_in_place(&mut r);
        w.iter_mut().zip(&r).for_each(|(x, d)| *x += d);
        w
    }
}

/// Ridge regression `argmin_W ‖XW − Y‖² + mu‖W‖²` via the normal equations.
pub fn ridge_solve(x: &Matrix, y: &Matrix, mu: f64) -> Result<Matrix> {
    if x.rows == 0 {
        return Err(invalid("ridge_solve needs at least one sample"));
    }
    if x.rows != y.rows {
        return Err(invalid(format!(
            "regressors have {} rows but targets have {}",
            x.rows, y.rows
        )));
    }
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(invalid("ridge parameter must be finite and nonnegative"));
    }
    check_finite(x)?;
    check_finite(y)?;
    let n = x.cols;
    let mut a = x.gram();
    for i in 0..n {
        a[(i, i)] += mu;
    }
    let chol = Cholesky::new(&a)?;
    let mut w = Matrix::zeros(n, y.cols);
    for j in 0..y.cols {
        let rhs = x.tr_matvec(&y.col(j));
        let sol = chol.solve_refined(&a, &rhs);
        for i in 0..n {
            w[(i, j)] = sol[i];
        }
    }
    Ok(w)
}

/// Modified Gram–Schmidt with one reorthogonalization pass.
///
/// Orthonormalizes `cols` in place and returns the diagonal of R. A column
/// that collapses to zero gets `0.0` on the diagonal and is left as the zero
/// vector.
pub fn orthonormalize(cols: &mut [Vec<f64>]) -> Vec<f64> {
    let k = cols.len();
    let mut diag = vec![0.0; k];
    for j in 0..k {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        for _pass in 0..2 {
            for q in done.iter() {
                let p = dot(q, v);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= p * b);
            }
        }
        let r = norm2(v);
        diag[j] = r;
        if r > 0.0 {
            v.iter_mut().for_each(|a| *a /= r);
        }
    }
    diag
}

/// Haar-distributed random orthogonal matrix.
pub fn random_orthogonal(n: usize, rng: &mut SeededRng) -> Matrix {
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.standard_normal()).collect())
        .collect();
    orthonormalize(&mut cols);
    let mut m = Matrix::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        for (i, &v) in c.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.standard_normal()).collect();
    Matrix { rows, cols, data }
}
