//! Dense symmetric linear algebra used by every policy.
//!
//! Matrices here are small (d ≤ a few hundred) and dense. The
//! eigendecomposition is a cyclic Jacobi solver: slow asymptotically, but
//! it yields orthonormal eigenvectors to machine precision, which the
//! truncated pseudo-inverse and the residual widths depend on.

use std::ops::Index;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Jacobi stops once the off-diagonal Frobenius mass falls below this
/// fraction of the total Frobenius norm.
const JACOBI_TOLERANCE: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix rows have unequal lengths")]
    Ragged,
    #[error("eigenvalue {index} is {value}; cannot invert a non-positive direction")]
    DegenerateSpectrum { index: usize, value: f64 },
    #[error("truncation rank {k} exceeds dimension {dim}")]
    RankOutOfRange { k: usize, dim: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `1 − cos(a, b)`, or `None` when either vector is zero.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 || !na.is_finite() || !nb.is_finite() {
        return None;
    }
    let cos = (dot(a, b) / (na * nb)).clamp(-1.0, 1.0);
    Some(1.0 - cos)
}

/// Index of the largest score, lowest index on ties. `None` for an empty slice.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// Row-major dense matrix.
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
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::Ragged);
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `self += scale · u vᵀ`
    pub fn add_outer(&mut self, u: &[f64], v: &[f64], scale: f64) {
        assert_eq!(u.len(), self.rows);
        assert_eq!(v.len(), self.cols);
        for (i, &ui) in u.iter().enumerate() {
            let s = scale * ui;
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (r, &vj) in row.iter_mut().zip(v) {
                *r += s * vj;
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Matrix, scale: f64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

/// Square matrix that is exactly symmetric.
///
/// Construction symmetrizes the input as `(A + Aᵀ)/2`; every mutator keeps
/// the mirror entries bitwise equal. Serialized as a list of rows; a
/// `{"diagonal": [...]}` object is also accepted on input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "Vec<Vec<f64>>")]
pub struct SymMatrix(Matrix);

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixRepr {
    Rows(Vec<Vec<f64>>),
    Diagonal { diagonal: Vec<f64> },
}

impl TryFrom<MatrixRepr> for SymMatrix {
    type Error = LinalgError;

    fn try_from(repr: MatrixRepr) -> Result<Self, LinalgError> {
        match repr {
            MatrixRepr::Rows(rows) => SymMatrix::from_rows(&rows),
            MatrixRepr::Diagonal { diagonal } => {
                if diagonal.iter().any(|v| !v.is_finite()) {
                    return Err(LinalgError::NonFinite);
                }
                Ok(SymMatrix::from_diagonal(&diagonal))
            }
        }
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.0.to_rows()
    }
}

impl SymMatrix {
    pub fn new(m: Matrix) -> Result<Self, LinalgError> {
        if m.rows != m.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: m.rows,
                got: m.cols,
            });
        }
        if !m.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let n = m.rows;
        let sym = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)])
            }
        });
        Ok(Self(sym))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn zeros(n: usize) -> Self {
        Self(Matrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(Matrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)]).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.0[(i, j)] == 0.0))
    }

    /// `self += scale · x xᵀ`
    pub fn add_outer(&mut self, x: &[f64], scale: f64) {
        let n = self.dim();
        assert_eq!(x.len(), n);
        for i in 0..n {
            for j in i..n {
                let v = self.0.data[i * n + j] + scale * x[i] * x[j];
                self.0.data[i * n + j] = v;
                self.0.data[j * n + i] = v;
            }
        }
    }

    /// `self += scale · other`
    pub fn add_scaled(&mut self, other: &SymMatrix, scale: f64) {
        self.0.add_scaled(&other.0, scale);
    }

    pub fn scaled(&self, scale: f64) -> SymMatrix {
        let mut m = self.0.clone();
        m.data.iter_mut().for_each(|v| *v *= scale);
        SymMatrix(m)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.0.matvec(x)
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    /// Lower-triangular `L` with `L Lᵀ = self`.
    pub fn cholesky(&self) -> Result<Matrix, LinalgError> {
        let n = self.dim();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut diag = self.0[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(LinalgError::NotPositiveDefinite);
            }
            let ljj = diag.sqrt();
            l.set(j, j, ljj);
            for i in (j + 1)..n {
                let mut v = self.0[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)];
                }
                l.set(i, j, v / ljj);
            }
        }
        Ok(l)
    }

    /// Solves `self · x = b` for positive-definite `self`.
    pub fn solve_spd(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                got: b.len(),
            });
        }
        let l = self.cholesky()?;
        Ok(cholesky_solve(&l, b))
    }

    pub fn inverse_spd(&self) -> Result<SymMatrix, LinalgError> {
        let n = self.dim();
        let l = self.cholesky()?;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = cholesky_solve(&l, &e);
            for (i, v) in col.into_iter().enumerate() {
                inv.set(i, j, v);
            }
        }
        SymMatrix::new(inv)
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Solves `L Lᵀ x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut v = y[i];
        for k in 0..i {
            v -= l[(i, k)] * y[k];
        }
        y[i] = v / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut v = y[i];
        for k in (i + 1)..n {
            v -= l[(k, i)] * y[k];
        }
        y[i] = v / l[(i, i)];
    }
    y
}

/// Eigendecomposition `A = U Λ Uᵀ` with eigenvalues in non-increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    values: Vec<f64>,
    /// Column `i` pairs with `values[i]`.
    vectors: Matrix,
}

impl SymEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    /// `u_iᵀ v` for every eigenvector.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (r, &vr) in v.iter().enumerate() {
            let row = self.vectors.row(r);
            for (o, &u) in out.iter_mut().zip(row) {
                *o += u * vr;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)])
                .sum()
        })
    }
}

/// Cyclic Jacobi eigendecomposition.
pub fn eigendecompose(a: &SymMatrix) -> Result<SymEigen, LinalgError> {
    if !a.as_matrix().is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.dim();
    let mut m = a.as_matrix().data.clone();
    let mut v = Matrix::identity(n).data;
    let total = a.as_matrix().frobenius();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOLERANCE * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_finite() {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                } else {
                    0.0
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their pre-sort order
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[r * n + order[c]]);
    Ok(SymEigen { values, vectors })
}

/// Number of eigenvalues `≥ threshold`.
pub fn rank_threshold(e: &SymEigen, threshold: f64) -> usize {
    e.values.iter().take_while(|&&v| v >= threshold).count()
}

/// `U_{1:k} Λ_{1:k}⁻¹ U_{1:k}ᵀ y`; zero when `k = 0`.
pub fn truncated_pinv_apply(e: &SymEigen, k: usize, y: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = e.dim();
    if k > n {
        return Err(LinalgError::RankOutOfRange { k, dim: n });
    }
    if y.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if let Some((index, &value)) = e.values[..k].iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(LinalgError::DegenerateSpectrum { index, value });
    }
    let coeffs = e.project(y);
    let mut out = vec![0.0; n];
    for c in 0..k {
        let w = coeffs[c] / e.values[c];
        for (r, o) in out.iter_mut().enumerate() {
            *o += e.vectors[(r, c)] * w;
        }
    }
    Ok(out)
}

/// `‖U_{k+1:d}ᵀ v‖₂`, the part of `v` outside the leading `k` eigendirections.
pub fn residual_projection_norm(e: &SymEigen, k: usize, v: &[f64]) -> f64 {
    let n = e.dim();
    if k >= n {
        return 0.0;
    }
    let mut acc = 0.0;
    for c in k..n {
        let p: f64 = (0..n).map(|r| e.vectors[(r, c)] * v[r]).sum();
        acc += p * p;
    }
    acc.sqrt()
}

/// Largest singular value, from the smaller Gram matrix.
pub fn spectral_norm(a: &Matrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    let gram = if a.cols() <= a.rows() {
        a.transpose().matmul(a)
    } else {
        a.matmul(&a.transpose())
    };
    let gram = SymMatrix::new(gram).expect("Gram matrix of a finite matrix");
    let e = eigendecompose(&gram).expect("finite Gram matrix");
    e.values.first().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// `[[0, A], [Aᵀ, 0]]`, a symmetric embedding with the same spectral norm as `A`.
pub fn dilation(a: &Matrix) -> SymMatrix {
    let (m, n) = (a.rows(), a.cols());
    let d = Matrix::from_fn(m + n, m + n, |i, j| {
        if i < m && j >= m {
            a[(i, j - m)]
        } else if i >= m && j < m {
            a[(j, i - m)]
        } else {
            0.0
        }
    });
    SymMatrix(d)
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn symmetric_spectral_norm(a: &SymMatrix) -> Result<f64, LinalgError> {
    let e = eigendecompose(a)?;
    Ok(e.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn orthonormality_error(e: &SymEigen) -> f64 {
        let u = e.vectors();
        u.transpose().matmul(u).max_abs_diff(&Matrix::identity(e.dim()))
    }

    #[test]
    fn identity_eigenvalues() {
        let e = eigendecompose(&SymMatrix::identity(2)).unwrap();
        assert_eq!(e.values(), &[1.0, 1.0]);
    }

    #[test]
    fn diagonal_eigenpairs() {
        let e = eigendecompose(&sym(&[&[3.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(e.values(), &[3.0, 1.0]);
        assert_eq!(e.vectors()[(0, 0)].abs(), 1.0);
        assert_eq!(e.vectors()[(1, 1)].abs(), 1.0);
    }

    #[test]
    fn two_by_two_characteristic_roots() {
        // λ² − 4λ + 3 = 0
        let e = eigendecompose(&sym(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert!((e.values()[0] - 3.0).abs() < 1e-12);
        assert!((e.values()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ascending_diagonal_is_reordered() {
        let e = eigendecompose(&SymMatrix::from_diagonal(&[1.0, 5.0, 3.0])).unwrap();
        assert_eq!(e.values(), &[5.0, 3.0, 1.0]);
        assert_eq!(e.vectors()[(1, 0)].abs(), 1.0);
    }

    #[test]
    fn ties_keep_input_order() {
        let e = eigendecompose(&SymMatrix::from_diagonal(&[2.0, 7.0, 2.0])).unwrap();
        assert_eq!(e.values(), &[7.0, 2.0, 2.0]);
        assert_eq!(e.vectors()[(0, 1)], 1.0);
        assert_eq!(e.vectors()[(2, 2)], 1.0);
    }

    #[test]
    fn non_finite_is_rejected() {
        let m = Matrix::from_fn(2, 2, |i, j| if i == j { f64::NAN } else { 0.0 });
        assert_eq!(SymMatrix::new(m), Err(LinalgError::NonFinite));
        assert!(matches!(
            SymMatrix::from_rows(&[vec![1.0, f64::INFINITY], vec![0.0, 1.0]]),
            Err(LinalgError::NonFinite)
        ));
    }

    #[test]
    fn construction_symmetrizes() {
        let s = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![4.0, 1.0]]).unwrap();
        assert_eq!(s[(0, 1)], 3.0);
        assert_eq!(s[(1, 0)], 3.0);
    }

    #[test]
    fn rank_threshold_counts() {
        let e = eigendecompose(&SymMatrix::from_diagonal(&[5.0, 3.0, 0.5])).unwrap();
        assert_eq!(rank_threshold(&e, 1.0), 2);
        assert_eq!(rank_threshold(&e, 10.0), 0);
        assert_eq!(rank_threshold(&e, 0.5), 3);
    }

    #[test]
    fn pinv_of_identity_is_identity() {
        let e = eigendecompose(&SymMatrix::identity(3)).unwrap();
        let y = [1.5, -2.0, 0.25];
        let x = truncated_pinv_apply(&e, 3, &y).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn pinv_empty_truncation_is_zero() {
        let e = eigendecompose(&sym(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert_eq!(truncated_pinv_apply(&e, 0, &[4.0, 7.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn pinv_rank_one_projection() {
        let e = eigendecompose(&SymMatrix::from_diagonal(&[2.0, 1.0])).unwrap();
        let x = truncated_pinv_apply(&e, 1, &[4.0, 7.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15);
        assert_eq!(x[1], 0.0);
    }

    #[test]
    fn pinv_rejects_non_positive_direction() {
        let e = eigendecompose(&SymMatrix::from_diagonal(&[2.0, -1.0])).unwrap();
        assert!(matches!(
            truncated_pinv_apply(&e, 2, &[1.0, 1.0]),
            Err(LinalgError::DegenerateSpectrum { index: 1, .. })
        ));
        assert!(matches!(
            truncated_pinv_apply(&e, 3, &[1.0, 1.0]),
            Err(LinalgError::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn residual_norm_cases() {
        let e = eigendecompose(&SymMatrix::from_diagonal(&[2.0, 1.0])).unwrap();
        assert_eq!(residual_projection_norm(&e, 2, &[3.0, 4.0]), 0.0);
        assert!((residual_projection_norm(&e, 0, &[3.0, 4.0]) - 5.0).abs() < 1e-12);
        assert!((residual_projection_norm(&e, 1, &[3.0, 4.0]) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_cases() {
        let d = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, -4.0]]).unwrap();
        assert!((spectral_norm(&d) - 4.0).abs() < 1e-12);
        assert_eq!(spectral_norm(&Matrix::zeros(3, 2)), 0.0);
        // top eigenvalue of AᵀA solves λ² − 3λ + 1 = 0
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let golden = ((3.0 + 5f64.sqrt()) / 2.0).sqrt();
        assert!((spectral_norm(&a) - golden).abs() < 1e-8 * golden);
        assert!((golden - 1.618033988749895).abs() < 1e-12);
    }

    #[test]
    fn dilation_cases() {
        let a = Matrix::from_rows(&[vec![2.0]]).unwrap();
        let s = dilation(&a);
        assert_eq!(s.as_matrix().to_rows(), vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
        assert!((spectral_norm(s.as_matrix()) - 2.0).abs() < 1e-12);
        let z = dilation(&Matrix::zeros(2, 3));
        assert_eq!(z.dim(), 5);
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let s = SymMatrix::from_diagonal(&[1.0, -1.0]);
        assert_eq!(s.cholesky(), Err(LinalgError::NotPositiveDefinite));
    }

    #[test]
    fn argmax_lowest_index_on_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), Some(1));
        assert_eq!(argmax(&[0.0, 0.0]), Some(0));
        assert_eq!(argmax(&[]), None);
    }

    fn square(n: usize) -> impl Strategy<Value = SymMatrix> {
        prop::collection::vec(-10.0..10.0f64, n * n)
            .prop_map(move |v| SymMatrix::new(Matrix::from_fn(n, n, |i, j| v[i * n + j])).unwrap())
    }

    fn sized_square() -> impl Strategy<Value = SymMatrix> {
        (1usize..=20).prop_flat_map(square)
    }

    fn spd(n: usize) -> impl Strategy<Value = SymMatrix> {
        prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |v| {
            let b = Matrix::from_fn(n, n, |i, j| v[i * n + j]);
            let mut g = b.matmul(&b.transpose());
            g.add_scaled(&Matrix::identity(n), 0.5);
            SymMatrix::new(g).unwrap()
        })
    }

    proptest! {
        #[test]
        fn reconstruction_and_orthonormality(a in sized_square()) {
            let e = eigendecompose(&a).unwrap();
            let tol = 1e-8 * a.max_abs().max(1.0);
            prop_assert!(e.reconstruct().max_abs_diff(a.as_matrix()) <= tol);
            prop_assert!(orthonormality_error(&e) <= 1e-10);
            prop_assert!(e.values().windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn full_rank_pinv_is_inverse(
            a in (1usize..=12).prop_flat_map(spd),
            seed in prop::collection::vec(-5.0..5.0f64, 12),
        ) {
            let n = a.dim();
            let y = &seed[..n];
            let e = eigendecompose(&a).unwrap();
            let x = truncated_pinv_apply(&e, n, y).unwrap();
            let exact = a.solve_spd(y).unwrap();
            let scale = norm(&exact).max(1e-300);
            let err = x.iter().zip(&exact).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            prop_assert!(err / scale <= 1e-8);
        }

        #[test]
        fn residual_pythagoras(
            a in (1usize..=12).prop_flat_map(square),
            raw in prop::collection::vec(-5.0..5.0f64, 12),
            k_frac in 0.0..=1.0f64,
        ) {
            let n = a.dim();
            let v = &raw[..n];
            let e = eigendecompose(&a).unwrap();
            let k = ((n as f64) * k_frac).round() as usize;
            let head: f64 = e.project(v)[..k].iter().map(|p| p * p).sum();
            let r = residual_projection_norm(&e, k, v);
            prop_assert!((r * r + head - dot(v, v)).abs() <= 1e-9 * dot(v, v).max(1.0));
        }

        #[test]
        fn dilation_preserves_norm(
            (m, n, v) in (1usize..=6, 1usize..=6)
                .prop_flat_map(|(m, n)| (Just(m), Just(n), prop::collection::vec(-3.0..3.0f64, m * n)))
        ) {
            let a = Matrix::from_fn(m, n, |i, j| v[i * n + j]);
            let direct = spectral_norm(&a);
            let via_dilation = spectral_norm(dilation(&a).as_matrix());
            let via_eigen = symmetric_spectral_norm(&dilation(&a)).unwrap();
            prop_assert!((direct - via_dilation).abs() <= 1e-9 * direct.max(1.0));
            prop_assert!((direct - via_eigen).abs() <= 1e-9 * direct.max(1.0));
        }
    }
}
