//! Small dense linear algebra: symmetric positive-definite solves and
//! quadratic forms over row-major matrices.
//!
//! Everything here works on matrices of at most a few hundred entries; there
//! is no blocking, no pivot reordering, and no attempt at sparse formats.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative pivot threshold below which a Cholesky factorization is rejected.
const PIVOT_REL_TOL: f64 = 1e-12;

/// Relative symmetry tolerance for SPD solves.
const SYMMETRY_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,
    #[error("non-finite entry at position {index}")]
    NonFinite { index: usize },
}

/// Dense vector of finite `f64` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self, NumericsError> {
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite { index });
        }
        Ok(Self(entries))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Dot product; panics on length mismatch.
    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.len(), other.len(), "dot length mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<f64>) -> Self {
        debug_assert!(entries.iter().all(|v| v.is_finite()));
        Self(entries)
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<'a> IntoIterator for &'a Vector {
    type Item = &'a f64;
    type IntoIter = std::slice::Iter<'a, f64>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Dense row-major matrix of finite `f64` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch {
                context: format!(
                    "matrix data length {} does not match {} x {}",
                    data.len(),
                    rows,
                    cols
                ),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

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

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "index out of range");
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.rows && j < self.cols, "index out of range");
        self.data[i * self.cols + j] = value;
    }

    /// Row-major entries.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Replaces the matrix by its symmetric part (A + Aᵀ)/2.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols, "symmetrize requires a square matrix");
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let avg = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, avg);
                self.set(j, i, avg);
            }
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, NumericsError> {
        if self.cols != other.rows {
            return Err(NumericsError::DimensionMismatch {
                context: format!(
                    "cannot multiply {}x{} by {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, v: &Vector) -> Result<Vector, NumericsError> {
        if self.cols != v.len() {
            return Err(NumericsError::DimensionMismatch {
                context: format!("cannot apply {}x{} to vector of length {}", self.rows, self.cols, v.len()),
            });
        }
        let mut out = vec![0.0; self.rows];
        for (i, entry) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self.get(i, j) * v[j];
            }
            *entry = acc;
        }
        Ok(Vector::from_vec_unchecked(out))
    }
}

/// Lower Cholesky factor L with A = L·Lᵀ.
///
/// A diagonal pivot at or below `1e-12` times the largest diagonal entry of A
/// is treated as a failure: the posterior-scale matrices this crate solves are
/// well conditioned, so a tiny pivot signals a genuinely degenerate input.
pub fn cholesky_lower(a: &Matrix) -> Result<Matrix, NumericsError> {
    if a.rows() != a.cols() {
        return Err(NumericsError::DimensionMismatch {
            context: format!("cholesky requires a square matrix, got {}x{}", a.rows(), a.cols()),
        });
    }
    let n = a.rows();
    let max_diag = (0..n).fold(0.0_f64, |acc, i| acc.max(a.get(i, i)));
    if n > 0 && max_diag <= 0.0 {
        return Err(NumericsError::NotPositiveDefinite { row: 0, pivot: max_diag });
    }
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if s <= PIVOT_REL_TOL * max_diag {
                    return Err(NumericsError::NotPositiveDefinite { row: i, pivot: s });
                }
                l.set(i, j, s.sqrt());
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Solves A·X = B for symmetric positive-definite A via Cholesky, never by
/// forming A⁻¹ explicitly.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix, NumericsError> {
    if a.rows() != a.cols() {
        return Err(NumericsError::DimensionMismatch {
            context: format!("solve_spd requires a square matrix, got {}x{}", a.rows(), a.cols()),
        });
    }
    if a.rows() != b.rows() {
        return Err(NumericsError::DimensionMismatch {
            context: format!(
                "solve_spd: A is {}x{} but B has {} rows",
                a.rows(),
                a.cols(),
                b.rows()
            ),
        });
    }
    if !a.is_symmetric(SYMMETRY_REL_TOL) {
        return Err(NumericsError::NotSymmetric);
    }
    let l = cholesky_lower(a)?;
    let n = a.rows();
    let k = b.cols();
    let mut x = Matrix::zeros(n, k);
    // One forward + backward substitution per right-hand-side column.
    let mut y = vec![0.0; n];
    for col in 0..k {
        for i in 0..n {
            let mut s = b.get(i, col);
            for (j, yj) in y.iter().enumerate().take(i) {
                s -= l.get(i, j) * yj;
            }
            y[i] = s / l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= l.get(j, i) * x.get(j, col);
            }
            x.set(i, col, s / l.get(i, i));
        }
    }
    Ok(x)
}

/// Solves A·x = b for a single right-hand-side vector.
pub fn solve_spd_vec(a: &Matrix, b: &Vector) -> Result<Vector, NumericsError> {
    let rhs = Matrix::new(b.len(), 1, b.as_slice().to_vec())?;
    let x = solve_spd(a, &rhs)?;
    Ok(Vector::from_vec_unchecked(x.data().to_vec()))
}

/// vᵀ·A·v computed as the plain double-contraction sum.
pub fn quadratic_form(a: &Matrix, v: &Vector) -> Result<f64, NumericsError> {
    if a.rows() != a.cols() || a.rows() != v.len() {
        return Err(NumericsError::DimensionMismatch {
            context: format!(
                "quadratic_form: A is {}x{}, v has length {}",
                a.rows(),
                a.cols(),
                v.len()
            ),
        });
    }
    let mut acc = 0.0;
    for i in 0..v.len() {
        for j in 0..v.len() {
            acc += v[i] * a.get(i, j) * v[j];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn residual_max(a: &Matrix, x: &Matrix, b: &Matrix) -> f64 {
        let ax = a.matmul(x).unwrap();
        ax.data()
            .iter()
            .zip(b.data())
            .fold(0.0_f64, |acc, (p, q)| acc.max((p - q).abs()))
    }

    #[test]
    fn solve_identity() {
        let a = Matrix::identity(2);
        let b = Matrix::new(2, 1, vec![3.0, 4.0]).unwrap();
        let x = solve_spd(&a, &b).unwrap();
        assert_eq!(x.data(), &[3.0, 4.0]);
    }

    #[test]
    fn solve_diagonal_inverse() {
        let a = Matrix::diagonal(&[2.0, 4.0]);
        let b = Matrix::identity(2);
        let x = solve_spd(&a, &b).unwrap();
        for (got, want) in x.data().iter().zip(&[0.5, 0.0, 0.0, 0.25]) {
            assert!((got - want).abs() <= 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn solve_two_by_two() {
        // [[2,1],[1,2]] x = [1,1] has the solution [1/3, 1/3].
        let a = Matrix::new(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let b = Matrix::new(2, 1, vec![1.0, 1.0]).unwrap();
        let x = solve_spd(&a, &b).unwrap();
        assert!((x.get(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((x.get(1, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!(residual_max(&a, &x, &b) < 1e-15);
    }

    #[test]
    fn solve_rejects_indefinite() {
        let a = Matrix::new(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        let b = Matrix::identity(2);
        match solve_spd(&a, &b) {
            Err(NumericsError::NotPositiveDefinite { .. }) => {}
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn solve_rejects_zero_matrix() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::identity(2);
        assert!(matches!(
            solve_spd(&a, &b),
            Err(NumericsError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn solve_rejects_asymmetric() {
        let a = Matrix::new(2, 2, vec![2.0, 0.5, 0.0, 2.0]).unwrap();
        let b = Matrix::identity(2);
        assert_eq!(solve_spd(&a, &b), Err(NumericsError::NotSymmetric));
    }

    #[test]
    fn solve_rejects_dimension_mismatch() {
        let a = Matrix::identity(3);
        let b = Matrix::identity(2);
        assert!(matches!(
            solve_spd(&a, &b),
            Err(NumericsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quadratic_form_squared_norm() {
        let a = Matrix::identity(2);
        let v = Vector::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(quadratic_form(&a, &v).unwrap(), 25.0);
    }

    #[test]
    fn quadratic_form_diagonal() {
        let a = Matrix::diagonal(&[1.0, 0.72678]);
        let v = Vector::new(vec![2.0, 1.0]).unwrap();
        assert!((quadratic_form(&a, &v).unwrap() - 4.72678).abs() < 1e-12);
    }

    #[test]
    fn quadratic_form_zero_matrix() {
        let a = Matrix::zeros(3, 3);
        let v = Vector::new(vec![1.0, -2.0, 7.5]).unwrap();
        assert_eq!(quadratic_form(&a, &v).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_form_dimension_mismatch() {
        let a = Matrix::identity(3);
        let v = Vector::new(vec![1.0, 2.0]).unwrap();
        assert!(quadratic_form(&a, &v).is_err());
    }

    #[test]
    fn rejects_non_finite_entries() {
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(NumericsError::NonFinite { index: 1 })
        ));
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
    }

    /// Random SPD matrix with condition number at most `cond`, built as
    /// QᵀDQ from random Householder-style rotations.
    fn random_spd(n: usize, cond: f64, rng: &mut RngStream) -> Matrix {
        let mut a = Matrix::zeros(n, n);
        // Random orthogonal-ish basis via Gram-Schmidt on random normals.
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
        while basis.len() < n {
            let v = rng.standard_normal_vec(n);
            let mut v: Vec<f64> = v.as_slice().to_vec();
            for b in &basis {
                let proj: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= proj * y;
                }
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for x in v.iter_mut() {
                    *x /= norm;
                }
                basis.push(v);
            }
        }
        // Log-uniform eigenvalues spanning [1, cond].
        for (k, b) in basis.iter().enumerate() {
            let t = if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
            let lambda = cond.powf(t);
            for i in 0..n {
                for j in 0..n {
                    a.set(i, j, a.get(i, j) + lambda * b[i] * b[j]);
                }
            }
        }
        a.symmetrize();
        a
    }

    #[test]
    fn solve_residual_on_random_spd() {
        let mut rng = RngStream::new(2024, 0);
        for trial in 0..50 {
            let n = 2 + (trial % 11);
            let a = random_spd(n, 1e6, &mut rng);
            let b = Matrix::new(n, 2, rng.standard_normal_vec(2 * n).as_slice().to_vec()).unwrap();
            let x = solve_spd(&a, &b).unwrap();
            let b_scale = b.max_abs().max(1e-30);
            let rel = residual_max(&a, &x, &b) / b_scale;
            assert!(rel <= 1e-9, "relative residual {rel:.3e} at n={n}");
        }
    }

    #[test]
    fn quadratic_form_nonnegative_on_random_spd() {
        let mut rng = RngStream::new(77, 0);
        for trial in 0..1000 {
            let n = 1 + (trial % 8);
            let a = random_spd(n, 1e4, &mut rng);
            let v = rng.standard_normal_vec(n);
            assert!(quadratic_form(&a, &v).unwrap() >= 0.0);
        }
    }
}
