//! Small dense row-major matrices and the few factorizations the solvers need.

use std::ops::{Index, IndexMut};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return invalid("ragged rows");
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `A x`, each entry summed left to right over the columns starting from zero.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "dimension mismatch in mul_vec");
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for (a, &xj) in self.row(i).iter().zip(x) {
                    acc += *a * xj;
                }
                acc
            })
            .collect()
    }

    /// `A^T y`.
    pub fn tr_mul_vec(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.rows, "dimension mismatch in tr_mul_vec");
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        Self::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = T::zero();
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, j)];
            }
            acc
        })
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: T, other: &Self) {
        assert_eq!(self.shape(), other.shape(), "dimension mismatch in add_scaled");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "dimension mismatch in sub");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Largest `|S_ij - S_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Right singular system of an `m x n` matrix.
#[derive(Debug, Clone)]
pub struct RightSingular<T> {
    /// All `n` singular values, unsorted (zero-padded when `m < n`).
    pub values: Vec<T>,
    /// Columns are the matching right singular vectors.
    pub vectors: Matrix<T>,
}

impl<T: Real> RightSingular<T> {
    /// Index of the smallest singular value.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (k, &s) in self.values.iter().enumerate() {
            if s < self.values[best] {
                best = k;
            }
        }
        best
    }
}

/// One-sided (Hestenes) Jacobi SVD: rotates column pairs of `A` until they are
/// mutually orthogonal. Column norms of the rotated matrix are the singular values.
pub fn right_singular<T: Real>(a: &Matrix<T>) -> Result<RightSingular<T>> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return invalid("empty matrix");
    }
    if !a.is_finite() {
        return invalid("matrix has non-finite entries");
    }
    // column-major working copy
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut v = Matrix::<T>::identity(n);
    let tol = T::epsilon() * T::from_count(m.max(n));
    const MAX_SWEEPS: usize = 80;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                for (xp, xq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (a, b) = (*xp, *xq);
                    *xp = c * a - s * b;
                    *xq = s * a + c * b;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let values = cols.iter().map(|c| norm2(c)).collect();
    Ok(RightSingular { values, vectors: v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mul_vec_sums_left_to_right() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.mul_vec(&[1.0, -1.0]), vec![-1.0, -1.0]);
        assert_eq!(a.tr_mul_vec(&[1.0, 1.0]), vec![4.0, 6.0]);
    }

    #[test]
    fn svd_of_diagonal() {
        let a = Matrix::<f64>::diagonal(&[2.0, 3.0]);
        let svd = right_singular(&a).unwrap();
        let k = svd.argmin();
        assert_relative_eq!(svd.values[k], 2.0);
        assert_relative_eq!(svd.vectors[(0, k)].abs(), 1.0);
    }

    #[test]
    fn svd_reconstructs_gram_matrix() {
        let a = Matrix::from_rows(&[
            vec![0.3, -1.2, 2.0],
            vec![1.1, 0.4, -0.7],
            vec![-0.5, 0.9, 0.2],
            vec![2.2, -0.1, 0.6],
        ])
        .unwrap();
        let svd = right_singular(&a).unwrap();
        // A^T A = V diag(s^2) V^T
        let ata = a.transpose().matmul(&a);
        let s2: Vec<f64> = svd.values.iter().map(|s| s * s).collect();
        let rebuilt = svd
            .vectors
            .matmul(&Matrix::diagonal(&s2))
            .matmul(&svd.vectors.transpose());
        assert!(rebuilt.sub(&ata).frobenius_norm() < 1e-12 * ata.frobenius_norm());
    }

    #[test]
    fn wide_matrix_has_zero_singular_value() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        let svd = right_singular(&a).unwrap();
        assert!(svd.values[svd.argmin()] < 1e-12);
    }
}
