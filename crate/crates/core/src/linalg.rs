//! Dense matrices, kernels and ranks.
//!
//! Exact kernels come from reduced row echelon form over the rationals.
//! Float kernels come from a singular value decomposition; the matrix is
//! padded with zero rows to be at least square so that the full right
//! singular basis is available.

use nalgebra::DMatrix;
use num::{BigInt, Integer, Signed, Zero};

use crate::scalar::{Complex, Rational, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>, cols: usize) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged matrix rows");
            data.extend(row);
        }
        Matrix {
            rows: n,
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Columns reordered so that output column `j` is input column `order[j]`.
    pub fn permute_columns(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.cols);
        let rows = (0..self.rows)
            .map(|i| order.iter().map(|&j| self.get(i, j).clone()).collect())
            .collect();
        Matrix::from_rows(rows, self.cols)
    }

    pub fn transpose(&self) -> Self {
        let rows = (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j).clone()).collect())
            .collect();
        Matrix::from_rows(rows, self.rows)
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        let rows = (0..self.rows)
            .map(|i| {
                let mut r = self.row(i).to_vec();
                r.extend_from_slice(other.row(i));
                r
            })
            .collect();
        Matrix::from_rows(rows, self.cols + other.cols)
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, T::zero())
    }

    pub fn add_to(&mut self, i: usize, j: usize, value: T) {
        let k = i * self.cols + j;
        let cur = std::mem::replace(&mut self.data[k], T::zero());
        self.data[k] = cur + value;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_exact_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.add_to(i, j, a.clone() * other.get(k, j).clone());
                }
            }
        }
        out
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<T>], rows: usize) -> Self {
        let mut m = Matrix::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for (i, x) in c.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        m
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().map(Scalar::magnitude).fold(0.0, crate::scalar::nan_max)
    }

    pub fn rank(&self) -> usize {
        T::kernel(self).rank
    }
}

/// Rank of a matrix together with a basis of its (right) kernel.
#[derive(Clone, Debug)]
pub struct Kernel<T> {
    pub rank: usize,
    pub basis: Vec<Vec<T>>,
}

impl<T> Kernel<T> {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }
}

/// Reduced row echelon form over the rationals. Returns the pivot columns.
pub fn rref(m: &mut Matrix<Rational>) -> Vec<usize> {
    let (rows, cols) = (m.rows, m.cols);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m.get(i, c).is_zero()) else {
            continue;
        };
        if p != r {
            for j in 0..cols {
                m.data.swap(p * cols + j, r * cols + j);
            }
        }
        let inv = m.get(r, c).recip();
        for j in c..cols {
            let x = m.get(r, j) * &inv;
            m.set(r, j, x);
        }
        for i in 0..rows {
            if i == r || m.get(i, c).is_zero() {
                continue;
            }
            let f = m.get(i, c).clone();
            for j in c..cols {
                if m.get(r, j).is_zero() {
                    continue;
                }
                let x = m.get(i, j) - &f * m.get(r, j);
                m.set(i, j, x);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rref_kernel(m: &Matrix<Rational>) -> Kernel<Rational> {
    let mut work = m.clone();
    let pivots = rref(&mut work);
    let cols = m.cols;
    let mut is_pivot = vec![None; cols];
    for (row, &c) in pivots.iter().enumerate() {
        is_pivot[c] = Some(row);
    }
    let basis = (0..cols)
        .filter(|&c| is_pivot[c].is_none())
        .map(|free| {
            let mut v = vec![<Rational as Scalar>::zero(); cols];
            v[free] = <Rational as Scalar>::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -work.get(row, free).clone();
            }
            v
        })
        .collect();
    Kernel {
        rank: pivots.len(),
        basis,
    }
}

/// Iteration cap for nalgebra's SVD, which otherwise never returns on some
/// inputs.
const SVD_MAX_ITERATIONS: usize = 100_000;

fn svd(m: &Matrix<Complex>, min_rows: usize, u: bool, v: bool) -> nalgebra::SVD<Complex, nalgebra::Dyn, nalgebra::Dyn> {
    assert!(
        m.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        "singular value decomposition of a non-finite matrix"
    );
    nalgebra::SVD::try_new(to_nalgebra(m, min_rows), u, v, f64::EPSILON, SVD_MAX_ITERATIONS)
        .expect("singular value decomposition did not converge")
}

fn to_nalgebra(m: &Matrix<Complex>, min_rows: usize) -> DMatrix<Complex> {
    let rows = m.rows.max(min_rows);
    DMatrix::from_fn(rows, m.cols, |i, j| {
        if i < m.rows {
            *m.get(i, j)
        } else {
            Complex::new(0.0, 0.0)
        }
    })
}

/// Singular values of `m`, in no particular order.
pub fn singular_values(m: &Matrix<Complex>) -> Vec<f64> {
    if m.rows == 0 || m.cols == 0 {
        return Vec::new();
    }
    svd(m, 0, false, false).singular_values.iter().copied().collect()
}

pub fn svd_kernel(m: &Matrix<Complex>, rel_tol: f64) -> Kernel<Complex> {
    let cols = m.cols;
    if cols == 0 {
        return Kernel {
            rank: 0,
            basis: Vec::new(),
        };
    }
    let svd = svd(m, cols, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, crate::scalar::nan_max);
    let threshold = rel_tol * sigma_max;
    let mut rank = 0;
    let mut basis = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if sigma_max > 0.0 && s > threshold {
            rank += 1;
        } else {
            basis.push(v_t.row(i).iter().map(|z| z.conj()).collect());
        }
    }
    Kernel { rank, basis }
}

/// Minimum-norm least-squares solution of `m x = b`.
pub fn min_norm_solve(m: &Matrix<Complex>, b: &[Complex]) -> Option<Vec<Complex>> {
    if b.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return None;
    }
    let rhs = DMatrix::from_fn(b.len(), 1, |i, _| b[i]);
    let svd = svd(m, 0, true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, crate::scalar::nan_max);
    let x = svd.solve(&rhs, sigma_max * 1e-12).ok()?;
    Some(x.iter().copied().collect())
}

/// Rank over the integers (equivalently over the rationals) by fraction-free
/// elimination with row-content reduction.
pub fn integer_rank(m: &Matrix<i64>) -> usize {
    let mut rows: Vec<Vec<BigInt>> = (0..m.rows)
        .map(|i| m.row(i).iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut rank = 0;
    for c in 0..m.cols {
        let Some(p) = (rank..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot_row = rows[rank].clone();
        let pivot = pivot_row[c].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            if row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                *x = &*x * &pivot - &f * y;
            }
            let content = row.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
            if !content.is_zero() && content.abs() != BigInt::from(1) {
                for x in row.iter_mut() {
                    *x = &*x / &content;
                }
            }
        }
        rank += 1;
    }
    rank
}
