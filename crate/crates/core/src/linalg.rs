//! Small dense linear algebra over any [`Scalar`].
//!
//! `M4` is the 4×4 block type of the recursion. `DenseMatrix` is a row-major
//! square matrix with an LU solve used by the dense oracles and the
//! passage system.

use crate::error::{Result, WalkError};
use crate::scalar::Scalar;
use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

/// Above this condition estimate a factor is reported singular.
pub const COND_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct M4<T>(pub [[T; 4]; 4]);

impl<T: Scalar> M4<T> {
    pub fn zero() -> Self {
        M4([[T::zero(); 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            m.0[i][i] = T::one();
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.0[i][j]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    /// Max absolute column sum of the value part.
    pub fn norm1(&self) -> f64 {
        (0..4)
            .map(|j| (0..4).map(|i| self.0[i][j].modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|x| x.modulus()).fold(0.0, f64::max)
    }

    pub fn values(&self) -> M4<Complex64> {
        M4::from_fn(|i, j| self.0[i][j].value())
    }

    /// Inverse by Gauss-Jordan with partial pivoting; fails when the
    /// condition estimate ‖A‖₁‖A⁻¹‖₁ exceeds [`COND_LIMIT`].
    pub fn inverse(&self, factor: &'static str) -> Result<Self> {
        let mut a = self.0;
        let mut inv = Self::identity().0;
        for col in 0..4 {
            let piv = (col..4)
                .max_by(|&p, &q| a[p][col].modulus().total_cmp(&a[q][col].modulus()))
                .unwrap_or(col);
            if a[piv][col].modulus() == 0.0 {
                return Err(WalkError::Singular { factor, cond: f64::INFINITY });
            }
            a.swap(col, piv);
            inv.swap(col, piv);
            let p = T::one() / a[col][col];
            for k in 0..4 {
                a[col][k] *= p;
                inv[col][k] *= p;
            }
            for r in 0..4 {
                if r != col {
                    let f = a[r][col];
                    for k in 0..4 {
                        let ack = a[col][k];
                        let ick = inv[col][k];
                        a[r][k] -= f * ack;
                        inv[r][k] -= f * ick;
                    }
                }
            }
        }
        let out = M4(inv);
        let cond = self.norm1() * out.norm1();
        if !cond.is_finite() || cond > COND_LIMIT {
            return Err(WalkError::Singular { factor, cond });
        }
        Ok(out)
    }
}

impl<T: Scalar> Add for M4<T> {
    type Output = M4<T>;
    fn add(self, o: M4<T>) -> M4<T> {
        M4::from_fn(|i, j| self.0[i][j] + o.0[i][j])
    }
}

impl<T: Scalar> Sub for M4<T> {
    type Output = M4<T>;
    fn sub(self, o: M4<T>) -> M4<T> {
        M4::from_fn(|i, j| self.0[i][j] - o.0[i][j])
    }
}

impl<T: Scalar> Neg for M4<T> {
    type Output = M4<T>;
    fn neg(self) -> M4<T> {
        M4::from_fn(|i, j| -self.0[i][j])
    }
}

impl<T: Scalar> Mul for M4<T> {
    type Output = M4<T>;
    fn mul(self, o: M4<T>) -> M4<T> {
        M4::from_fn(|i, j| {
            let mut s = T::zero();
            for k in 0..4 {
                s += self.0[i][k] * o.0[k][j];
            }
            s
        })
    }
}

/// Square or rectangular row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn matmul(&self, o: &DenseMatrix<T>) -> DenseMatrix<T> {
        assert_eq!(self.cols, o.rows);
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..o.cols {
                    out.data[i * o.cols + j] += a * o.data[k * o.cols + j];
                }
            }
        }
        out
    }

    /// Place a 4×4 block with its top-left corner at `(r, c)`.
    pub fn set_block(&mut self, r: usize, c: usize, b: &M4<T>) {
        for i in 0..4 {
            for j in 0..4 {
                self[(r + i, c + j)] = b.0[i][j];
            }
        }
    }

    pub fn add_block(&mut self, r: usize, c: usize, b: &M4<T>) {
        for i in 0..4 {
            for j in 0..4 {
                self[(r + i, c + j)] += b.0[i][j];
            }
        }
    }

    pub fn block(&self, r: usize, c: usize) -> M4<T> {
        M4::from_fn(|i, j| self[(r + i, c + j)])
    }

    pub fn max_abs_diff(&self, o: &DenseMatrix<T>) -> f64 {
        self.data
            .iter()
            .zip(&o.data)
            .map(|(a, b)| (*a - *b).modulus())
            .fold(0.0, f64::max)
    }

    /// Solve `self · X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &DenseMatrix<T>, factor: &'static str) -> Result<DenseMatrix<T>> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(self.rows, rhs.rows);
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        let scale = a.iter().map(|x| x.modulus()).fold(0.0, f64::max);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&p, &q| a[p * n + col].modulus().total_cmp(&a[q * n + col].modulus()))
                .unwrap_or(col);
            let pv = a[piv * n + col].modulus();
            if pv == 0.0 || pv < scale * 1e-14 {
                return Err(WalkError::Singular { factor, cond: scale / pv });
            }
            if piv != col {
                for k in 0..n {
                    a.swap(col * n + k, piv * n + k);
                }
                for k in 0..m {
                    b.swap(col * m + k, piv * m + k);
                }
            }
            let inv = T::one() / a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] * inv;
                if f == T::zero() {
                    continue;
                }
                for k in col..n {
                    let v = a[col * n + k];
                    a[r * n + k] -= f * v;
                }
                for k in 0..m {
                    let v = b[col * m + k];
                    b[r * m + k] -= f * v;
                }
            }
        }
        for col in (0..n).rev() {
            let inv = T::one() / a[col * n + col];
            for k in 0..m {
                let mut s = b[col * m + k];
                for j in col + 1..n {
                    s -= a[col * n + j] * b[j * m + k];
                }
                b[col * m + k] = s * inv;
            }
        }
        Ok(DenseMatrix { rows: n, cols: m, data: b })
    }

    pub fn inverse(&self, factor: &'static str) -> Result<DenseMatrix<T>> {
        self.solve(&Self::identity(self.rows), factor)
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}
