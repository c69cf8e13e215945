//! Dense real vectors and the small dense linear algebra the oracles need.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point or direction in `R^d`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector<T>(Vec<T>);

/// Order of a vector norm. `p = 2` is the default everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormOrder(pub f64);

impl Default for NormOrder {
    fn default() -> Self {
        NormOrder(2.0)
    }
}

impl NormOrder {
    pub const L1: NormOrder = NormOrder(1.0);
    pub const L2: NormOrder = NormOrder(2.0);
    pub const INF: NormOrder = NormOrder(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::invalid(format!("norm order must be >= 1, got {p}")));
        }
        Ok(NormOrder(p))
    }
}

impl<T: Scalar> Vector<T> {
    pub fn zeros(d: usize) -> Self {
        Vector(vec![T::zero(); d])
    }

    pub fn filled(d: usize, v: T) -> Self {
        Vector(vec![v; d])
    }

    pub fn from_f64(values: &[f64]) -> Self {
        Vector(values.iter().map(|&v| T::lit(v)).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.to_f64_lossy()).collect()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(&a, &b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    pub fn norm2(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn norm(&self, p: NormOrder) -> T {
        if p.0.is_infinite() {
            return self.0.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        }
        if p.0 == 1.0 {
            return self.0.iter().map(|v| v.abs()).sum();
        }
        if p.0 == 2.0 {
            return self.norm2();
        }
        let pp = T::lit(p.0);
        let s: T = self.0.iter().map(|v| v.abs().powf(pp)).sum();
        s.powf(T::one() / pp)
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(&a, &b)| a - b).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(&a, &b)| a + b).collect())
    }

    pub fn scale(&self, k: T) -> Self {
        Vector(self.0.iter().map(|&a| a * k).collect())
    }

    /// `self += k * other`
    pub fn axpy(&mut self, k: T, other: &Self) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, &b) in self.0.iter_mut().zip(&other.0) {
            *a += k * b;
        }
    }

    pub fn distance(&self, other: &Self, p: NormOrder) -> T {
        self.sub(other).norm(p)
    }

    /// Componentwise mean of a nonempty collection of equal-length vectors.
    pub fn mean<'a, I>(items: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a Self>,
    {
        let mut iter = items.into_iter();
        let first = iter.next()?;
        let mut acc = first.clone();
        let mut n = 1usize;
        for v in iter {
            acc.axpy(T::one(), v);
            n += 1;
        }
        Some(acc.scale(T::one() / T::from_count(n)))
    }
}

impl<T> From<Vec<T>> for Vector<T> {
    fn from(v: Vec<T>) -> Self {
        Vector(v)
    }
}

impl<T> Index<usize> for Vector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

/// Square dense matrix in row-major layout; sized for the `d x d` normal equations.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.n + c] = v;
    }

    /// `self += k * u u^T`
    pub fn add_outer(&mut self, k: T, u: &Vector<T>) {
        for r in 0..self.n {
            for c in 0..self.n {
                self.data[r * self.n + c] += k * u[r] * u[c];
            }
        }
    }

    pub fn scale(&self, k: T) -> Self {
        SquareMatrix {
            n: self.n,
            data: self.data.iter().map(|&v| v * k).collect(),
        }
    }

    pub fn mul_vec(&self, x: &Vector<T>) -> Vector<T> {
        (0..self.n)
            .map(|r| (0..self.n).map(|c| self.get(r, c) * x[c]).sum())
            .collect::<Vec<T>>()
            .into()
    }

    fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Solves `self * x = b` by Gaussian elimination with partial pivoting.
    ///
    /// Pivots below `n * eps * max|a_ij|` are treated as exact zeros and
    /// reported as [`Error::Singular`].
    pub fn solve(&self, b: &Vector<T>) -> Result<Vector<T>> {
        let n = self.n;
        if b.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.dim(),
            });
        }
        let scale = self.max_abs();
        if scale == T::zero() {
            return Err(Error::Singular("zero matrix".into()));
        }
        let tol = T::from_count(n.max(1)) * T::epsilon() * scale * T::lit(16.0);
        let mut a = self.data.clone();
        let mut x = b.clone().into_inner();
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r1, &r2| {
                    a[r1 * n + col]
                        .abs()
                        .partial_cmp(&a[r2 * n + col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            let pivot = a[pivot_row * n + col];
            if !(pivot.abs() > tol) {
                return Err(Error::Singular(format!(
                    "pivot {:e} in column {col} below tolerance {:e}",
                    pivot.to_f64_lossy(),
                    tol.to_f64_lossy()
                )));
            }
            if pivot_row != col {
                for c in 0..n {
                    a.swap(col * n + c, pivot_row * n + c);
                }
                x.swap(col, pivot_row);
            }
            for r in (col + 1)..n {
                let f = a[r * n + col] / a[col * n + col];
                if f == T::zero() {
                    continue;
                }
                for c in col..n {
                    let v = a[col * n + c];
                    a[r * n + c] -= f * v;
                }
                let xv = x[col];
                x[r] -= f * xv;
            }
        }
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in (r + 1)..n {
                acc -= a[r * n + c] * x[c];
            }
            x[r] = acc / a[r * n + r];
        }
        Ok(x.into())
    }

    /// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<T> {
        let n = self.n;
        let mut a = self.data.clone();
        let tiny = T::epsilon() * T::epsilon();
        for _sweep in 0..100 {
            let off: T = (0..n)
                .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
                .map(|(r, c)| a[r * n + c] * a[r * n + c])
                .sum();
            let diag: T = (0..n).map(|r| a[r * n + r] * a[r * n + r]).sum();
            if off <= tiny * diag || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == T::zero() {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (T::two() * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<T> = (0..n).map(|r| a[r * n + r]).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        eig
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms() {
        let v = Vector::<f64>::from_f64(&[3.0, -4.0]);
        assert_eq!(v.norm(NormOrder::L2), 5.0);
        assert_eq!(v.norm(NormOrder::L1), 7.0);
        assert_eq!(v.norm(NormOrder::INF), 4.0);
        assert!((v.norm(NormOrder(3.0)) - (27.0f64 + 64.0).powf(1.0 / 3.0)).abs() < 1e-12);
        assert!(NormOrder::new(0.5).is_err());
    }

    #[test]
    fn solve_small_system() {
        let mut m = SquareMatrix::<f64>::zeros(2);
        m.set(0, 0, 0.0);
        m.set(0, 1, 2.0);
        m.set(1, 0, 3.0);
        m.set(1, 1, 1.0);
        let x = m.solve(&Vector::from_f64(&[4.0, 5.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let mut m = SquareMatrix::<f64>::zeros(2);
        m.add_outer(1.0, &Vector::from_f64(&[1.0, 0.0]));
        assert!(matches!(
            m.solve(&Vector::from_f64(&[1.0, 1.0])),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn jacobi_eigenvalues() {
        let mut m = SquareMatrix::<f64>::zeros(2);
        m.set(0, 0, 2.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 2.0);
        let e = m.symmetric_eigenvalues();
        assert!((e[0] - 1.0).abs() < 1e-12 && (e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn works_in_f32() {
        let v = Vector::<f32>::from_f64(&[1.0, 2.0, 2.0]);
        assert_eq!(v.norm2(), 3.0f32);
    }
}
