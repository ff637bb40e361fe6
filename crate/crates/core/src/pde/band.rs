//! Symmetric banded storage and an in-place banded Cholesky factorization.

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix: row `i` keeps columns `i - bw ..= i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bw = bandwidth.min(n.saturating_sub(1));
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + j + self.bw - i
    }

    /// Entry `(i, j)` of the full symmetric matrix.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Accumulate into the lower triangle; requires `j <= i <= j + bw`.
    #[inline]
    pub fn add_lower(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i && i - j <= self.bw);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            for j in j0..=i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// Factor `A = L L^T`; fails if a pivot is not positive.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut flops = 0.0;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let len = j - k0;
                let ri = i * w + k0 + bw - i;
                let rj = j * w + k0 + bw - j;
                let s = dot(&self.data[ri..ri + len], &self.data[rj..rj + len]);
                flops += len as f64;
                let pos = i * w + j + bw - i;
                let v = self.data[pos] - s;
                if i == j {
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(Error::Assembly(format!(
                            "matrix not positive definite (pivot {v:e} at row {i})"
                        )));
                    }
                    self.data[pos] = v.sqrt();
                } else {
                    self.data[pos] = v / self.data[j * w + bw];
                }
            }
        }
        Ok(BandCholesky {
            factor: self,
            flops,
        })
    }
}

/// Lower-triangular banded Cholesky factor.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    factor: BandMatrix,
    flops: f64,
}

impl BandCholesky {
    /// Multiply-add count of the factorization.
    pub fn flops(&self) -> f64 {
        self.flops
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let l = &self.factor;
        let (n, bw) = (l.n, l.bw);
        let w = bw + 1;
        let mut x = rhs.to_vec();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            let row = &l.data[i * w + j0 + bw - i..i * w + bw];
            let s = dot(row, &x[j0..i]);
            x[i] = (x[i] - s) / l.data[i * w + bw];
        }
        for i in (0..n).rev() {
            x[i] /= l.data[i * w + bw];
            let xi = x[i];
            let j0 = i.saturating_sub(bw);
            for j in j0..i {
                x[j] -= l.data[i * w + j + bw - i] * xi;
            }
        }
        x
    }
}

/// Four-way unrolled dot product with a fixed summation order.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let k = 4 * c;
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    let mut s = (s0 + s1) + (s2 + s3);
    for k in 4 * chunks..n {
        s += a[k] * b[k];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> BandMatrix {
        let mut a = BandMatrix::zeros(n, 1);
        for i in 0..n {
            a.add_lower(i, i, 2.0);
            if i > 0 {
                a.add_lower(i, i - 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn solves_tridiagonal() {
        let a = laplacian_1d(50);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x);
        let sol = a.cholesky().unwrap().solve(&b);
        for (u, v) in sol.iter().zip(&x) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn wide_band_against_dense_product() {
        let n = 40;
        let bw = 7;
        let mut a = BandMatrix::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                a.add_lower(i, j, ((i * 7 + j * 3) % 5) as f64 * 0.1 - 0.2);
            }
            a.add_lower(i, i, 10.0);
        }
        let x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / n as f64).collect();
        let b = a.mul_vec(&x);
        let sol = a.cholesky().unwrap().solve(&b);
        for (u, v) in sol.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut a = laplacian_1d(4);
        a.scale(-1.0);
        assert!(matches!(a.cholesky(), Err(Error::Assembly(_))));
    }

    #[test]
    fn symmetric_access() {
        let a = laplacian_1d(5);
        assert_eq!(a.get(1, 2), a.get(2, 1));
        assert_eq!(a.get(0, 4), 0.0);
        assert_eq!(a.to_dense()[2], vec![0.0, -1.0, 2.0, -1.0, 0.0]);
    }
}
