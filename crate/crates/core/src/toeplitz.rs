//! Symmetric Toeplitz matrices `T_n(f)` generated by a symbol.

use std::fmt;
use std::sync::Arc;

use faer::Mat;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::symbols::{fourier_coeffs, Symbol};

/// Largest dimension for which dense matrices are materialized.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Banded operators up to this bandwidth are applied directly, which is
/// exact up to rounding in each entry and cheaper than the FFT.
const DIRECT_BAND_MAX: usize = 32;

/// `T_n` stored by its first column, with the spectrum of its `2n` circulant
/// embedding precomputed for `O(n log n)` products.
#[derive(Clone)]
pub struct ToeplitzOperator {
    col: Vec<f64>,
    bandwidth: Option<usize>,
    circulant_eigs: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for ToeplitzOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ToeplitzOperator")
            .field("n", &self.n())
            .field("bandwidth", &self.bandwidth)
            .finish()
    }
}

impl ToeplitzOperator {
    pub fn build(s: &Symbol, n: usize) -> Result<Self> {
        let coeffs = fourier_coeffs(s, n)?;
        let bandwidth = s.bandwidth().map(|k| k.min(n - 1));
        Self::from_coeffs(coeffs.a, bandwidth)
    }

    pub fn from_coeffs(col: Vec<f64>, bandwidth: Option<usize>) -> Result<Self> {
        let n = col.len();
        if n == 0 {
            return Err(invalid("Toeplitz operator needs at least one coefficient"));
        }
        if let Some(k) = bandwidth {
            if col.iter().skip(k + 1).any(|&v| v != 0.0) {
                return Err(invalid(format!("coefficients beyond bandwidth {k} are nonzero")));
            }
        }
        let m = 2 * n;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let mut circ = vec![Complex64::new(0.0, 0.0); m];
        circ[0].re = col[0];
        for l in 1..n {
            circ[l].re = col[l];
            circ[m - l].re = col[l];
        }
        forward.process(&mut circ);
        Ok(Self { col, bandwidth, circulant_eigs: circ, forward, inverse })
    }

    pub fn n(&self) -> usize {
        self.col.len()
    }

    /// First column `a_0..a_{n-1}`.
    pub fn col(&self) -> &[f64] {
        &self.col
    }

    pub fn bandwidth(&self) -> Option<usize> {
        self.bandwidth
    }

    pub fn entry(&self, j: usize, k: usize) -> f64 {
        self.col[j.abs_diff(k)]
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.len() });
        }
        if let Some(k) = self.bandwidth.filter(|&k| k <= DIRECT_BAND_MAX) {
            return Ok(self.band_matvec(x, k));
        }
        let m = 2 * n;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        let scratch_len = self.forward.get_inplace_scratch_len().max(self.inverse.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
        self.forward.process_with_scratch(&mut buf, &mut scratch);
        for (b, e) in buf.iter_mut().zip(&self.circulant_eigs) {
            *b *= e;
        }
        self.inverse.process_with_scratch(&mut buf, &mut scratch);
        let inv = 1.0 / m as f64;
        Ok(buf[..n].iter().map(|c| c.re * inv).collect())
    }

    fn band_matvec(&self, x: &[f64], k: usize) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| dot2((i.saturating_sub(k)..(i + k + 1).min(n)).map(|j| (self.col[i.abs_diff(j)], x[j]))))
            .collect()
    }

    /// `T x` with each entry accumulated by a compensated dot product, so the
    /// result is as accurate as if computed in twice the working precision.
    /// `O(n²)`, or `O(nk)` when banded.
    pub fn matvec_compensated(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.len() });
        }
        let k = self.bandwidth.unwrap_or(n - 1);
        if k < n - 1 {
            return Ok(self.band_matvec(x, k));
        }
        let col = &self.col;
        Ok((0..n)
            .map(|i| {
                let left = x[..i].iter().rev().zip(&col[1..]).map(|(&xj, &a)| (a, xj));
                let right = x[i..].iter().zip(col).map(|(&xj, &a)| (a, xj));
                dot2(left.chain(right))
            })
            .collect())
    }

    pub fn to_dense(&self, cap: usize) -> Result<Mat<f64>> {
        let n = self.n();
        if n > cap {
            return Err(Error::DenseCapExceeded { n, cap });
        }
        Ok(Mat::from_fn(n, n, |i, j| self.entry(i, j)))
    }

    pub fn band_cholesky(&self) -> Result<BandCholesky> {
        let k = self.bandwidth.ok_or(Error::NotBanded)?;
        BandCholesky::factor(self, k)
    }

    pub fn band_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.band_cholesky()?.solve(b)
    }
}

/// Compensated dot product (Ogita, Rump and Oishi): exact products via FMA,
/// exact sums via TwoSum, errors accumulated separately.
fn dot2(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for (a, b) in pairs {
        let p = a * b;
        let pe = a.mul_add(b, -p);
        let t = s + p;
        let z = t - s;
        c += pe + ((s - (t - z)) + (p - z));
        s = t;
    }
    s + c
}

/// Cholesky factor of a symmetric band matrix, stored by rows:
/// `rows[i][d] = L(i, i - d)` for `d = 0..=k`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    k: usize,
    rows: Vec<Vec<f64>>,
}

impl BandCholesky {
    fn factor(t: &ToeplitzOperator, k: usize) -> Result<Self> {
        let n = t.n();
        let mut rows = vec![vec![0.0; k + 1]; n];
        for i in 0..n {
            for j in i.saturating_sub(k)..=i {
                let mut sum = t.entry(i, j);
                for p in i.saturating_sub(k)..j {
                    sum -= rows[i][i - p] * rows[j][j - p];
                }
                if i == j {
                    if sum.is_nan() || sum <= 0.0 {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: sum });
                    }
                    rows[i][0] = sum.sqrt();
                } else {
                    rows[i][i - j] = sum / rows[j][0];
                }
            }
        }
        Ok(Self { n, k, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let (n, k) = (self.n, self.k);
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.len() });
        }
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for p in i.saturating_sub(k)..i {
                s -= self.rows[i][i - p] * y[p];
            }
            y[i] = s / self.rows[i][0];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for q in i + 1..(i + k + 1).min(n) {
                s -= self.rows[q][q - i] * y[q];
            }
            y[i] = s / self.rows[i][0];
        }
        Ok(y)
    }
}

/// Exponent `k >= 1` of the band comparator `(2 - 2cos t)^k` for zero order θ:
/// the integer minimizing `|2k - θ|`, ties resolved upward.
pub fn comparator_order(theta: f64) -> u32 {
    let k = (0.5 * theta).round().max(1.0);
    // f64::round resolves x.5 away from zero, which is upward for θ > 0.
    k as u32
}

/// Banded Cholesky factor of `T_n((2 - 2cos t)^k)` with `k = comparator_order(θ)`.
pub fn band_comparator(theta: f64, n: usize) -> Result<BandCholesky> {
    let s = Symbol::laplace_pow(comparator_order(theta))?;
    ToeplitzOperator::build(&s, n)?.band_cholesky()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn laplacian_is_tridiagonal() {
        let t = ToeplitzOperator::build(&Symbol::LaplacePow(1), 3).unwrap();
        let d = t.to_dense(DEFAULT_DENSE_CAP).unwrap();
        let expect = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d[(i, j)], expect[i][j]);
            }
        }
        assert_eq!(t.bandwidth(), Some(1));
    }

    #[test]
    fn abs_t_two_by_two() {
        let t = ToeplitzOperator::build(&Symbol::AbsPow(1.0), 2).unwrap();
        assert!((t.entry(0, 0) - PI / 2.0).abs() < 1e-15);
        assert!((t.entry(0, 1) + 2.0 / PI).abs() < 1e-14);
        assert_eq!(t.bandwidth(), None);
    }

    #[test]
    fn squared_laplacian_stencil() {
        let t = ToeplitzOperator::build(&Symbol::LaplacePow(2), 4).unwrap();
        assert_eq!(t.col(), &[6.0, -4.0, 1.0, 0.0]);
        assert_eq!(t.bandwidth(), Some(2));
    }

    #[test]
    fn matvec_examples() {
        let t = ToeplitzOperator::build(&Symbol::LaplacePow(1), 3).unwrap();
        let y = t.matvec(&[1.0, 1.0, 1.0]).unwrap();
        for (a, b) in y.iter().zip([1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let mut col = vec![0.0; 7];
        col[0] = 1.0;
        let id = ToeplitzOperator::from_coeffs(col, Some(0)).unwrap();
        let x = [1.0, -2.0, 3.0, 0.5, 0.0, 7.0, -1.0];
        for (a, b) in id.matvec(&x).unwrap().iter().zip(x) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(matches!(t.matvec(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn compensated_matvec_is_exact_on_cancellation() {
        let t = ToeplitzOperator::from_coeffs(vec![1.0, 1e16, 0.0], None).unwrap();
        // Row 1 is 1e16 + 1 - 1e16.
        let x = [1.0, 1.0, -1.0];
        let y = t.matvec_compensated(&x).unwrap();
        assert_eq!(y[1], 1.0);
        assert_eq!(y[0], 1.0 + 1e16);
        let d = ToeplitzOperator::build(&Symbol::AbsPow(2.5), 40).unwrap();
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.7).sin()).collect();
        let (a, b) = (d.matvec(&x).unwrap(), d.matvec_compensated(&x).unwrap());
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn band_solve_examples() {
        let t = ToeplitzOperator::build(&Symbol::LaplacePow(1), 3).unwrap();
        let x = t.band_solve(&[1.0, 0.0, 1.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let id = ToeplitzOperator::from_coeffs(vec![1.0, 0.0, 0.0], Some(0)).unwrap();
        assert_eq!(id.band_solve(&[3.0, -1.0, 2.0]).unwrap(), vec![3.0, -1.0, 2.0]);
    }

    #[test]
    fn band_solve_requires_bandwidth() {
        let t = ToeplitzOperator::build(&Symbol::AbsPow(1.0), 4).unwrap();
        assert!(matches!(t.band_solve(&[1.0; 4]), Err(Error::NotBanded)));
    }

    #[test]
    fn band_solve_detects_indefinite() {
        let t = ToeplitzOperator::from_coeffs(vec![1.0, -2.0, 0.0, 0.0], Some(1)).unwrap();
        assert!(matches!(t.band_solve(&[1.0; 4]), Err(Error::NotPositiveDefinite { pivot: 1, .. })));
    }

    #[test]
    fn dense_cap_is_enforced() {
        let t = ToeplitzOperator::build(&Symbol::LaplacePow(1), 10).unwrap();
        assert!(matches!(t.to_dense(8), Err(Error::DenseCapExceeded { n: 10, cap: 8 })));
    }

    #[test]
    fn bandwidth_is_checked() {
        assert!(ToeplitzOperator::from_coeffs(vec![2.0, -1.0, 0.5], Some(1)).is_err());
    }

    #[test]
    fn comparator_order_rounds_up_on_ties() {
        assert_eq!(comparator_order(1.0), 1);
        assert_eq!(comparator_order(3.0), 2);
        assert_eq!(comparator_order(3.5), 2);
        assert_eq!(comparator_order(4.5), 2);
        assert_eq!(comparator_order(5.0), 3);
        assert_eq!(comparator_order(0.4), 1);
        assert_eq!(comparator_order(2.9), 1);
    }
}
