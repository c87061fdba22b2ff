//! The τ algebra: matrices `S_n diag(d) S_n` with `S_n` the orthonormal
//! type-I sine transform.
//!
//! `S_n` is symmetric and involutory, so a τ matrix is applied with two
//! transforms and a diagonal scaling, and its inverse or fractional powers
//! only touch the diagonal.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use faer::Mat;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::symbols::{grid_samples, Symbol};

/// Orthonormal DST-I of a fixed length, `(S_n)_{ij} = √(2/(n+1)) sin(ijπ/(n+1))`.
///
/// Computed through a complex FFT of the odd extension of length `2(n+1)`.
/// The plan is immutable and shared; scratch space is per call.
#[derive(Clone)]
pub struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl fmt::Debug for Dst1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dst1").field("n", &self.n).finish()
    }
}

impl Dst1 {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "DST-I length must be positive");
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Self { n, fft, scale: (2.0 / (n + 1) as f64).sqrt() }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = x.to_vec();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }

    pub fn apply_in_place(&self, x: &mut [f64]) -> Result<()> {
        let n = self.n;
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.len() });
        }
        let m = 2 * (n + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (j, &v) in x.iter().enumerate() {
            buf[j + 1].re = v;
            buf[m - 1 - j].re = -v;
        }
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        self.fft.process_with_scratch(&mut buf, &mut scratch);
        // FFT of the odd extension is -2i Σ x_j sin(jkπ/(n+1)).
        let half_scale = -0.5 * self.scale;
        for (k, out) in x.iter_mut().enumerate() {
            *out = half_scale * buf[k + 1].im;
        }
        Ok(())
    }
}

/// One-shot orthonormal DST-I.
pub fn dst1(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    Dst1::new(x.len()).apply(x).expect("length matches plan")
}

/// Dense `S_n`.
pub fn sine_matrix(n: usize) -> Mat<f64> {
    let scale = (2.0 / (n + 1) as f64).sqrt();
    Mat::from_fn(n, n, |i, j| scale * (((i + 1) * (j + 1)) as f64 * PI / (n + 1) as f64).sin())
}

/// Computes `S A S` for a dense square `A` with `2n` fast transforms.
pub fn sine_congruence(a: &Mat<f64>) -> Result<Mat<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    let dst = Dst1::new(n);
    let mut sa = Mat::<f64>::zeros(n, n);
    let mut buf = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            buf[i] = a[(i, j)];
        }
        dst.apply_in_place(&mut buf)?;
        for i in 0..n {
            sa[(i, j)] = buf[i];
        }
    }
    let mut out = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            buf[j] = sa[(i, j)];
        }
        dst.apply_in_place(&mut buf)?;
        for j in 0..n {
            out[(i, j)] = buf[j];
        }
    }
    Ok(out)
}

/// `S diag(eigs^power) S`.
#[derive(Debug, Clone)]
pub struct TauOperator {
    eigs: Vec<f64>,
    power: f64,
    dst: Dst1,
}

fn raise(v: f64, p: f64) -> f64 {
    if p == 1.0 {
        v
    } else if p == -1.0 {
        1.0 / v
    } else if p == 0.5 {
        v.sqrt()
    } else if p == -0.5 {
        1.0 / v.sqrt()
    } else {
        v.powf(p)
    }
}

impl TauOperator {
    /// `τ_n(f)^power` from the grid samples of `f`.
    pub fn build(s: &Symbol, n: usize, power: f64) -> Result<Self> {
        Self::from_eigenvalues(grid_samples(s, n)?, power)
    }

    pub fn from_eigenvalues(eigs: Vec<f64>, power: f64) -> Result<Self> {
        if eigs.is_empty() {
            return Err(invalid("tau operator needs at least one eigenvalue"));
        }
        if let Some(i) = eigs.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::ZeroSample { index: i + 1 });
        }
        if !power.is_finite() {
            return Err(invalid("power must be finite"));
        }
        let dst = Dst1::new(eigs.len());
        Ok(Self { eigs, power, dst })
    }

    pub fn n(&self) -> usize {
        self.eigs.len()
    }

    /// Base samples, before the exponent is applied.
    pub fn samples(&self) -> &[f64] {
        &self.eigs
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Eigenvalues of the represented matrix, in grid order.
    pub fn diagonal(&self) -> Vec<f64> {
        self.eigs.iter().map(|&v| raise(v, self.power)).collect()
    }

    /// The operator raised to `p`, sharing eigenvectors.
    pub fn pow(&self, p: f64) -> Self {
        Self { eigs: self.eigs.clone(), power: self.power * p, dst: self.dst.clone() }
    }

    pub fn inverse(&self) -> Self {
        self.pow(-1.0)
    }

    /// Product in the algebra: eigenvalues multiply entrywise.
    pub fn compose(&self, other: &TauOperator) -> Result<Self> {
        if other.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: other.n() });
        }
        let d: Vec<f64> = self.diagonal().iter().zip(other.diagonal()).map(|(a, b)| a * b).collect();
        Self::from_eigenvalues(d, 1.0)
    }

    pub fn condition_number(&self) -> f64 {
        let d = self.diagonal();
        let max = d.iter().cloned().fold(f64::MIN, f64::max);
        let min = d.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }

    fn scaled_apply(&self, x: &[f64], power: f64) -> Result<Vec<f64>> {
        let mut y = self.dst.apply(x)?;
        for (v, &e) in y.iter_mut().zip(&self.eigs) {
            *v *= raise(e, power);
        }
        self.dst.apply_in_place(&mut y)?;
        Ok(y)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.scaled_apply(x, self.power)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.scaled_apply(b, -self.power)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let n = self.n();
        let s = sine_matrix(n);
        let d = self.diagonal();
        let sd = Mat::from_fn(n, n, |i, j| s[(i, j)] * d[j]);
        &sd * &s
    }
}
