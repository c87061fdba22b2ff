//! Spectra of τ-preconditioned Toeplitz matrices.
//!
//! `τ⁻¹T` is similar to the symmetric `τ^{-1/2} T τ^{-1/2}`. Conjugating with
//! the sine transform turns that into `D^{-1/2} (S T S) D^{-1/2}`, where `D`
//! holds the τ eigenvalues, so the square roots are taken on samples only
//! and a dense symmetric eigensolver applies.

use std::f64::consts::PI;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{diagonal_congruence, sym_eigenvalues, symmetrize};
use crate::quad::Quadrature;
use crate::symbols::Symbol;
use crate::tau::{sine_congruence, TauOperator};
use crate::toeplitz::{ToeplitzOperator, DEFAULT_DENSE_CAP};

pub const DEFAULT_THRESHOLD: f64 = 2.0;
/// Half-width of the window around one used for the cluster statistic.
pub const CLUSTER_EPS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub n: usize,
    pub theta: f64,
    pub eigenvalues: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub outliers_above: usize,
    pub threshold: f64,
    pub cluster_fraction: f64,
}

impl SpectralReport {
    pub fn from_eigenvalues(theta: f64, mut eigenvalues: Vec<f64>, threshold: f64) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(invalid("empty spectrum"));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self {
            n: eigenvalues.len(),
            theta,
            lambda_min: eigenvalues[0],
            lambda_max: eigenvalues[eigenvalues.len() - 1],
            outliers_above: outlier_count(&eigenvalues, threshold),
            threshold,
            cluster_fraction: cluster_fraction(&eigenvalues, CLUSTER_EPS),
            eigenvalues,
        })
    }
}

/// Dense `D^{-1/2} S T S D^{-1/2}`, orthogonally similar to `P^{-1/2} T P^{-1/2}`.
pub fn symmetrized_matrix(t: &ToeplitzOperator, p: &TauOperator) -> Result<Mat<f64>> {
    if t.n() != p.n() {
        return Err(Error::DimensionMismatch { expected: t.n(), found: p.n() });
    }
    let sts = sine_congruence(&t.to_dense(DEFAULT_DENSE_CAP)?)?;
    let mut m = diagonal_congruence(&sts, &p.diagonal());
    symmetrize(&mut m);
    Ok(m)
}

/// Sorted eigenvalues of `P⁻¹T`.
pub fn preconditioned_spectrum(t: &ToeplitzOperator, p: &TauOperator) -> Result<Vec<f64>> {
    sym_eigenvalues(&symmetrized_matrix(t, p)?)
}

/// Number of entries strictly greater than `threshold`.
pub fn outlier_count(eigs: &[f64], threshold: f64) -> usize {
    eigs.iter().filter(|&&v| v > threshold).count()
}

pub fn cluster_fraction(eigs: &[f64], eps: f64) -> f64 {
    if eigs.is_empty() {
        return 0.0;
    }
    eigs.iter().filter(|&&v| (v - 1.0).abs() <= eps).count() as f64 / eigs.len() as f64
}

pub fn spectral_report(theta: f64, n: usize) -> Result<SpectralReport> {
    spectral_report_with(theta, n, DEFAULT_THRESHOLD)
}

/// Spectrum of `τ_n(|t|^θ)⁻¹ T_n(|t|^θ)` and its summary statistics.
pub fn spectral_report_with(theta: f64, n: usize, threshold: f64) -> Result<SpectralReport> {
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::DenseCapExceeded { n, cap: DEFAULT_DENSE_CAP });
    }
    let s = Symbol::abs_pow(theta)?;
    let t = ToeplitzOperator::build(&s, n)?;
    let p = TauOperator::build(&s, n, 1.0)?;
    SpectralReport::from_eigenvalues(theta, preconditioned_spectrum(&t, &p)?, threshold)
}

/// `zᵀ T z / zᵀ P z`.
pub fn rayleigh_ratio(t: &ToeplitzOperator, p: &TauOperator, z: &[f64]) -> Result<f64> {
    let tz = t.matvec(z)?;
    let pz = p.apply(z)?;
    let num: f64 = z.iter().zip(&tz).map(|(a, b)| a * b).sum();
    let den: f64 = z.iter().zip(&pz).map(|(a, b)| a * b).sum();
    Ok(num / den)
}

/// The cosine and sine parts of `zᵀ T_n(|t|^θ) z`:
/// `C = (1/π)∫_0^π t^θ (Σ z_j cos jt)² dt`, `S = (1/π)∫_0^π t^θ (Σ z_j sin jt)² dt`.
pub fn split_numerator(theta: f64, z: &[f64]) -> Result<(f64, f64)> {
    let q = Quadrature::new(1e-12, 0.0);
    let panels = z.len() + 1;
    let trig_sum = |t: f64, f: fn(f64) -> f64| -> f64 {
        z.iter().enumerate().map(|(j, &zj)| zj * f((j + 1) as f64 * t)).sum()
    };
    let c = q.integrate(|t| t.powf(theta) * trig_sum(t, f64::cos).powi(2), 0.0, PI, panels)?;
    let s = q.integrate(|t| t.powf(theta) * trig_sum(t, f64::sin).powi(2), 0.0, PI, panels)?;
    Ok((c.value / PI, s.value / PI))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RayleighDiagnostics {
    pub theta: f64,
    pub n: usize,
    pub trials: usize,
    pub min_ratio: f64,
    /// Largest relative mismatch between `zᵀTz` and `C + S` over the trials.
    pub max_split_mismatch: f64,
}

/// Minimum of `zᵀ T_n(|t|^θ) z / zᵀ τ_n(|t|^θ) z` over random unit vectors,
/// with the numerator cross-checked against its cosine/sine split.
pub fn rayleigh_lower_diag(theta: f64, n: usize, trials: usize, seed: u64) -> Result<RayleighDiagnostics> {
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::DenseCapExceeded { n, cap: DEFAULT_DENSE_CAP });
    }
    if trials == 0 {
        return Err(invalid("at least one trial is required"));
    }
    let s = Symbol::abs_pow(theta)?;
    let t = ToeplitzOperator::build(&s, n)?;
    let p = TauOperator::build(&s, n, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    let mut max_split_mismatch: f64 = 0.0;
    for _ in 0..trials {
        let mut z: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        z.iter_mut().for_each(|v| *v /= norm);

        let tz = t.matvec(&z)?;
        let num: f64 = z.iter().zip(&tz).map(|(a, b)| a * b).sum();
        min_ratio = min_ratio.min(rayleigh_ratio(&t, &p, &z)?);
        let (c, sn) = split_numerator(theta, &z)?;
        max_split_mismatch = max_split_mismatch.max(((c + sn) - num).abs() / num.abs());
    }
    Ok(RayleighDiagnostics { theta, n, trials, min_ratio, max_split_mismatch })
}

/// Approximate extreme eigenvalues of `P⁻¹T` from a Lanczos run on the
/// symmetrized operator. Intended for sizes above the dense cap.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExtremeEstimate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub steps: usize,
    pub approximate: bool,
}

pub fn extreme_eigenvalues(t: &ToeplitzOperator, p: &TauOperator, steps: usize, seed: u64) -> Result<ExtremeEstimate> {
    let n = t.n();
    if p.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: p.n() });
    }
    let steps = steps.clamp(1, n);
    let half_inv = p.pow(-0.5);
    let op = |x: &[f64]| -> Result<Vec<f64>> { half_inv.apply(&t.matvec(&half_inv.apply(x)?)?) };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut w = op(&v)?;
        let a: f64 = w.iter().zip(&v).map(|(x, y)| x * y).sum();
        basis.push(v);
        alpha.push(a);
        // Full reorthogonalization, applied twice.
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let bnorm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if bnorm <= 1e-12 * a.abs().max(1.0) || basis.len() == steps {
            break;
        }
        beta.push(bnorm);
        v = w.into_iter().map(|x| x / bnorm).collect();
    }
    let m = alpha.len();
    let tri = Mat::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i.abs_diff(j) == 1 {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    let ritz = sym_eigenvalues(&tri)?;
    Ok(ExtremeEstimate { lambda_min: ritz[0], lambda_max: ritz[m - 1], steps: m, approximate: true })
}
