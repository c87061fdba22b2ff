//! 2×2 matrix-valued symbols and their block Toeplitz matrices.
//!
//! `B_{2n}(F)` stacks the four scalar Toeplitz blocks; a perfect shuffle turns
//! it into `T_n(F)`, whose entries are 2×2 blocks of Fourier coefficients.
//! Both are positive semidefinite whenever `F(t)` is, which is what the
//! Schur-complement checks below exercise.

use std::f64::consts::PI;

use faer::prelude::Solve;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{max_abs, max_asymmetry, sym_eigenvalues};
use crate::spectral::spectral_report;
use crate::symbols::Symbol;
use crate::toeplitz::{ToeplitzOperator, DEFAULT_DENSE_CAP};

/// Largest block size for which Schur complements are formed.
pub const SCHUR_CAP: usize = 512;
/// Default absolute tolerance for [`is_psd`].
pub const DEFAULT_PSD_TOL: f64 = 1e-10;
/// Points on `[0, π]` used by [`BlockSymbol::is_pointwise_psd`].
pub const PSD_GRID: usize = 10_000;

/// `F(t) = [[f1, f2], [f3, f4]]` with `f2 = f3`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSymbol {
    pub f1: Symbol,
    pub f2: Symbol,
    pub f3: Symbol,
    pub f4: Symbol,
}

impl BlockSymbol {
    pub fn new(f1: Symbol, f2: Symbol, f3: Symbol, f4: Symbol) -> Result<Self> {
        if f2 != f3 {
            return Err(invalid("block symbol must be symmetric (f2 = f3)"));
        }
        Ok(Self { f1, f2, f3, f4 })
    }

    pub fn symmetric(f1: Symbol, off: Symbol, f4: Symbol) -> Self {
        Self { f1, f2: off.clone(), f3: off, f4 }
    }

    /// `[[|t|^θ₁, |t|^θ̂], [|t|^θ̂, |t|^θ₂]]` with `θ̂ = (θ₁ + θ₂)/2`.
    pub fn mean_construction(theta1: f64, theta2: f64) -> Result<Self> {
        let mean = 0.5 * (theta1 + theta2);
        Ok(Self::symmetric(Symbol::abs_pow(theta1)?, Symbol::abs_pow(mean)?, Symbol::abs_pow(theta2)?))
    }

    pub fn eval(&self, t: f64) -> [[f64; 2]; 2] {
        [[self.f1.eval(t), self.f2.eval(t)], [self.f3.eval(t), self.f4.eval(t)]]
    }

    /// Checks `f1 >= 0`, `f4 >= 0` and `det F >= 0` on a uniform grid of
    /// [`PSD_GRID`] points, with a relative rounding allowance on the determinant.
    pub fn is_pointwise_psd(&self) -> bool {
        (0..PSD_GRID).all(|i| {
            let t = PI * i as f64 / (PSD_GRID - 1) as f64;
            let [[a, b], [c, d]] = self.eval(t);
            let det = a * d - b * c;
            let scale = (a * d).abs() + (b * c).abs();
            a >= 0.0 && d >= 0.0 && det >= -1e-12 * scale
        })
    }
}

/// `B_{2n}(F) = [[T_n(f1), T_n(f2)], [T_n(f3), T_n(f4)]]`.
#[derive(Debug, Clone)]
pub struct BlockToeplitz {
    n: usize,
    blocks: [ToeplitzOperator; 4],
}

pub fn build_block(f: &BlockSymbol, n: usize) -> Result<BlockToeplitz> {
    if n == 0 {
        return Err(invalid("dimension must be positive"));
    }
    let blocks = [
        ToeplitzOperator::build(&f.f1, n)?,
        ToeplitzOperator::build(&f.f2, n)?,
        ToeplitzOperator::build(&f.f3, n)?,
        ToeplitzOperator::build(&f.f4, n)?,
    ];
    Ok(BlockToeplitz { n, blocks })
}

impl BlockToeplitz {
    /// Block size; the full matrix is `2n × 2n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Block `(s, u)` for `s, u ∈ {0, 1}`.
    pub fn block(&self, s: usize, u: usize) -> &ToeplitzOperator {
        &self.blocks[2 * s + u]
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if x.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: x.len() });
        }
        let (x0, x1) = x.split_at(n);
        let mut y = Vec::with_capacity(2 * n);
        for s in 0..2 {
            let a = self.block(s, 0).matvec(x0)?;
            let b = self.block(s, 1).matvec(x1)?;
            y.extend(a.iter().zip(&b).map(|(p, q)| p + q));
        }
        Ok(y)
    }

    /// Dense `B_{2n}` in block order.
    pub fn to_dense(&self, cap: usize) -> Result<Mat<f64>> {
        let n = self.n;
        if n > cap {
            return Err(Error::DenseCapExceeded { n, cap });
        }
        Ok(Mat::from_fn(2 * n, 2 * n, |i, j| self.block(i / n, j / n).entry(i % n, j % n)))
    }
}

/// `Π B Πᵀ`, moving block-ordered index `s·n + j` to interleaved index `2j + s`
/// (0-based). The result is `T_n(F)` with 2×2 coefficient blocks.
pub fn interleave_permute(b: &BlockToeplitz) -> Result<Mat<f64>> {
    let n = b.n;
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::DenseCapExceeded { n, cap: DEFAULT_DENSE_CAP });
    }
    Ok(Mat::from_fn(2 * n, 2 * n, |i, j| b.block(i % 2, j % 2).entry(i / 2, j / 2)))
}

/// `T(f4) − T(f3) T(f1)⁻¹ T(f2)`, densely via Cholesky of `T(f1)`.
pub fn schur_complement(b: &BlockToeplitz) -> Result<Mat<f64>> {
    let n = b.n;
    if n > SCHUR_CAP {
        return Err(Error::DenseCapExceeded { n, cap: SCHUR_CAP });
    }
    let top = b.block(0, 0).to_dense(SCHUR_CAP)?;
    let llt = top.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite { pivot: 0, value: f64::NAN })?;
    let mut x = b.block(0, 1).to_dense(SCHUR_CAP)?;
    llt.solve_in_place(x.as_mut());
    let lower = b.block(1, 0).to_dense(SCHUR_CAP)?;
    let mut s = b.block(1, 1).to_dense(SCHUR_CAP)?;
    s -= &lower * &x;
    Ok(s)
}

/// True iff `λ_min(M) >= −tol`. `M` must be symmetric to
/// `1e-12` relative to its largest entry.
pub fn is_psd(m: &Mat<f64>, tol: f64) -> Result<bool> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(invalid(format!("tolerance must be nonnegative, got {tol}")));
    }
    let asym = max_asymmetry(m);
    if asym > 1e-12 * max_abs(m).max(1.0) {
        return Err(Error::Asymmetric { asymmetry: asym });
    }
    let eigs = sym_eigenvalues(m)?;
    Ok(eigs.first().is_none_or(|&min| min >= -tol))
}

/// Both sides of `ρ(θ̂)² <= ρ(θ₁)·ρ(θ₂)`, where `ρ(θ)` is the spectral radius
/// of `τ_n(|t|^θ)⁻¹ T_n(|t|^θ)` and `θ̂` the mean of `θ₁, θ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricMeanBound {
    pub theta1: f64,
    pub theta2: f64,
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
}

impl GeometricMeanBound {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs + slack
    }
}

pub fn geometric_mean_bound(theta1: f64, theta2: f64, n: usize) -> Result<GeometricMeanBound> {
    let rho = |theta: f64| -> Result<f64> { Ok(spectral_report(theta, n)?.lambda_max) };
    let mean = rho(0.5 * (theta1 + theta2))?;
    Ok(GeometricMeanBound { theta1, theta2, n, lhs: mean * mean, rhs: rho(theta1)? * rho(theta2)? })
}
