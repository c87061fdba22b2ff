//! Preconditioned conjugate gradient for SPD operators.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tau::TauOperator;
use crate::toeplitz::{BandCholesky, ToeplitzOperator};

/// `x ↦ A x` for a symmetric positive definite `A`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// `r ↦ P⁻¹ r` for a symmetric positive definite `P`.
pub trait Preconditioner {
    fn dim(&self) -> usize;
    fn solve(&self, r: &[f64]) -> Result<Vec<f64>>;
}

impl LinearOperator for ToeplitzOperator {
    fn dim(&self) -> usize {
        self.n()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.matvec(x)
    }
}

/// A Toeplitz operator applied with [`ToeplitzOperator::matvec_compensated`].
/// For `θ > 2` and large `n` the FFT product's normwise rounding error is
/// amplified by the preconditioner and costs PCG iterations.
#[derive(Debug, Clone, Copy)]
pub struct Compensated<'a>(pub &'a ToeplitzOperator);

impl LinearOperator for Compensated<'_> {
    fn dim(&self) -> usize {
        self.0.n()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.0.matvec_compensated(x)
    }
}

impl LinearOperator for TauOperator {
    fn dim(&self) -> usize {
        self.n()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        TauOperator::apply(self, x)
    }
}

impl Preconditioner for TauOperator {
    fn dim(&self) -> usize {
        self.n()
    }
    fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        TauOperator::solve(self, r)
    }
}

impl Preconditioner for BandCholesky {
    fn dim(&self) -> usize {
        self.n()
    }
    fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        BandCholesky::solve(self, r)
    }
}

impl LinearOperator for Mat<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols() {
            return Err(Error::DimensionMismatch { expected: self.ncols(), found: x.len() });
        }
        Ok((0..self.nrows()).map(|i| (0..self.ncols()).map(|j| self[(i, j)] * x[j]).sum()).collect())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl Preconditioner for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(r.to_vec())
    }
}

/// Adapts a closure to either operator trait.
pub struct FnOperator<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64>> FnOperator<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(&[f64]) -> Vec<f64>> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(x))
    }
}

impl<F: Fn(&[f64]) -> Vec<f64>> Preconditioner for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub record_history: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-7, max_iter: 1000, record_history: false }
    }
}

impl SolveConfig {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(invalid(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖r^(j)‖₂ / ‖r^(0)‖₂` at termination.
    pub relative_residual: f64,
    pub residual_history: Option<Vec<f64>>,
}

/// The residual is recomputed as `b - A x` at this period to curb drift.
const RESIDUAL_REFRESH: usize = 50;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// PCG from `x₀ = 0`, stopping when `‖r^(j)‖₂ / ‖r^(0)‖₂ <= rel_tol`.
pub fn pcg_solve<A, P>(a: &A, p: &P, b: &[f64], cfg: &SolveConfig) -> Result<SolveResult>
where
    A: LinearOperator + ?Sized,
    P: Preconditioner + ?Sized,
{
    cfg.validate()?;
    let n = b.len();
    check_dim(a.dim(), n)?;
    check_dim(p.dim(), n)?;
    let r0_norm = dot(b, b).sqrt();
    if r0_norm == 0.0 || !r0_norm.is_finite() {
        return Err(invalid("right-hand side must be nonzero and finite"));
    }

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut dir = vec![0.0; n];
    let mut rz_prev = 0.0;
    let mut history = cfg.record_history.then(Vec::new);
    let mut rel = 1.0;

    for iter in 1..=cfg.max_iter {
        let z = p.solve(&r)?;
        let rz = dot(&r, &z);
        let beta = if iter == 1 { 0.0 } else { rz / rz_prev };
        for (d, zi) in dir.iter_mut().zip(&z) {
            *d = zi + beta * *d;
        }
        let q = a.apply(&dir)?;
        let curvature = dot(&dir, &q);
        let alpha = rz / curvature;
        if !alpha.is_finite() || !rz.is_finite() {
            return Err(Error::NonFinite { iteration: iter });
        }
        if curvature.is_nan() || curvature <= 0.0 {
            return Err(Error::NotPositiveDefinite { pivot: iter, value: curvature });
        }
        for i in 0..n {
            x[i] += alpha * dir[i];
            r[i] -= alpha * q[i];
        }
        if iter % RESIDUAL_REFRESH == 0 {
            let ax = a.apply(&x)?;
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
        }
        rz_prev = rz;
        rel = dot(&r, &r).sqrt() / r0_norm;
        if !rel.is_finite() {
            return Err(Error::NonFinite { iteration: iter });
        }
        if let Some(h) = history.as_mut() {
            h.push(rel);
        }
        if rel <= cfg.rel_tol {
            return Ok(SolveResult { x, iterations: iter, converged: true, relative_residual: rel, residual_history: history });
        }
    }
    Ok(SolveResult { x, iterations: cfg.max_iter, converged: false, relative_residual: rel, residual_history: history })
}

/// Plain CG, i.e. PCG with the identity preconditioner.
pub fn unpreconditioned_cg<A: LinearOperator + ?Sized>(a: &A, b: &[f64], cfg: &SolveConfig) -> Result<SolveResult> {
    pcg_solve(a, &Identity(b.len()), b, cfg)
}
