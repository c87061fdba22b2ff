//! Multi-step preconditioning for `T_n(|t|^θ)` with θ > 2.
//!
//! Writing θ = 2k + r with k >= 1 and r ∈ [0, 2), the chain is
//!
//! ```text
//! P0 = T_n(|t|^θ)
//! P1 = T_n(g_k |t|^r)            g_k = (2 - 2cos t)^k
//! P2 = τ_n(g_k) T_n(|t|^r)
//! P3 = τ_n(g_k |t|^r)
//! P4 = τ_n(|t|^θ)
//! ```
//!
//! If every pencil `(P_j, P_{j+1})` has its eigenvalues in `[α_j, β_j]` up to
//! `r_j^-` below and `r_j^+` above, then `P4⁻¹P0` has its eigenvalues in
//! `[Πα_j, Πβ_j]` up to `Σr_j^-` below and `Σr_j^+` above.
//!
//! All dense work happens in sine coordinates, where every τ matrix is
//! diagonal, and every link is balanced by `D_θ^{-1/2}` (the P4 eigenvalues)
//! so the pencils stay well scaled however ill-conditioned `T_n` is.
//! `P2` is not symmetric; its dense form is the similar SPD matrix
//! `τ^{1/2} T_n(|t|^r) τ^{1/2}`.

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{diagonal_congruence, pencil_eigenvalues, sym_eigenvalues, symmetrize};
use crate::symbols::Symbol;
use crate::tau::{sine_congruence, TauOperator};
use crate::toeplitz::{ToeplitzOperator, DEFAULT_DENSE_CAP};

/// `rank(P1 − P2) <= RANK_FACTOR · k`, the constant measured at small n
/// (see the `rank_factor_is_sufficient` test).
pub const RANK_FACTOR: usize = 2;
/// Largest n for which the rank check runs an SVD.
pub const RANK_CAP: usize = 512;
/// Relative rounding allowance when counting eigenvalues outside a window.
const WINDOW_SLACK: f64 = 1e-9;

/// One operator of the chain.
#[derive(Debug, Clone)]
pub enum ChainOperator {
    Toeplitz(ToeplitzOperator),
    Tau(TauOperator),
    /// `τ · T`, applied right to left.
    TauToeplitz { tau: TauOperator, toeplitz: ToeplitzOperator },
}

impl ChainOperator {
    pub fn n(&self) -> usize {
        match self {
            ChainOperator::Toeplitz(t) => t.n(),
            ChainOperator::Tau(p) => p.n(),
            ChainOperator::TauToeplitz { tau, .. } => tau.n(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            ChainOperator::Toeplitz(t) => t.matvec(x),
            ChainOperator::Tau(p) => p.apply(x),
            ChainOperator::TauToeplitz { tau, toeplitz } => tau.apply(&toeplitz.matvec(x)?),
        }
    }

    /// Dense `S P S`, with the product form replaced by its SPD similar
    /// `D^{1/2} (S T S) D^{1/2}`.
    pub fn sine_form(&self) -> Result<Mat<f64>> {
        let n = self.n();
        match self {
            ChainOperator::Toeplitz(t) => sine_congruence(&t.to_dense(DEFAULT_DENSE_CAP)?),
            ChainOperator::Tau(p) => {
                let d = p.diagonal();
                Ok(Mat::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0 }))
            }
            ChainOperator::TauToeplitz { tau, toeplitz } => {
                let inv: Vec<f64> = tau.diagonal().iter().map(|v| 1.0 / v).collect();
                let mut m = diagonal_congruence(&sine_congruence(&toeplitz.to_dense(DEFAULT_DENSE_CAP)?)?, &inv);
                symmetrize(&mut m);
                Ok(m)
            }
        }
    }

    /// Dense `P` itself; the product form is returned unsymmetrized.
    pub fn to_dense(&self) -> Result<Mat<f64>> {
        match self {
            ChainOperator::Toeplitz(t) => t.to_dense(DEFAULT_DENSE_CAP),
            ChainOperator::Tau(p) => Ok(p.to_dense()),
            ChainOperator::TauToeplitz { tau, toeplitz } => Ok(tau.to_dense() * toeplitz.to_dense(DEFAULT_DENSE_CAP)?),
        }
    }
}

/// The five operators `P0..P4` for a given θ.
#[derive(Debug, Clone)]
pub struct PrecChain {
    pub theta: f64,
    pub k: u32,
    pub r: f64,
    pub operators: Vec<ChainOperator>,
}

impl PrecChain {
    pub fn n(&self) -> usize {
        self.operators[0].n()
    }
}

/// `θ = 2k + r` with `k >= 1`, `r ∈ [0, 2)`.
pub fn split_theta(theta: f64) -> Result<(u32, f64)> {
    if !(theta > 2.0 && theta.is_finite()) {
        return Err(invalid(format!("the chain needs θ > 2, got {theta}")));
    }
    let k = (0.5 * theta).floor();
    let r = (theta - 2.0 * k).max(0.0);
    Ok((k as u32, r))
}

pub fn build_theta_chain(theta: f64, n: usize) -> Result<PrecChain> {
    let (k, r) = split_theta(theta)?;
    let f = Symbol::abs_pow(theta)?;
    let g = Symbol::laplace_pow(k)?;
    let h = Symbol::abs_pow(r)?;
    let gh = Symbol::product(g.clone(), h.clone());
    let operators = vec![
        ChainOperator::Toeplitz(ToeplitzOperator::build(&f, n)?),
        ChainOperator::Toeplitz(ToeplitzOperator::build(&gh, n)?),
        ChainOperator::TauToeplitz { tau: TauOperator::build(&g, n, 1.0)?, toeplitz: ToeplitzOperator::build(&h, n)? },
        ChainOperator::Tau(TauOperator::build(&gh, n, 1.0)?),
        ChainOperator::Tau(TauOperator::build(&f, n, 1.0)?),
    ];
    Ok(PrecChain { theta, k, r, operators })
}

/// `(min, max)` of `|t|^{2k} / (2 - 2cos t)^k` over `[-π, π]`, with the value 1 at 0.
pub fn equiv_bounds(k: u32) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(invalid("equivalence bounds need k >= 1"));
    }
    let ratio = |t: f64| -> f64 {
        if t == 0.0 {
            1.0
        } else {
            (0.5 * t / (0.5 * t).sin()).powi(2 * k as i32)
        }
    };
    const SAMPLES: usize = 100_000;
    let h = PI / SAMPLES as f64;
    let values: Vec<f64> = (0..=SAMPLES).map(|i| ratio(i as f64 * h)).collect();
    let argmin = (0..=SAMPLES).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("nonempty");
    let argmax = (0..=SAMPLES).max_by(|&a, &b| values[a].total_cmp(&values[b])).expect("nonempty");
    let lo = refine(&ratio, argmin, h, SAMPLES, |a, b| a < b);
    let hi = refine(&ratio, argmax, h, SAMPLES, |a, b| a > b);
    Ok((lo, hi))
}

/// Golden-section search for the best value of `f` around grid index `i`.
fn refine(f: &impl Fn(f64) -> f64, i: usize, h: f64, last: usize, better: fn(f64, f64) -> bool) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (i.saturating_sub(1) as f64 * h, (i + 1).min(last) as f64 * h);
    let mut best = f(i as f64 * h);
    for _ in 0..100 {
        let c = b - ratio * (b - a);
        let d = a + ratio * (b - a);
        let (fc, fd) = (f(c), f(d));
        if better(fc, fd) {
            b = d;
        } else {
            a = c;
        }
        for v in [fc, fd] {
            if better(v, best) {
                best = v;
            }
        }
    }
    for v in [f(a), f(b)] {
        if better(v, best) {
            best = v;
        }
    }
    best
}

/// Interval and outlier budget of one pencil `(P_j, P_{j+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub alpha: f64,
    pub beta: f64,
    pub outliers_below: usize,
    pub outliers_above: usize,
}

impl ChainLink {
    pub fn new(alpha: f64, beta: f64, outliers_below: usize, outliers_above: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= beta && beta.is_finite()) {
            return Err(invalid(format!("link interval must satisfy 0 < α <= β, got [{alpha}, {beta}]")));
        }
        Ok(Self { alpha, beta, outliers_below, outliers_above })
    }

    /// Tightest window of a sorted spectrum once the declared outliers are set aside.
    pub fn from_spectrum(sorted: &[f64], outliers_below: usize, outliers_above: usize) -> Result<Self> {
        if outliers_below + outliers_above >= sorted.len() {
            return Err(invalid("declared outliers leave no eigenvalues in the window"));
        }
        Self::new(sorted[outliers_below], sorted[sorted.len() - 1 - outliers_above], outliers_below, outliers_above)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainBudget {
    pub alpha: f64,
    pub beta: f64,
    pub r_minus: usize,
    pub r_plus: usize,
}

impl ChainBudget {
    /// Counts of eigenvalues below `α` and above `β`, with a relative rounding allowance.
    pub fn violations(&self, eigs: &[f64]) -> (usize, usize) {
        let below = eigs.iter().filter(|&&v| v < self.alpha * (1.0 - WINDOW_SLACK)).count();
        let above = eigs.iter().filter(|&&v| v > self.beta * (1.0 + WINDOW_SLACK)).count();
        (below, above)
    }

    pub fn admits(&self, eigs: &[f64]) -> bool {
        let (below, above) = self.violations(eigs);
        below <= self.r_minus && above <= self.r_plus
    }
}

/// Interval bounds multiply, outlier counts add.
pub fn compose_budget(links: &[ChainLink]) -> Result<ChainBudget> {
    if links.is_empty() {
        return Err(invalid("cannot compose an empty chain"));
    }
    Ok(ChainBudget {
        alpha: links.iter().map(|l| l.alpha).product(),
        beta: links.iter().map(|l| l.beta).product(),
        r_minus: links.iter().map(|l| l.outliers_below).sum(),
        r_plus: links.iter().map(|l| l.outliers_above).sum(),
    })
}

/// Outliers `(below, above)` declared for link `j` of a chain with exponent `k`.
pub fn declared_outliers(j: usize, k: u32) -> (usize, usize) {
    match j {
        1 => (RANK_FACTOR * k as usize, RANK_FACTOR * k as usize),
        _ => (0, 0),
    }
}

/// `rank(P1 − τ_n(g_k) T_n(|t|^r))`, counting singular values above
/// `rel_tol · ‖P1‖₂`.
pub fn link_rank(chain: &PrecChain, rel_tol: f64) -> Result<usize> {
    let n = chain.n();
    if n > RANK_CAP {
        return Err(Error::DenseCapExceeded { n, cap: RANK_CAP });
    }
    let p1 = chain.operators[1].to_dense()?;
    let p2 = chain.operators[2].to_dense()?;
    let norm = p1.singular_values().map_err(|_| Error::Eigen)?.into_iter().fold(0.0f64, f64::max);
    let sv = (&p1 - &p2).singular_values().map_err(|_| Error::Eigen)?;
    Ok(sv.into_iter().filter(|&s| s > rel_tol * norm).count())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    /// Pencil index `j`: eigenvalues of `P_{j+1}⁻¹ P_j`.
    pub index: usize,
    pub link: ChainLink,
    pub spectrum_min: f64,
    pub spectrum_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub theta: f64,
    pub n: usize,
    pub k: u32,
    pub r: f64,
    pub links: Vec<LinkReport>,
    pub budget: ChainBudget,
    pub direct_min: f64,
    pub direct_max: f64,
    pub direct_below: usize,
    pub direct_above: usize,
    /// `(r, R)` from [`equiv_bounds`].
    pub equiv_bounds: (f64, f64),
    /// Link 0 lies in `[r, R]` and link 3 in `[1/R, 1/r]`, both with slack `1e-8`.
    pub outer_links_in_bounds: bool,
    /// `rank(P1 − P2)` when `n <= RANK_CAP`.
    pub rank: Option<usize>,
    pub rank_bound: usize,
    pub passed: bool,
}

/// Computes every link spectrum, composes the budget, and checks the direct
/// spectrum of `P4⁻¹P0` against it.
pub fn verify_chain(theta: f64, n: usize) -> Result<ChainReport> {
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::DenseCapExceeded { n, cap: DEFAULT_DENSE_CAP });
    }
    let chain = build_theta_chain(theta, n)?;
    let balance = match &chain.operators[4] {
        ChainOperator::Tau(p) => p.diagonal(),
        _ => unreachable!("P4 is a τ matrix"),
    };
    let forms = chain
        .operators
        .iter()
        .map(|op| op.sine_form().map(|m| diagonal_congruence(&m, &balance)))
        .collect::<Result<Vec<_>>>()?;

    let mut links = Vec::with_capacity(4);
    for j in 0..4 {
        let eigs = pencil_eigenvalues(&forms[j], &forms[j + 1])?;
        let (below, above) = declared_outliers(j, chain.k);
        links.push(LinkReport {
            index: j,
            link: ChainLink::from_spectrum(&eigs, below, above)?,
            spectrum_min: eigs[0],
            spectrum_max: eigs[eigs.len() - 1],
        });
    }
    let budget = compose_budget(&links.iter().map(|l| l.link).collect::<Vec<_>>())?;

    let mut direct = forms[0].clone();
    symmetrize(&mut direct);
    let direct = sym_eigenvalues(&direct)?;
    let (direct_below, direct_above) = budget.violations(&direct);

    let (lo, hi) = equiv_bounds(chain.k)?;
    let slack = 1e-8;
    let outer_links_in_bounds = links[0].spectrum_min >= lo - slack
        && links[0].spectrum_max <= hi + slack
        && links[3].spectrum_min >= 1.0 / hi - slack
        && links[3].spectrum_max <= 1.0 / lo + slack;
    let rank = if n <= RANK_CAP { Some(link_rank(&chain, 1e-10)?) } else { None };

    Ok(ChainReport {
        theta,
        n,
        k: chain.k,
        r: chain.r,
        links,
        budget,
        direct_min: direct[0],
        direct_max: direct[direct.len() - 1],
        direct_below,
        direct_above,
        equiv_bounds: (lo, hi),
        outer_links_in_bounds,
        rank,
        rank_bound: RANK_FACTOR * chain.k as usize,
        passed: direct_below <= budget.r_minus && direct_above <= budget.r_plus,
    })
}
