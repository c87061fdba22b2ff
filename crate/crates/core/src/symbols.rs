//! Even, nonnegative generating functions on `[-π, π]` and their Fourier
//! coefficients.
//!
//! The two building blocks are `|t|^θ` (a zero of arbitrary real order at the
//! origin) and the trigonometric polynomial `(2 - 2cos t)^k`. Products and
//! positive multiples of these cover every symbol used by the preconditioning
//! chain.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, LazyLock, Mutex};

use crate::error::{invalid, Error, Result};
use crate::quad::Quadrature;

#[derive(Debug, Clone, PartialEq)]
pub enum Symbol {
    /// The constant function `c >= 0`.
    Constant(f64),
    /// `|t|^θ`, θ >= 0 (θ = 0 is the constant one).
    AbsPow(f64),
    /// `(2 - 2cos t)^k`.
    LaplacePow(u32),
    Product(Box<Symbol>, Box<Symbol>),
    Scaled(f64, Box<Symbol>),
}

impl Symbol {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(invalid(format!("constant symbol must be finite and nonnegative, got {c}")));
        }
        Ok(Symbol::Constant(c))
    }

    pub fn abs_pow(theta: f64) -> Result<Self> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(invalid(format!("zero order must be finite and nonnegative, got {theta}")));
        }
        Ok(Symbol::AbsPow(theta))
    }

    pub fn laplace_pow(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(invalid("laplace_pow requires k >= 1"));
        }
        Ok(Symbol::LaplacePow(k))
    }

    pub fn product(a: Symbol, b: Symbol) -> Self {
        Symbol::Product(Box::new(a), Box::new(b))
    }

    pub fn scaled(c: f64, s: Symbol) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("scale factor must be positive, got {c}")));
        }
        Ok(Symbol::Scaled(c, Box::new(s)))
    }

    /// Order of the zero at the origin.
    pub fn zero_order(&self) -> f64 {
        match self {
            Symbol::Constant(_) => 0.0,
            Symbol::AbsPow(theta) => *theta,
            Symbol::LaplacePow(k) => 2.0 * *k as f64,
            Symbol::Product(a, b) => a.zero_order() + b.zero_order(),
            Symbol::Scaled(_, s) => s.zero_order(),
        }
    }

    /// Pointwise value for `t` in `[-π, π]`.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Symbol::Constant(c) => *c,
            Symbol::AbsPow(theta) => t.abs().powf(*theta),
            // 2 - 2cos t = 4 sin²(t/2), which keeps full relative accuracy near 0.
            Symbol::LaplacePow(k) => (2.0 * (0.5 * t).sin()).powi(2 * *k as i32),
            Symbol::Product(a, b) => a.eval(t) * b.eval(t),
            Symbol::Scaled(c, s) => c * s.eval(t),
        }
    }

    /// Cosine coefficients `c_0..c_k` when the symbol is a trigonometric polynomial.
    pub fn trig_poly(&self) -> Option<Vec<f64>> {
        match self {
            Symbol::Constant(c) => Some(vec![*c]),
            Symbol::AbsPow(theta) if *theta == 0.0 => Some(vec![1.0]),
            Symbol::AbsPow(_) => None,
            Symbol::LaplacePow(k) => {
                let k = *k as usize;
                Some((0..=k).map(|l| sign(l) * binomial(2 * k, k + l)).collect())
            }
            Symbol::Product(a, b) => Some(convolve_even(&a.trig_poly()?, &b.trig_poly()?)),
            Symbol::Scaled(c, s) => Some(s.trig_poly()?.into_iter().map(|v| c * v).collect()),
        }
    }

    /// Degree of the trigonometric polynomial, if it is one.
    pub fn bandwidth(&self) -> Option<usize> {
        self.trig_poly().map(|p| p.len() - 1)
    }

    fn cache_key(&self) -> String {
        format!("{self:?}")
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Constant(c) => write!(f, "{c}"),
            Symbol::AbsPow(theta) => write!(f, "|t|^{theta}"),
            Symbol::LaplacePow(1) => write!(f, "(2-2cos t)"),
            Symbol::LaplacePow(k) => write!(f, "(2-2cos t)^{k}"),
            Symbol::Product(a, b) => write!(f, "{a}*{b}"),
            Symbol::Scaled(c, s) => write!(f, "{c}*{s}"),
        }
    }
}

fn sign(l: usize) -> f64 {
    if l.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// Product of two even trigonometric polynomials given by their cosine coefficients.
fn convolve_even(a: &[f64], b: &[f64]) -> Vec<f64> {
    let ka = a.len() as i64 - 1;
    let kb = b.len() as i64 - 1;
    let coeff = |c: &[f64], j: i64| c.get(j.unsigned_abs() as usize).copied().unwrap_or(0.0);
    (0..=ka + kb)
        .map(|l| (-ka..=ka).map(|m| coeff(a, m) * coeff(b, l - m)).sum())
        .collect()
}

/// `sin(πx)` with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    (PI * r).sin()
}

/// Fourier coefficient of `|t|^θ` for `l >= 1`.
///
/// The integral `∫_0^π t^θ e^{ilt} dt` is deformed onto two vertical rays:
/// the ray from 0 gives `Γ(θ+1) e^{iπ(θ+1)/2} / l^{θ+1}` in closed form, the
/// ray from π gives `(i/l)(-1)^l ∫_0^∞ (π + is/l)^θ e^{-s} ds`, which is
/// smooth and non-oscillatory. Neither piece suffers the cancellation of
/// direct oscillatory quadrature, so high-order coefficients keep full
/// relative accuracy.
fn abs_pow_coeff(theta: f64, l: u64) -> Result<f64> {
    let lf = l as f64;
    let singular = if theta == 0.0 {
        0.0
    } else {
        -sin_pi(0.5 * theta) * (libm::lgamma(theta + 1.0) - (theta + 1.0) * lf.ln()).exp()
    };

    let log_scale = theta * PI.ln();
    let mut upper = 40.0;
    while theta * PI.hypot(upper / lf).ln() - upper > log_scale - 42.0 {
        upper += 20.0;
    }
    let im_part = |s: f64| {
        let y = s / lf;
        PI.hypot(y).powf(theta) * (theta * y.atan2(PI)).sin() * (-s).exp()
    };
    let q = Quadrature::new(1e-14, 0.0);
    let endpoint = q.integrate(im_part, 0.0, upper, 8)?.value;
    let parity = sign(l as usize);
    Ok((singular + parity * endpoint / lf) / PI)
}

/// Splits a product into its polynomial cosine coefficients and the other factor.
fn polynomial_factor<'a>(a: &'a Symbol, b: &'a Symbol) -> Option<(Vec<f64>, &'a Symbol)> {
    a.trig_poly().map(|p| (p, b)).or_else(|| b.trig_poly().map(|p| (p, a)))
}

/// The `l`-th Fourier coefficient `(1/2π) ∫ f(t) e^{-ilt} dt`.
pub fn fourier_coeff(s: &Symbol, l: i64) -> Result<f64> {
    let l = l.unsigned_abs();
    if let Some(poly) = s.trig_poly() {
        return Ok(poly.get(l as usize).copied().unwrap_or(0.0));
    }
    match s {
        Symbol::AbsPow(theta) if l == 0 => Ok(PI.powf(*theta) / (theta + 1.0)),
        Symbol::AbsPow(theta) => abs_pow_coeff(*theta, l),
        Symbol::Scaled(c, inner) => Ok(c * fourier_coeff(inner, l as i64)?),
        Symbol::Product(a, b) if polynomial_factor(a, b).is_some() => {
            let (poly, other) = polynomial_factor(a, b).expect("checked above");
            let k = poly.len() as i64 - 1;
            let l = l as i64;
            (-k..=k).map(|m| Ok(poly[m.unsigned_abs() as usize] * fourier_coeff(other, l - m)?)).sum()
        }
        _ => {
            let lf = l as f64;
            let q = Quadrature::default();
            let est = q.integrate(|t| s.eval(t) * (lf * t).cos(), 0.0, PI, l as usize + 1)?;
            Ok(est.value / PI)
        }
    }
}

/// First `n` Fourier coefficients `a_0..a_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoeffs {
    pub a: Vec<f64>,
}

impl FourierCoeffs {
    pub fn n(&self) -> usize {
        self.a.len()
    }
}

static COEFF_CACHE: LazyLock<Mutex<HashMap<String, Arc<Vec<f64>>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

/// Computes `a_0..a_{n-1}`, reusing previously computed prefixes of the same symbol.
pub fn fourier_coeffs(s: &Symbol, n: usize) -> Result<FourierCoeffs> {
    if n == 0 {
        return Err(invalid("dimension must be positive"));
    }
    let key = s.cache_key();
    let cached = COEFF_CACHE.lock().expect("coefficient cache poisoned").get(&key).cloned();
    let mut a: Vec<f64> = match &cached {
        Some(c) if c.len() >= n => return Ok(FourierCoeffs { a: c[..n].to_vec() }),
        Some(c) => c.to_vec(),
        None => Vec::with_capacity(n),
    };
    let start = a.len();
    match s {
        // Exact finite convolution against the cached coefficients of the other factor.
        Symbol::Product(x, y) if s.trig_poly().is_none() && polynomial_factor(x, y).is_some() => {
            let (poly, other) = polynomial_factor(x, y).expect("checked above");
            let k = poly.len() - 1;
            let b = fourier_coeffs(other, n + k)?.a;
            for l in start..n {
                let v = (-(k as i64)..=k as i64)
                    .map(|m| poly[m.unsigned_abs() as usize] * b[(l as i64 - m).unsigned_abs() as usize])
                    .sum();
                a.push(v);
            }
        }
        _ => {
            for l in start..n {
                a.push(fourier_coeff(s, l as i64)?);
            }
        }
    }
    let mut cache = COEFF_CACHE.lock().expect("coefficient cache poisoned");
    let entry = cache.entry(key).or_insert_with(|| Arc::new(Vec::new()));
    if entry.len() < a.len() {
        *entry = Arc::new(a.clone());
    }
    Ok(FourierCoeffs { a })
}

/// Grid points `w_i = iπ/(n+1)`, `i = 1..n`.
pub fn grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| PI * i as f64 / (n + 1) as f64).collect()
}

/// Samples `f(w_i)`; every entry must be strictly positive.
pub fn grid_samples(s: &Symbol, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("dimension must be positive"));
    }
    grid(n)
        .into_iter()
        .enumerate()
        .map(|(i, w)| {
            let v = s.eval(w);
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::ZeroSample { index: i + 1 })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(Symbol::AbsPow(1.0).eval(PI), PI);
        assert_eq!(Symbol::LaplacePow(1).eval(0.0), 0.0);
        assert!(close(Symbol::LaplacePow(2).eval(PI), 16.0, 1e-15));
    }

    #[test]
    fn laplace_coefficients() {
        let g1 = Symbol::LaplacePow(1);
        assert_eq!(fourier_coeff(&g1, 0).unwrap(), 2.0);
        assert_eq!(fourier_coeff(&g1, 1).unwrap(), -1.0);
        assert_eq!(fourier_coeff(&g1, 2).unwrap(), 0.0);
        let g2 = Symbol::LaplacePow(2);
        let c: Vec<f64> = (0..4).map(|l| fourier_coeff(&g2, l).unwrap()).collect();
        assert_eq!(c, vec![6.0, -4.0, 1.0, 0.0]);
    }

    #[test]
    fn polynomial_products_collapse() {
        let p = Symbol::product(Symbol::LaplacePow(1), Symbol::LaplacePow(2));
        assert_eq!(p.trig_poly(), Symbol::LaplacePow(3).trig_poly());
        assert_eq!(p.zero_order(), 6.0);
        assert_eq!(p.bandwidth(), Some(3));
    }

    #[test]
    fn mixed_products_match_quadrature() {
        let p = Symbol::product(Symbol::LaplacePow(2), Symbol::AbsPow(0.5));
        let q = Quadrature::new(1e-13, 0.0);
        let batch = fourier_coeffs(&p, 12).unwrap();
        for l in 0..12 {
            let lf = l as f64;
            let direct = q.integrate(|t| p.eval(t) * (lf * t).cos(), 0.0, PI, l + 1).unwrap().value / PI;
            assert!((fourier_coeff(&p, l as i64).unwrap() - direct).abs() < 1e-13, "l = {l}");
            assert!((batch.a[l] - direct).abs() < 1e-13, "l = {l}");
        }
    }

    #[test]
    fn abs_pow_closed_values() {
        assert!(close(fourier_coeff(&Symbol::AbsPow(1.0), 0).unwrap(), PI / 2.0, 1e-15));
        assert!(close(fourier_coeff(&Symbol::AbsPow(1.0), 1).unwrap(), -2.0 / PI, 1e-14));
        assert!(close(fourier_coeff(&Symbol::AbsPow(3.0), 0).unwrap(), PI.powi(3) / 4.0, 1e-15));
        // t² has coefficients 2(-1)^l / l².
        for l in 1..20 {
            let expect = 2.0 * if l % 2 == 0 { 1.0 } else { -1.0 } / (l * l) as f64;
            assert!(close(fourier_coeff(&Symbol::AbsPow(2.0), l).unwrap(), expect, 1e-13));
        }
    }

    #[test]
    fn abs_pow_zero_is_identity_symbol() {
        assert_eq!(fourier_coeff(&Symbol::AbsPow(0.0), 0).unwrap(), 1.0);
        assert_eq!(fourier_coeff(&Symbol::AbsPow(0.0), 5).unwrap(), 0.0);
    }

    #[test]
    fn coefficients_are_even_in_l() {
        let s = Symbol::AbsPow(1.5);
        for l in 1..6 {
            assert_eq!(fourier_coeff(&s, l).unwrap(), fourier_coeff(&s, -l).unwrap());
        }
    }

    #[test]
    fn zero_order_adds_over_products() {
        let s = Symbol::product(Symbol::LaplacePow(2), Symbol::AbsPow(0.5));
        assert_eq!(s.zero_order(), 4.5);
        let scaled = Symbol::scaled(3.0, s).unwrap();
        assert_eq!(scaled.zero_order(), 4.5);
    }

    #[test]
    fn grid_sample_examples() {
        let g = grid_samples(&Symbol::LaplacePow(1), 3).unwrap();
        let expect = [2.0 - 2f64.sqrt(), 2.0, 2.0 + 2f64.sqrt()];
        for (a, b) in g.iter().zip(expect) {
            assert!(close(*a, b, 1e-15));
        }
        assert_eq!(grid_samples(&Symbol::AbsPow(1.0), 1).unwrap(), vec![PI / 2.0]);
        let sq = grid_samples(&Symbol::AbsPow(2.0), 3).unwrap();
        for (i, v) in sq.iter().enumerate() {
            assert!(close(*v, (PI * (i + 1) as f64 / 4.0).powi(2), 1e-15));
        }
    }

    #[test]
    fn zero_sample_is_rejected() {
        let s = Symbol::Constant(0.0);
        assert!(matches!(grid_samples(&s, 4), Err(Error::ZeroSample { index: 1 })));
    }

    #[test]
    fn constructors_validate() {
        assert!(Symbol::abs_pow(-1.0).is_err());
        assert!(Symbol::laplace_pow(0).is_err());
        assert!(Symbol::scaled(0.0, Symbol::AbsPow(1.0)).is_err());
        assert!(Symbol::constant(f64::NAN).is_err());
    }

    #[test]
    fn cache_serves_prefixes() {
        let s = Symbol::AbsPow(2.75);
        let long = fourier_coeffs(&s, 40).unwrap();
        let short = fourier_coeffs(&s, 10).unwrap();
        assert_eq!(&long.a[..10], &short.a[..]);
        let longer = fourier_coeffs(&s, 50).unwrap();
        assert_eq!(&longer.a[..40], &long.a[..]);
    }
}
