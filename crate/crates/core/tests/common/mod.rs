//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use faer::Mat;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_m.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let dp = {
                    let (mut q0, mut q1) = (1.0, z);
                    for k in 2..=m {
                        let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                        q0 = q1;
                        q1 = q2;
                    }
                    m as f64 * (z * q1 - q0) / (z * z - 1.0)
                };
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// Composite 20-point Gauss–Legendre on [0, π] with `panels` uniform panels,
/// the first one refined geometrically towards 0 to absorb `t^θ`.
pub fn integrate_0_pi(f: impl Fn(f64) -> f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(20);
    let rule = |a: f64, b: f64| -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        x.iter().zip(&w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>() * h
    };
    let h = PI / panels as f64;
    let mut total = 0.0;
    let mut hi = h;
    for _ in 0..60 {
        total += rule(0.5 * hi, hi);
        hi *= 0.5;
    }
    total += rule(0.0, hi);
    for p in 1..panels {
        total += rule(p as f64 * h, (p + 1) as f64 * h);
    }
    total
}

/// `(1/π) ∫_0^π f(t) cos(lt) dt`.
pub fn coeff_oracle(f: impl Fn(f64) -> f64, l: usize) -> f64 {
    integrate_0_pi(|t| f(t) * (l as f64 * t).cos(), 8 * (l + 1)) / PI
}

/// Dense symmetric Toeplitz matrix from its first column.
pub fn dense_toeplitz(col: &[f64]) -> Mat<f64> {
    let n = col.len();
    Mat::from_fn(n, n, |i, j| col[i.abs_diff(j)])
}

pub fn dense_sine(n: usize) -> Mat<f64> {
    let s = (2.0 / (n + 1) as f64).sqrt();
    Mat::from_fn(n, n, |i, j| s * (((i + 1) * (j + 1)) as f64 * PI / (n + 1) as f64).sin())
}

pub fn matvec(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(f64::MIN_POSITIVE)
}

/// Textbook CG on a dense matrix from x = 0; returns (iterations, converged).
pub fn dense_cg(a: &Mat<f64>, b: &[f64], tol: f64, max_iter: usize) -> (usize, bool) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let r0 = norm(b);
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    for it in 1..=max_iter {
        let q = matvec(a, &p);
        let alpha = rr / p.iter().zip(&q).map(|(u, v)| u * v).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        if rr_new.sqrt() / r0 <= tol {
            return (it, true);
        }
        for i in 0..n {
            p[i] = r[i] + rr_new / rr * p[i];
        }
        rr = rr_new;
    }
    (max_iter, false)
}

/// Deterministic pseudo-random vector in [-1, 1).
pub fn test_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect()
}
