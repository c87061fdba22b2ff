//! Dense symmetric helpers over `faer`.

use faer::{Mat, Side};

use crate::error::{Error, Result};

pub fn max_asymmetry(m: &Mat<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in j + 1..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn max_abs(m: &Mat<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max(m[(i, j)].abs());
        }
    }
    worst
}

/// Averages `m` with its transpose in place.
pub fn symmetrize(m: &mut Mat<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in j + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Eigenvalues of a symmetric matrix, ascending. Only the lower triangle is read.
pub fn sym_eigenvalues(m: &Mat<f64>) -> Result<Vec<f64>> {
    let mut e = m.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Eigen)?;
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending, eigenvectors as columns.
pub fn sym_eigen(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..m.nrows()).map(|i| s[i]).collect();
    Ok((values, evd.U().to_owned()))
}

/// Lower Cholesky factor; fails on a non-positive pivot.
pub fn cholesky_lower(m: &Mat<f64>) -> Result<Mat<f64>> {
    let llt = m.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite { pivot: 0, value: f64::NAN })?;
    Ok(llt.L().to_owned())
}

/// Eigenvalues of the pencil `A x = λ B x` for symmetric `A` and SPD `B`,
/// via `L⁻¹ A L⁻ᵀ` with `B = L Lᵀ`.
pub fn pencil_eigenvalues(a: &Mat<f64>, b: &Mat<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.nrows() });
    }
    let l = cholesky_lower(b)?;
    let mut c = a.to_owned();
    l.solve_lower_triangular_in_place(c.as_mut());
    let mut c = c.transpose().to_owned();
    l.solve_lower_triangular_in_place(c.as_mut());
    symmetrize(&mut c);
    sym_eigenvalues(&c)
}

/// `D^{-1/2} M D^{-1/2}` for a positive diagonal `d`.
pub fn diagonal_congruence(m: &Mat<f64>, d: &[f64]) -> Mat<f64> {
    let s: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| s[i] * m[(i, j)] * s[j])
}
