//! Small linear-algebra and angle helpers used by several modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Shift `angle` by a multiple of 2π so it lies within π of `reference`.
pub fn align_angle(angle: f64, reference: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    angle - two_pi * ((angle - reference) / two_pi).round()
}

/// Wrap an angle difference into (−π, π].
pub fn wrap_angle(angle: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut a = angle % two_pi;
    if a > std::f64::consts::PI {
        a -= two_pi;
    } else if a <= -std::f64::consts::PI {
        a += two_pi;
    }
    a
}

/// Unwrap a time series of angles in place: each sample is shifted by a
/// multiple of 2π to stay within π of its predecessor.
pub fn unwrap_series(series: &mut [f64]) {
    for k in 1..series.len() {
        series[k] = align_angle(series[k], series[k - 1]);
    }
}

/// Force exact symmetry: (M + Mᵀ)/2.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Lower-triangular Cholesky factor of an SPD matrix.
pub fn cholesky_lower(m: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    nalgebra::Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or_else(|| Error::Factorization {
            context: context.to_string(),
        })
}

/// Symmetric square root of a PSD matrix via eigendecomposition, clamping
/// slightly negative eigenvalues to zero. Used where a Cholesky factor may
/// not exist (e.g. a singular process-noise matrix).
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| if v > 0.0 { v.sqrt() } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

/// Rank-1 update of a lower-triangular Cholesky factor: returns the factor of
/// L·Lᵀ + v·vᵀ.
pub fn chol_update(l: &mut DMatrix<f64>, v: &DVector<f64>) {
    let n = l.nrows();
    let mut w = v.clone();
    for k in 0..n {
        let lkk = l[(k, k)];
        let r = (lkk * lkk + w[k] * w[k]).sqrt();
        let c = r / lkk;
        let s = w[k] / lkk;
        l[(k, k)] = r;
        for i in (k + 1)..n {
            l[(i, k)] = (l[(i, k)] + s * w[i]) / c;
            w[i] = c * w[i] - s * l[(i, k)];
        }
    }
}

/// Rank-1 downdate of a lower-triangular Cholesky factor: factor of
/// L·Lᵀ − v·vᵀ. Fails when the result is not positive definite.
pub fn chol_downdate(l: &mut DMatrix<f64>, v: &DVector<f64>, context: &str) -> Result<()> {
    let n = l.nrows();
    let mut w = v.clone();
    for k in 0..n {
        let lkk = l[(k, k)];
        let d = lkk * lkk - w[k] * w[k];
        if d <= 0.0 {
            return Err(Error::Factorization {
                context: format!("{context}: downdate lost positive definiteness at row {k}"),
            });
        }
        let r = d.sqrt();
        let c = r / lkk;
        let s = w[k] / lkk;
        l[(k, k)] = r;
        for i in (k + 1)..n {
            l[(i, k)] = (l[(i, k)] - s * w[i]) / c;
            w[i] = c * w[i] - s * l[(i, k)];
        }
    }
    Ok(())
}

/// Solve L·X = B for lower-triangular L.
pub fn solve_lower(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut x = b.clone();
    l.solve_lower_triangular_mut(&mut x);
    x
}

/// Solve Lᵀ·X = B for lower-triangular L.
pub fn solve_lower_transpose(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut x = b.clone();
    l.tr_solve_lower_triangular_mut(&mut x);
    x
}

/// 2-norm condition number from singular values.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
