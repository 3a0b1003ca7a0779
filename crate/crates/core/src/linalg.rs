//! Small shared helpers for 4x4 symmetric positive (semi-)definite matrices.

use nalgebra::{Matrix4, Vector4};

/// Determinant floor used when taking logs of possibly singular covariances.
pub const EPS_DET: f64 = 1e-12;

/// Regularizer added to covariances that fail to invert.
pub const EPS_REG: f64 = 1e-9;

pub fn symmetrize(m: &Matrix4<f64>) -> Matrix4<f64> {
    (m + m.transpose()) * 0.5
}

/// Lower-triangular Cholesky factor of a PSD matrix.
///
/// Pivots that round below zero are clamped so that exactly-singular inputs
/// (e.g. the zero matrix of a point-mass detection) factor without error.
pub fn psd_cholesky(m: &Matrix4<f64>) -> Matrix4<f64> {
    let mut l = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..=i {
            let mut sum = m[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                l[(i, i)] = if sum > 0.0 { sum.sqrt() } else { 0.0 };
            } else if l[(j, j)] > 0.0 {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    l
}

/// Inverse of a symmetric positive definite matrix, escalating a diagonal
/// regularizer until the Cholesky factorization succeeds.
pub fn invert_spd(m: &Matrix4<f64>) -> Matrix4<f64> {
    let sym = symmetrize(m);
    let mut reg = 0.0;
    loop {
        let candidate = sym + Matrix4::identity() * reg;
        if let Some(chol) = nalgebra::Cholesky::new(candidate) {
            return chol.inverse();
        }
        reg = if reg == 0.0 { EPS_REG } else { reg * 1e3 };
        if reg > 1e3 {
            // Numerically hopeless input; an identity keeps downstream totals finite.
            return Matrix4::identity();
        }
    }
}

/// log-determinant and Mahalanobis form x' M^-1 x for an SPD matrix,
/// regularized the same way as `invert_spd`.
pub fn logdet_and_mahalanobis(m: &Matrix4<f64>, x: &Vector4<f64>) -> (f64, f64) {
    let sym = symmetrize(m);
    let mut reg = 0.0;
    loop {
        let candidate = sym + Matrix4::identity() * reg;
        if let Some(chol) = nalgebra::Cholesky::new(candidate) {
            let l = chol.l();
            let logdet = 2.0 * (0..4).map(|i| l[(i, i)].ln()).sum::<f64>();
            let y = chol.solve(x);
            return (logdet, x.dot(&y));
        }
        reg = if reg == 0.0 { EPS_REG } else { reg * 1e3 };
        if reg > 1e3 {
            return (EPS_DET.ln(), x.norm_squared() / EPS_DET);
        }
    }
}
