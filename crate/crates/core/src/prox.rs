//! Proximal operators of the trace norm and the entrywise ℓ1 norm.

use crate::error::{Error, Result};
use crate::linalg::svd_thin;
use crate::matrix::DenseMatrix;

/// Singular value thresholding: `U diag(max(σ − μ, 0)) Vᵀ`.
///
/// This is the minimizer of `½‖X − M‖²_F + μ‖X‖_*`. Singular values equal
/// to `mu` are dropped. The solvers only call this on the small `n x d`
/// factor-side matrix.
pub fn svt(m: &DenseMatrix, mu: f64) -> Result<DenseMatrix> {
    svt_with_norm(m, mu).map(|(x, _)| x)
}

/// [`svt`] together with the trace norm of its output, `Σ max(σ − μ, 0)`.
pub fn svt_with_norm(m: &DenseMatrix, mu: f64) -> Result<(DenseMatrix, f64)> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::Argument(format!(
            "SVT threshold must be finite and nonnegative, got {mu}"
        )));
    }
    let svd = svd_thin(m)?;
    let kept = svd.sigma.iter().take_while(|&&s| s > mu).count();
    let us = DenseMatrix::from_fn(m.rows(), kept, |i, k| svd.u[(i, k)] * (svd.sigma[k] - mu));
    let v = svd.v.leading_columns(kept);
    let norm = svd.sigma[..kept].iter().map(|s| s - mu).sum();
    Ok((us.matmul_tr(&v), norm))
}

/// Scalar soft-thresholding, the prox of `tau * |x|`.
#[inline]
pub fn shrink(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Entrywise soft-thresholding.
pub fn soft_threshold(a: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    check_tau(tau)?;
    Ok(a.map(|x| shrink(x, tau)))
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Argument(format!(
            "soft-threshold level must be finite and nonnegative, got {tau}"
        )));
    }
    Ok(())
}
