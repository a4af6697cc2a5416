//! Linearized ADMM for compressive principal component pursuit:
//!
//! ```text
//! min λ‖V‖_* + ‖S‖₁   s.t.  y = P_Q(U Vᵀ + S),  UᵀU = I
//! ```
//!
//! The quadratic penalty `g(T) = α/2 ‖y − P_Q(S + T) + Y/α‖²` is replaced by
//! its linearization at the current `T = U Vᵀ` plus a proximal term, which
//! turns the factor updates into a QR and an SVT step on a gradient-shifted
//! matrix. `S` is handled the same way with `h(S)`.

use crate::config::{IterRecord, SolveResult, SolverConfig, Termination};
use crate::error::{Error, Result};
use crate::linalg::{qr_thin, spectral_norm, PowerIteration};
use crate::matrix::DenseMatrix;
use crate::measure::LinearMeasurement;
use crate::prox::{check_tau, shrink, svt_with_norm};

/// Skip the relative-change test when the previous iterates are this small.
const STOP_DENOM_FLOOR: f64 = 1e-30;

/// Value of the penalty `α/2 ‖y − P(X + other) + Y/α‖²` as a function of `X`.
///
/// This is `g(T)` with `other = S`, or `h(S)` with `other = T`.
pub fn penalty_value<Op: LinearMeasurement + ?Sized>(
    op: &Op,
    x: &DenseMatrix,
    other: &DenseMatrix,
    y: &[f64],
    multiplier: &[f64],
    alpha: f64,
) -> Result<f64> {
    let r = penalty_residual(op, x, other, y, multiplier, alpha)?;
    Ok(0.5 * alpha * r.iter().map(|v| v * v).sum::<f64>())
}

/// Gradient of [`penalty_value`] in `x`: `α P⋆(P(X + other) − y − Y/α)`.
pub fn penalty_gradient<Op: LinearMeasurement + ?Sized>(
    op: &Op,
    x: &DenseMatrix,
    other: &DenseMatrix,
    y: &[f64],
    multiplier: &[f64],
    alpha: f64,
) -> Result<DenseMatrix> {
    let r = penalty_residual(op, x, other, y, multiplier, alpha)?;
    Ok(op.adjoint(&r)?.scale(alpha))
}

/// `P(X + other) − y − Y/α`.
fn penalty_residual<Op: LinearMeasurement + ?Sized>(
    op: &Op,
    x: &DenseMatrix,
    other: &DenseMatrix,
    y: &[f64],
    multiplier: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    op.check_len(y)?;
    op.check_len(multiplier)?;
    let px = op.forward(&x.add(other))?;
    Ok(px
        .iter()
        .zip(y)
        .zip(multiplier)
        .map(|((p, yv), mv)| p - yv - mv / alpha)
        .collect())
}

/// `1 / ‖P⋆ P‖₂`, estimated by power iteration.
pub fn linearization_constant<Op: LinearMeasurement + ?Sized>(op: &Op, seed: u64) -> Result<f64> {
    let shape = op.ambient_shape();
    let projection = |x: &DenseMatrix| op.project(x).expect("shape checked by caller");
    let norm = spectral_norm(
        shape,
        projection,
        PowerIteration {
            seed,
            ..PowerIteration::default()
        },
    )?;
    if norm <= 0.0 {
        return Err(Error::Argument("measurement operator is zero".into()));
    }
    Ok(1.0 / norm)
}

/// Recovers `L = U Vᵀ` and sparse `S` from `y = P_Q(L + S)`.
///
/// The returned multiplier lives in measurement space (length `p`). Each
/// trace record carries the relative change of `(UVᵀ, S)` as `stop_ratio`.
pub fn solve_cpcp<Op: LinearMeasurement + ?Sized>(
    y_meas: &[f64],
    op: &Op,
    cfg: &SolverConfig,
) -> Result<SolveResult<Vec<f64>>> {
    let warnings = cfg.validate()?;
    op.check_len(y_meas)?;
    if y_meas.is_empty() {
        return Err(Error::Argument("no measurements".into()));
    }
    if y_meas.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("measurements"));
    }
    let (m, n) = op.ambient_shape();
    if cfg.rank > m.min(n) {
        return Err(Error::Argument(format!(
            "rank bound d = {} exceeds min(m, n) = {}",
            cfg.rank,
            m.min(n)
        )));
    }
    let p = y_meas.len();

    let mut u = DenseMatrix::eye(m, cfg.rank);
    let mut v = DenseMatrix::zeros(n, cfg.rank);
    let mut s = DenseMatrix::zeros(m, n);
    let mut t = DenseMatrix::zeros(m, n);
    let mut mult = vec![0.0; p];

    let y_norm = y_meas.iter().map(|v| v * v).sum::<f64>().sqrt();
    if y_norm == 0.0 {
        return Ok(SolveResult {
            u,
            v,
            s,
            multiplier: mult,
            trace: Vec::new(),
            termination: Termination::Converged,
            rank_reduction: None,
            warnings,
        });
    }

    let lambda = cfg.resolve_lambda(m, n);
    let tau = linearization_constant(op, cfg.seed)?;
    let mut alpha = cfg.alpha0.resolve(1.0 / y_norm);
    let mut trace = Vec::new();
    let mut termination = Termination::MaxIterReached;

    for k in 1..=cfg.max_iter {
        // The gradient of g carries a factor α and has Lipschitz constant
        // α/τ, so the linearized step length is τ/α and both prox levels
        // scale the same way.
        let step = tau / alpha;

        let grad_t = penalty_gradient(op, &t, &s, y_meas, &mult, alpha)?;
        let w = t.zip_map(&grad_t, |a, g| a - step * g);
        u = qr_thin(&w.matmul(&v))?.q;
        let wt_u = w.tr_matmul(&u);
        let (new_v, v_nuclear) = svt_with_norm(&wt_u, lambda * step)?;
        v = new_v;
        let t_new = u.matmul_tr(&v);

        let grad_s = penalty_gradient(op, &s, &t_new, y_meas, &mult, alpha)?;
        check_tau(step)?;
        let s_new = s.zip_map(&grad_s, |a, g| shrink(a - step * g, step));

        let fitted = op.forward(&t_new.add(&s_new))?;
        let mut feas_sq = 0.0;
        for ((mv, &yv), &fv) in mult.iter_mut().zip(y_meas).zip(&fitted) {
            let gap = yv - fv;
            feas_sq += gap * gap;
            *mv += alpha * gap;
        }

        let denom = t.frobenius_norm_sq() + s.frobenius_norm_sq();
        let ratio = (k > 1 && denom >= STOP_DENOM_FLOOR).then(|| {
            (t_new.sub(&t).frobenius_norm_sq() + s_new.sub(&s).frobenius_norm_sq()) / denom
        });

        trace.push(IterRecord {
            iter: k,
            residual: feas_sq.sqrt(),
            objective: s_new.l1_norm() + lambda * v_nuclear,
            alpha,
            rank: v.cols(),
            stop_ratio: ratio,
        });

        t = t_new;
        s = s_new;
        alpha = (cfg.rho * alpha).min(cfg.alpha_max);

        if !feas_sq.is_finite() {
            return Err(Error::NonFinite("solver iterate"));
        }
        if ratio.is_some_and(|r| r < cfg.tol) {
            termination = Termination::Converged;
            break;
        }
    }

    Ok(SolveResult {
        u,
        v,
        s,
        multiplier: mult,
        trace,
        termination,
        rank_reduction: None,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{draw_random_subspace, ObservationMask};

    #[test]
    fn zero_measurements_give_zero_solution() {
        let q = draw_random_subspace(6, 5, 20, 1).unwrap();
        let r = solve_cpcp(&[0.0; 20], &q, &SolverConfig::cpcp_default().with_rank(2)).unwrap();
        assert_eq!(r.low_rank().max_abs(), 0.0);
        assert_eq!(r.s.max_abs(), 0.0);
    }

    #[test]
    fn rejects_length_mismatch_and_non_finite() {
        let q = draw_random_subspace(4, 4, 8, 1).unwrap();
        let cfg = SolverConfig::cpcp_default().with_rank(2);
        assert!(matches!(solve_cpcp(&[1.0; 7], &q, &cfg), Err(Error::Dimension(_))));
        let mut y = vec![1.0; 8];
        y[3] = f64::NAN;
        assert!(matches!(solve_cpcp(&y, &q, &cfg), Err(Error::NonFinite(_))));
    }

    #[test]
    fn orthonormal_operators_have_unit_constant() {
        let q = draw_random_subspace(5, 4, 11, 3).unwrap();
        assert!((linearization_constant(&q, 0).unwrap() - 1.0).abs() <= 1e-6);
        let mask = ObservationMask::new(3, 3, vec![(0, 0), (2, 1)]).unwrap();
        assert!((linearization_constant(&mask, 0).unwrap() - 1.0).abs() <= 1e-6);
    }
}
