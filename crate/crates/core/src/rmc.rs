//! ADMM for robust matrix completion on an orthogonal bilinear factorization.
//!
//! The low-rank part is parameterized as `L = U Vᵀ` with `UᵀU = I`, so the
//! trace norm moves onto the small factor: `‖U Vᵀ‖_* = ‖V‖_*`. Each
//! iteration solves
//!
//! ```text
//! min ‖P_Ω(S)‖₁ + λ‖V‖_*   s.t.  D = U Vᵀ + S,  UᵀU = I
//! ```
//!
//! block by block: `U` from a thin QR of `P V`, `V` by singular value
//! thresholding of the `n x d` matrix `Pᵀ U`, `S` by soft-thresholding on Ω
//! and exact fitting off Ω, then a dual ascent step on `Y` and geometric
//! growth of the penalty `α`.
//!
//! [`solve_mc`] runs the same factor updates on the least-squares matrix
//! completion model with an auxiliary variable `L = U Vᵀ`.

use crate::config::{IterRecord, RankReduction, SolveResult, SolverConfig, Termination};
use crate::error::{Error, Result};
use crate::linalg::{qr_thin, sym_eigen, RANK_CUTOFF};
use crate::matrix::DenseMatrix;
use crate::measure::{mask_project, ObservationMask};
use crate::prox::{shrink, svt_with_norm};

/// The rank reduction fires when the dominant eigenvalue quotient is at
/// least this many times the mean of the others.
pub const RANK_GAP_THRESHOLD: f64 = 10.0;

/// Absolute floor on eigenvalues of `VᵀV` before forming quotients.
const EIGEN_FLOOR: f64 = 1e-300;

/// Eigenvalues below this fraction of the largest are round-off; they are
/// lifted to it so the noise tail contributes quotients of one.
const EIGEN_RELATIVE_FLOOR: f64 = RANK_CUTOFF * RANK_CUTOFF;

/// The rank check starts on this (1-based) iteration.
pub const RANK_CHECK_START: usize = 3;

/// The rank check also waits until the relative feasibility residual is
/// below `max(RANK_CHECK_LEVEL, tol)`. Earlier on, `V` is still gaining
/// rank one direction at a time and every partial rank looks like a jump.
pub const RANK_CHECK_LEVEL: f64 = 1e-2;

/// The same reduced rank must pass the gap test on this many consecutive
/// iterations before it is applied. A small residual alone is not enough:
/// `V = 0` with `S` soaking up the data is also nearly feasible.
pub const RANK_CHECK_STREAK: usize = 3;

/// Outcome of evaluating the spectral gap of `VᵀV`.
#[derive(Debug, Clone)]
pub struct RankAdjustment {
    /// The reduced rank, or the current rank when no jump was detected.
    pub new_d: usize,
    pub gap: f64,
    /// Eigenvalues of `VᵀV`, nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors of `VᵀV` as columns, matching `eigenvalues`.
    pub rotation: DenseMatrix,
}

impl RankAdjustment {
    pub fn reduces(&self, current_d: usize) -> bool {
        self.new_d < current_d
    }
}

/// Looks for a large jump in the spectrum of `VᵀV`.
///
/// With eigenvalues `λ₁ ≥ … ≥ λ_d` and quotients `q_i = λ_i / λ_{i+1}`, the
/// candidate rank is `r = argmax q_i` and the jump is accepted when
/// `(d − 1) q_r / Σ_{i≠r} q_i ≥ 10`.
pub fn adjust_rank_once(v: &DenseMatrix, current_d: usize) -> Result<RankAdjustment> {
    let d = v.cols();
    let eig = sym_eigen(&v.tr_matmul(v))?;
    let eigenvalues: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let unchanged = |gap| RankAdjustment {
        new_d: current_d,
        gap,
        eigenvalues: eigenvalues.clone(),
        rotation: eig.vectors.clone(),
    };
    if d < 2 {
        return Ok(unchanged(0.0));
    }

    let floor = (eigenvalues[0] * EIGEN_RELATIVE_FLOOR).max(EIGEN_FLOOR);
    let quotients: Vec<f64> = eigenvalues
        .windows(2)
        .map(|w| w[0].max(floor) / w[1].max(floor))
        .collect();
    let (best, &peak) = quotients
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, &f64)>, (i, q)| match acc {
            Some((_, b)) if *b >= *q => acc,
            _ => Some((i, q)),
        })
        .expect("d >= 2");
    let rest: f64 = quotients
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, q)| q)
        .sum();
    let numer = (d - 1) as f64 * peak;
    let gap = if rest > 0.0 {
        numer / rest
    } else if numer > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };

    if gap >= RANK_GAP_THRESHOLD {
        Ok(RankAdjustment {
            new_d: best + 1,
            ..unchanged(gap)
        })
    } else {
        Ok(unchanged(gap))
    }
}

/// Borrowed view of the iterates handed to an observer after each iteration.
#[derive(Debug, Clone, Copy)]
pub struct IterateView<'a> {
    /// 1-based iteration number.
    pub iter: usize,
    pub u: &'a DenseMatrix,
    pub v: &'a DenseMatrix,
    /// The in-loop sparse iterate, including its values off Ω.
    pub s: &'a DenseMatrix,
    pub y: &'a DenseMatrix,
    /// Penalty used during this iteration.
    pub alpha: f64,
    /// Trace norm of `v` before any rank reduction in this iteration.
    pub v_nuclear: f64,
}

/// Robust matrix completion: recovers `L = U Vᵀ` and sparse `S` from the
/// entries of `D = L + S` on Ω. Entries of `d_obs` outside Ω are ignored.
pub fn solve_rmc(
    d_obs: &DenseMatrix,
    mask: &ObservationMask,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    solve_rmc_observed(d_obs, mask, cfg, |_| {})
}

/// Robust PCA: [`solve_rmc`] with every entry observed.
pub fn solve_rpca(d_obs: &DenseMatrix, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_rmc(d_obs, &ObservationMask::full(d_obs.rows(), d_obs.cols()), cfg)
}

fn check_problem(d_obs: &DenseMatrix, mask: &ObservationMask, cfg: &SolverConfig) -> Result<Vec<String>> {
    let warnings = cfg.validate()?;
    if d_obs.shape() != mask.shape() {
        return Err(Error::Dimension(format!(
            "data is {}x{}, mask is {}x{}",
            d_obs.rows(),
            d_obs.cols(),
            mask.rows(),
            mask.cols()
        )));
    }
    if mask.is_empty() {
        return Err(Error::Argument("observation mask is empty".into()));
    }
    if !d_obs.is_finite() {
        return Err(Error::NonFinite("observed data"));
    }
    let (m, n) = d_obs.shape();
    if cfg.rank > m.min(n) {
        return Err(Error::Argument(format!(
            "rank bound d = {} exceeds min(m, n) = {}",
            cfg.rank,
            m.min(n)
        )));
    }
    Ok(warnings)
}

/// U- and V-updates shared by all matrix-space solvers.
///
/// Returns the trace norm of the new `V`.
fn update_factors(
    p: &DenseMatrix,
    u: &mut DenseMatrix,
    v: &mut DenseMatrix,
    threshold: f64,
) -> Result<f64> {
    *u = qr_thin(&p.matmul(v))?.q;
    let pt_u = p.tr_matmul(u);
    debug_assert!(pt_u.cols() <= pt_u.rows().min(u.cols()));
    let (new_v, nuclear) = svt_with_norm(&pt_u, threshold)?;
    *v = new_v;
    Ok(nuclear)
}

/// Tracks whether the one-shot rank reduction has happened.
struct RankController {
    enabled: bool,
    /// Absolute residual below which the check is armed.
    level: f64,
    /// Candidate rank and how many consecutive checks have proposed it.
    streak: Option<(usize, usize)>,
    done: Option<RankReduction>,
}

impl RankController {
    fn new(cfg: &SolverConfig, data_norm: f64) -> Self {
        Self {
            enabled: cfg.adjust_rank,
            level: RANK_CHECK_LEVEL.max(cfg.tol) * data_norm,
            streak: None,
            done: None,
        }
    }

    fn maybe_apply(
        &mut self,
        iter: usize,
        residual: f64,
        u: &mut DenseMatrix,
        v: &mut DenseMatrix,
    ) -> Result<()> {
        let d = v.cols();
        if !self.enabled || self.done.is_some() || iter < RANK_CHECK_START || d < 2 {
            return Ok(());
        }
        if residual >= self.level {
            self.streak = None;
            return Ok(());
        }
        let adj = adjust_rank_once(v, d)?;
        if !adj.reduces(d) {
            self.streak = None;
            return Ok(());
        }
        let count = match self.streak {
            Some((r, c)) if r == adj.new_d => c + 1,
            _ => 1,
        };
        self.streak = Some((adj.new_d, count));
        if count >= RANK_CHECK_STREAK {
            let keep = adj.rotation.leading_columns(adj.new_d);
            *u = u.matmul(&keep);
            *v = v.matmul(&keep);
            self.done = Some(RankReduction {
                iter,
                from: d,
                to: adj.new_d,
                gap: adj.gap,
            });
        }
        Ok(())
    }
}

fn zero_result(m: usize, n: usize, d: usize, warnings: Vec<String>) -> SolveResult {
    SolveResult {
        u: DenseMatrix::eye(m, d),
        v: DenseMatrix::zeros(n, d),
        s: DenseMatrix::zeros(m, n),
        multiplier: DenseMatrix::zeros(m, n),
        trace: Vec::new(),
        termination: Termination::Converged,
        rank_reduction: None,
        warnings,
    }
}

/// [`solve_rmc`] with a callback invoked after every iteration.
pub fn solve_rmc_observed(
    d_obs: &DenseMatrix,
    mask: &ObservationMask,
    cfg: &SolverConfig,
    mut observer: impl FnMut(&IterateView<'_>),
) -> Result<SolveResult> {
    let warnings = check_problem(d_obs, mask, cfg)?;
    let (m, n) = d_obs.shape();
    let d_mat = mask_project(d_obs, mask)?;
    let data_norm = d_mat.frobenius_norm();
    if data_norm == 0.0 {
        return Ok(zero_result(m, n, cfg.rank, warnings));
    }

    let lambda = cfg.resolve_lambda(m, n);
    let mut alpha = cfg.alpha0.resolve(1.0 / data_norm);
    let stop_level = cfg.tol * data_norm;

    let mut u = DenseMatrix::eye(m, cfg.rank);
    let mut v = DenseMatrix::zeros(n, cfg.rank);
    let mut s = DenseMatrix::zeros(m, n);
    let mut y = DenseMatrix::zeros(m, n);
    let mut ranks = RankController::new(cfg, data_norm);
    let mut trace = Vec::new();
    let mut termination = Termination::MaxIterReached;
    let observed = mask.marker();

    for k in 1..=cfg.max_iter {
        // P_k = D − S_k + Y_k / α_k
        let p = d_mat.zip_map(&s, |a, b| a - b).zip_map(&y, |a, b| a + b / alpha);
        let v_nuclear = update_factors(&p, &mut u, &mut v, lambda / alpha)?;
        let residual_ls = d_mat.sub(&u.matmul_tr(&v));

        // S on Ω: shrink(D − UVᵀ + Y/α, 1/α); off Ω: D − UVᵀ + Y/α exactly.
        let tau = 1.0 / alpha;
        let mut l1 = 0.0;
        for (idx, (sv, (&r, &yv))) in s
            .as_mut_slice()
            .iter_mut()
            .zip(residual_ls.as_slice().iter().zip(y.as_slice()))
            .enumerate()
        {
            let z = r + yv / alpha;
            if observed[idx] {
                *sv = shrink(z, tau);
                l1 += sv.abs();
            } else {
                *sv = z;
            }
        }

        // Y ← Y + α (D − UVᵀ − S)
        let mut feas_sq = 0.0;
        for ((yv, &r), &sv) in y
            .as_mut_slice()
            .iter_mut()
            .zip(residual_ls.as_slice())
            .zip(s.as_slice())
        {
            let gap = r - sv;
            feas_sq += gap * gap;
            *yv += alpha * gap;
        }
        let residual = feas_sq.sqrt();

        trace.push(IterRecord {
            iter: k,
            residual,
            objective: l1 + lambda * v_nuclear,
            alpha,
            rank: v.cols(),
            stop_ratio: None,
        });
        observer(&IterateView {
            iter: k,
            u: &u,
            v: &v,
            s: &s,
            y: &y,
            alpha,
            v_nuclear,
        });

        alpha = (cfg.rho * alpha).min(cfg.alpha_max);
        ranks.maybe_apply(k, residual, &mut u, &mut v)?;

        if !residual.is_finite() {
            return Err(Error::NonFinite("solver iterate"));
        }
        if residual < stop_level {
            termination = Termination::Converged;
            break;
        }
    }

    // The sparse estimate is only meaningful on Ω.
    let s = mask_project(&s, mask)?;
    Ok(SolveResult {
        u,
        v,
        s,
        multiplier: y,
        trace,
        termination,
        rank_reduction: ranks.done,
        warnings,
    })
}

/// Low-rank matrix completion with a least-squares data term:
///
/// ```text
/// min ½‖P_Ω(D) − P_Ω(L)‖²_F + λ‖V‖_*   s.t.  L = U Vᵀ,  UᵀU = I
/// ```
///
/// The returned `s` is zero and `multiplier` is the multiplier on `L = UVᵀ`.
/// The trace residual is `‖L − UVᵀ‖_F` and the objective is the value of the
/// model above at the current iterate.
pub fn solve_mc(d_obs: &DenseMatrix, mask: &ObservationMask, cfg: &SolverConfig) -> Result<SolveResult> {
    let warnings = check_problem(d_obs, mask, cfg)?;
    let (m, n) = d_obs.shape();
    let d_mat = mask_project(d_obs, mask)?;
    let data_norm = d_mat.frobenius_norm();
    if data_norm == 0.0 {
        return Ok(zero_result(m, n, cfg.rank, warnings));
    }

    let lambda = cfg.resolve_lambda(m, n);
    let mut alpha = cfg.alpha0.resolve(1.0 / data_norm);
    let stop_level = cfg.tol * data_norm;

    let mut u = DenseMatrix::eye(m, cfg.rank);
    let mut v = DenseMatrix::zeros(n, cfg.rank);
    let mut l = d_mat.clone();
    let mut y = DenseMatrix::zeros(m, n);
    let mut prev_lr: Option<DenseMatrix> = None;
    let mut ranks = RankController::new(cfg, data_norm);
    let mut trace = Vec::new();
    let mut termination = Termination::MaxIterReached;
    let observed = mask.marker();

    for k in 1..=cfg.max_iter {
        let p = l.zip_map(&y, |a, b| a + b / alpha);
        let v_nuclear = update_factors(&p, &mut u, &mut v, lambda / alpha)?;
        let lr = u.matmul_tr(&v);

        // L on Ω balances the data fit against the coupling; off Ω it
        // tracks UVᵀ − Y/α.
        let mut fit_sq = 0.0;
        for (idx, (lv, ((&t, &yv), &dv))) in l
            .as_mut_slice()
            .iter_mut()
            .zip(lr.as_slice().iter().zip(y.as_slice()).zip(d_mat.as_slice()))
            .enumerate()
        {
            let target = t - yv / alpha;
            if observed[idx] {
                *lv = (dv + alpha * target) / (1.0 + alpha);
                fit_sq += (dv - *lv) * (dv - *lv);
            } else {
                *lv = target;
            }
        }

        let mut feas_sq = 0.0;
        for ((yv, &lv), &t) in y.as_mut_slice().iter_mut().zip(l.as_slice()).zip(lr.as_slice()) {
            let gap = lv - t;
            feas_sq += gap * gap;
            *yv += alpha * gap;
        }
        let residual = feas_sq.sqrt();

        let change = prev_lr.as_ref().and_then(|prev| {
            let denom = prev.frobenius_norm();
            (denom > 0.0).then(|| lr.sub(prev).frobenius_norm() / denom)
        });

        trace.push(IterRecord {
            iter: k,
            residual,
            objective: 0.5 * fit_sq + lambda * v_nuclear,
            alpha,
            rank: v.cols(),
            stop_ratio: change,
        });

        alpha = (cfg.rho * alpha).min(cfg.alpha_max);
        ranks.maybe_apply(k, residual, &mut u, &mut v)?;

        if !residual.is_finite() {
            return Err(Error::NonFinite("solver iterate"));
        }
        let stalled = change.is_some_and(|c| c < cfg.tol);
        if residual < stop_level || stalled {
            termination = Termination::Converged;
            break;
        }
        prev_lr = Some(lr);
    }

    Ok(SolveResult {
        u,
        v,
        s: DenseMatrix::zeros(m, n),
        multiplier: y,
        trace,
        termination,
        rank_reduction: ranks.done,
        warnings,
    })
}
