#![allow(dead_code)]

use lowrank::linalg::svd_thin;
use lowrank::measure::mask_project;
use lowrank::prox::{shrink, svt_with_norm};
use lowrank::{DenseMatrix, ObservationMask};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vec(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn random_mask(rows: usize, cols: usize, frac: f64, seed: u64) -> ObservationMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ObservationMask::from_marker(rows, cols, (0..rows * cols).map(|_| rng.random_bool(frac)).collect())
}

pub fn orthonormality_defect(q: &DenseMatrix) -> f64 {
    q.tr_matmul(q).sub(&DenseMatrix::identity(q.cols())).max_abs()
}

/// State of one iteration of the reference solver.
#[derive(Debug, Clone)]
pub struct ReferenceIterate {
    pub low_rank: DenseMatrix,
    pub v_nuclear: f64,
    pub s: DenseMatrix,
    pub y: DenseMatrix,
    /// Numerical rank of `P V` fed to the U-step.
    pub pv_rank: usize,
}

/// Robust completion with the U-step solved as an orthogonal Procrustes
/// problem: `U = W Zᵀ` from the SVD `P V = W Σ Zᵀ`. Everything else follows
/// the same block order as the library solver. `P V = 0` gives `eye(m, d)`.
pub fn polar_reference(
    d_obs: &DenseMatrix,
    mask: &ObservationMask,
    d: usize,
    lambda: f64,
    alpha0: f64,
    rho: f64,
    iterations: usize,
) -> Vec<ReferenceIterate> {
    let (m, n) = d_obs.shape();
    let dm = mask_project(d_obs, mask).unwrap();
    let mut v = DenseMatrix::zeros(n, d);
    let mut s = DenseMatrix::zeros(m, n);
    let mut y = DenseMatrix::zeros(m, n);
    let mut alpha = alpha0;
    let mut out = Vec::new();
    for _ in 0..iterations {
        let p = DenseMatrix::from_fn(m, n, |i, j| dm[(i, j)] - s[(i, j)] + y[(i, j)] / alpha);
        let pv = p.matmul(&v);
        let f = svd_thin(&pv).unwrap();
        let pv_rank = f.rank();
        let u = if pv_rank == 0 {
            DenseMatrix::eye(m, d)
        } else {
            assert_eq!(pv_rank, d, "Procrustes step needs P V of full column rank");
            f.u.matmul_tr(&f.v)
        };
        let (new_v, v_nuclear) = svt_with_norm(&p.tr_matmul(&u), lambda / alpha).unwrap();
        v = new_v;
        let lr = u.matmul_tr(&v);
        for i in 0..m {
            for j in 0..n {
                let z = dm[(i, j)] - lr[(i, j)] + y[(i, j)] / alpha;
                s[(i, j)] = if mask.contains(i, j) { shrink(z, 1.0 / alpha) } else { z };
                y[(i, j)] += alpha * (dm[(i, j)] - lr[(i, j)] - s[(i, j)]);
            }
        }
        out.push(ReferenceIterate {
            low_rank: lr,
            v_nuclear,
            s: s.clone(),
            y: y.clone(),
            pv_rank,
        });
        alpha *= rho;
    }
    out
}

/// Solves `(G + μ I) X = R` for symmetric positive definite `G`, `X` being
/// returned with the shape of `R`, by Gaussian elimination with partial pivoting.
fn ridge_solve(g: &DenseMatrix, mu: f64, r: &DenseMatrix) -> DenseMatrix {
    let k = g.rows();
    let mut a = DenseMatrix::from_fn(k, k, |i, j| g[(i, j)] + if i == j { mu } else { 0.0 });
    let mut b = r.clone();
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[(x, col)].abs().total_cmp(&a[(y, col)].abs())).unwrap();
        for j in 0..k {
            let t = a[(col, j)];
            a[(col, j)] = a[(piv, j)];
            a[(piv, j)] = t;
        }
        for j in 0..b.cols() {
            let t = b[(col, j)];
            b[(col, j)] = b[(piv, j)];
            b[(piv, j)] = t;
        }
        for i in col + 1..k {
            let f = a[(i, col)] / a[(col, col)];
            for j in col..k {
                a[(i, j)] -= f * a[(col, j)];
            }
            for j in 0..b.cols() {
                b[(i, j)] -= f * b[(col, j)];
            }
        }
    }
    for col in (0..k).rev() {
        for j in 0..b.cols() {
            let mut acc = b[(col, j)];
            for t in col + 1..k {
                acc -= a[(col, t)] * b[(t, j)];
            }
            b[(col, j)] = acc / a[(col, col)];
        }
    }
    b
}

/// Minimizes `½‖A Bᵀ − M‖² + μ/2 (‖A‖² + ‖B‖²)` over `A`, `B` with
/// `min(m, n)` columns by alternating ridge regressions. The minimum equals
/// `min_X ½‖X − M‖² + μ‖X‖_*`, and every iterate's value bounds it from
/// above. Returns the product and the factored objective.
pub fn nuclear_prox_by_factored_ridge(m: &DenseMatrix, mu: f64, tol: f64) -> (DenseMatrix, f64) {
    let k = m.rows().min(m.cols());
    let mut a = gaussian(m.rows(), k, 99);
    let mut b = gaussian(m.cols(), k, 100);
    let value = |a: &DenseMatrix, b: &DenseMatrix| {
        0.5 * a.matmul_tr(b).sub(m).frobenius_norm_sq()
            + 0.5 * mu * (a.frobenius_norm_sq() + b.frobenius_norm_sq())
    };
    let mut prev = value(&a, &b);
    for _ in 0..200_000 {
        // A = M B (BᵀB + μI)⁻¹, B = Mᵀ A (AᵀA + μI)⁻¹
        a = ridge_solve(&b.tr_matmul(&b), mu, &b.tr_matmul(&m.transpose())).transpose();
        b = ridge_solve(&a.tr_matmul(&a), mu, &a.tr_matmul(m)).transpose();
        let f = value(&a, &b);
        if prev - f <= tol * (1.0 + f) {
            prev = f;
            break;
        }
        prev = f;
    }
    (a.matmul_tr(&b), prev)
}

pub fn svt_objective(x: &DenseMatrix, m: &DenseMatrix, mu: f64) -> f64 {
    let nuc: f64 = svd_thin(x).unwrap().sigma.iter().sum();
    0.5 * x.sub(m).frobenius_norm_sq() + mu * nuc
}
