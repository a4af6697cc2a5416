//! Dense kernels the solvers are built from: thin Householder QR, thin SVD
//! by one-sided Jacobi rotations, a symmetric Jacobi eigensolver, and power
//! iteration for the spectral norm of a PSD operator.
//!
//! All routines are deterministic functions of their input.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{dot, DenseMatrix};

/// Singular values at or below `RANK_CUTOFF * sigma_max` are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 80;

/// Thin QR factors of an `m x d` matrix.
#[derive(Debug, Clone)]
pub struct QrFactors {
    /// `m x d`, orthonormal columns.
    pub q: DenseMatrix,
    /// `d x d`, upper triangular with a nonnegative diagonal.
    pub r: DenseMatrix,
}

/// Thin SVD `a = u * diag(sigma) * vᵀ` truncated to the numerical rank.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Rebuilds `u * diag(sigma) * vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let us = DenseMatrix::from_fn(self.u.rows(), self.rank(), |i, k| {
            self.u[(i, k)] * self.sigma[k]
        });
        us.matmul_tr(&self.v)
    }
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues nonincreasing.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns, in the order of `values`.
    pub vectors: DenseMatrix,
}

/// Householder QR of a tall matrix (`rows >= cols`).
///
/// The sign convention makes the diagonal of `r` nonnegative, so `q` is
/// unique when `a` has full column rank. Columns that are dependent only up
/// to round-off are not deflated: their residue is normalized as in any
/// Householder QR. Exactly zero residues fall back to the identity
/// completion, so `qr_thin(0)` gives `q = eye(m, d)`.
pub fn qr_thin(a: &DenseMatrix) -> Result<QrFactors> {
    let (m, d) = a.shape();
    if m < d {
        return Err(Error::Dimension(format!(
            "thin QR needs rows >= cols, got {m}x{d}"
        )));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("QR input"));
    }

    // Work column by column so reflector updates touch contiguous memory.
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| a.column(j)).collect();
    // Reflector j acts on rows j.. ; `None` means the identity.
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(d);

    for j in 0..d {
        let x = &cols[j][j..];
        let norm = dot(x, x).sqrt();
        if norm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vv = dot(&v, &v);
        if vv == 0.0 {
            reflectors.push(None);
            continue;
        }
        for col in cols.iter_mut().skip(j + 1) {
            reflect(&v, vv, &mut col[j..]);
        }
        cols[j][j] = alpha;
        cols[j][j + 1..].fill(0.0);
        reflectors.push(Some(v));
    }

    let mut r = DenseMatrix::from_fn(d, d, |i, j| if i <= j { cols[j][i] } else { 0.0 });
    let mut q_cols: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();
    for (j, refl) in reflectors.iter().enumerate().rev() {
        let Some(v) = refl else { continue };
        let vv = dot(v, v);
        for col in q_cols.iter_mut() {
            reflect(v, vv, &mut col[j..]);
        }
    }

    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for c in j..d {
                r[(j, c)] = -r[(j, c)];
            }
            q_cols[j].iter_mut().for_each(|x| *x = -*x);
        }
    }
    let q = DenseMatrix::from_fn(m, d, |i, j| q_cols[j][i]);

    Ok(QrFactors { q, r })
}

/// Applies `I − 2 v vᵀ / (vᵀv)` to `x` in place.
fn reflect(v: &[f64], vv: f64, x: &mut [f64]) {
    let proj = dot(v, x);
    if proj == 0.0 {
        return;
    }
    let f = 2.0 * proj / vv;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= f * vi;
    }
}

/// Thin SVD truncated at the numerical rank (`sigma > RANK_CUTOFF * sigma_max`).
///
/// A zero matrix yields an empty factorization (rank 0).
pub fn svd_thin(a: &DenseMatrix) -> Result<ThinSvd> {
    if !a.is_finite() {
        return Err(Error::NonFinite("SVD input"));
    }
    if a.rows() < a.cols() {
        let t = svd_tall(&a.transpose());
        return Ok(ThinSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    Ok(svd_tall(a))
}

/// One-sided (Hestenes) Jacobi on the columns of a tall matrix.
fn svd_tall(a: &DenseMatrix) -> ThinSvd {
    let (n, d) = a.shape();
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| a.column(j)).collect();
    let mut right: Vec<Vec<f64>> = (0..d)
        .map(|j| (0..d).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..d {
            for q in p + 1..d {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut right, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..d).collect();
    // Stable sort keeps equal singular values in column order.
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let sigma_max = order.first().map_or(0.0, |&i| norms[i]);
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| sigma_max > 0.0 && norms[i] > RANK_CUTOFF * sigma_max)
        .collect();
    let r = kept.len();

    let u = DenseMatrix::from_fn(n, r, |i, k| cols[kept[k]][i] / norms[kept[k]]);
    let v = DenseMatrix::from_fn(d, r, |i, k| right[kept[k]][i]);
    let sigma = kept.iter().map(|&i| norms[i]).collect();
    ThinSvd { u, sigma, v }
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Nuclear (trace) norm: the sum of singular values.
pub fn nuclear_norm(a: &DenseMatrix) -> Result<f64> {
    Ok(svd_thin(a)?.sigma.iter().sum())
}

/// Cyclic Jacobi eigensolver for a symmetric matrix.
pub fn sym_eigen(a: &DenseMatrix) -> Result<SymEigen> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension(format!(
            "eigen-decomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("eigen-decomposition input"));
    }
    let mut w = a.clone();
    let mut vecs = DenseMatrix::identity(n);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| w[(i, j)] * w[(i, j)])
            .sum();
        let diag: f64 = (0..n).map(|i| w[(i, i)] * w[(i, i)]).sum();
        if off == 0.0 || off <= f64::EPSILON * f64::EPSILON * diag {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (wkp, wkq) = (w[(k, p)], w[(k, q)]);
                    w[(k, p)] = c * wkp - s * wkq;
                    w[(k, q)] = s * wkp + c * wkq;
                }
                for k in 0..n {
                    let (wpk, wqk) = (w[(p, k)], w[(q, k)]);
                    w[(p, k)] = c * wpk - s * wqk;
                    w[(q, k)] = s * wpk + c * wqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (vecs[(k, p)], vecs[(k, q)]);
                    vecs[(k, p)] = c * vkp - s * vkq;
                    vecs[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(j, j)].total_cmp(&w[(i, i)]));
    Ok(SymEigen {
        values: order.iter().map(|&i| w[(i, i)]).collect(),
        vectors: DenseMatrix::from_fn(n, n, |i, k| vecs[(i, order[k])]),
    })
}

/// Settings for [`spectral_norm`].
#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub max_iter: usize,
    /// Relative change in the Rayleigh quotient that ends the iteration.
    pub tol: f64,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-10,
            seed: 0x5eed,
        }
    }
}

/// Largest eigenvalue of a self-adjoint PSD operator on `rows x cols`
/// matrices, by power iteration from a seeded Gaussian start.
pub fn spectral_norm(
    shape: (usize, usize),
    op: impl Fn(&DenseMatrix) -> DenseMatrix,
    settings: PowerIteration,
) -> Result<f64> {
    let (rows, cols) = shape;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut x = DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng));
    let nx = x.frobenius_norm();
    if nx == 0.0 {
        return Ok(0.0);
    }
    x = x.scale(1.0 / nx);

    let mut estimate = f64::NAN;
    for _ in 0..settings.max_iter {
        let y = op(&x);
        if y.shape() != shape {
            return Err(Error::Dimension(format!(
                "operator maps {rows}x{cols} to {}x{}",
                y.rows(),
                y.cols()
            )));
        }
        let rayleigh = x.inner(&y);
        let ny = y.frobenius_norm();
        if !ny.is_finite() {
            return Err(Error::NonFinite("power iteration"));
        }
        if ny == 0.0 {
            return Ok(0.0);
        }
        let converged = (rayleigh - estimate).abs() <= settings.tol * rayleigh.abs();
        estimate = rayleigh;
        if converged {
            return Ok(estimate);
        }
        x = y.scale(1.0 / ny);
    }
    Err(Error::NoConvergence {
        iterations: settings.max_iter,
        estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn orthonormality_defect(q: &DenseMatrix) -> f64 {
        q.tr_matmul(q)
            .sub(&DenseMatrix::identity(q.cols()))
            .max_abs()
    }

    #[test]
    fn qr_of_identity_is_identity() {
        let f = qr_thin(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(f.q, DenseMatrix::identity(3));
        assert_eq!(f.r, DenseMatrix::identity(3));
    }

    #[test]
    fn qr_spans_input_columns() {
        let a = DenseMatrix::from_rows(&[&[3.0, 0.0], &[4.0, 0.0], &[0.0, 1.0]]);
        let f = qr_thin(&a).unwrap();
        assert!(orthonormality_defect(&f.q) <= 1e-10);
        // Projecting a onto span(q) leaves it unchanged.
        let proj = f.q.matmul(&f.q.tr_matmul(&a));
        assert!(proj.sub(&a).max_abs() <= 1e-12);
        assert!(f.r[(0, 0)] >= 0.0 && f.r[(1, 1)] >= 0.0);
    }

    #[test]
    fn qr_reconstructs_random_tall_matrix() {
        let a = random(20, 5, 7);
        let f = qr_thin(&a).unwrap();
        let err = f.q.matmul(&f.r).sub(&a).frobenius_norm() / a.frobenius_norm();
        assert!(err <= 1e-10, "reconstruction error {err}");
        assert!(orthonormality_defect(&f.q) <= 1e-10);
        for i in 0..5 {
            for j in 0..i {
                assert_eq!(f.r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn qr_rejects_wide_input() {
        assert!(matches!(
            qr_thin(&DenseMatrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn qr_of_zero_matrix_is_orthonormal() {
        let f = qr_thin(&DenseMatrix::zeros(6, 3)).unwrap();
        assert_eq!(f.q, DenseMatrix::eye(6, 3));
        assert_eq!(f.r, DenseMatrix::zeros(3, 3));
    }

    #[test]
    fn qr_rank_deficient_still_orthonormal() {
        let b = random(10, 2, 3);
        let c = random(2, 4, 4);
        let a = b.matmul(&c);
        let f = qr_thin(&a).unwrap();
        assert!(orthonormality_defect(&f.q) <= 1e-10);
        assert!(f.q.matmul(&f.r).sub(&a).frobenius_norm() <= 1e-8 * a.frobenius_norm());
    }

    #[test]
    fn svd_of_diagonal() {
        let s = svd_thin(&DenseMatrix::diag(&[3.0, 1.0])).unwrap();
        assert_eq!(s.sigma, vec![3.0, 1.0]);
    }

    #[test]
    fn svd_of_zero_is_empty() {
        let s = svd_thin(&DenseMatrix::zeros(4, 3)).unwrap();
        assert_eq!(s.rank(), 0);
        assert_eq!(s.u.shape(), (4, 0));
        assert_eq!(s.v.shape(), (3, 0));
        assert_eq!(s.reconstruct(), DenseMatrix::zeros(4, 3));
    }

    #[test]
    fn svd_counts_rank_of_product() {
        let a = random(10, 3, 11).matmul_tr(&random(6, 3, 12));
        let s = svd_thin(&a).unwrap();
        assert_eq!(s.rank(), 3);
        let err = s.reconstruct().sub(&a).frobenius_norm() / a.frobenius_norm().max(1.0);
        assert!(err <= 1e-8);
    }

    #[test]
    fn svd_wide_and_tall_agree() {
        let a = random(4, 9, 5);
        let s = svd_thin(&a).unwrap();
        let st = svd_thin(&a.transpose()).unwrap();
        for (x, y) in s.sigma.iter().zip(&st.sigma) {
            assert!((x - y).abs() <= 1e-12 * x.max(1.0));
        }
        assert!(s.reconstruct().sub(&a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn svd_is_deterministic() {
        let a = random(12, 5, 99);
        let s1 = svd_thin(&a).unwrap();
        let s2 = svd_thin(&a).unwrap();
        assert_eq!(s1.sigma, s2.sigma);
        assert_eq!(s1.u, s2.u);
        assert_eq!(s1.v, s2.v);
    }

    #[test]
    fn eigen_matches_gram_singular_values() {
        let v = random(15, 4, 21);
        let gram = v.tr_matmul(&v);
        let e = sym_eigen(&gram).unwrap();
        let s = svd_thin(&v).unwrap();
        for (lam, sig) in e.values.iter().zip(&s.sigma) {
            assert!((lam - sig * sig).abs() <= 1e-10 * lam.max(1.0));
        }
        let recon = e
            .vectors
            .matmul(&DenseMatrix::diag(&e.values))
            .matmul_tr(&e.vectors);
        assert!(recon.sub(&gram).max_abs() <= 1e-10 * gram.max_abs());
    }

    #[test]
    fn power_iteration_known_operators() {
        let settings = PowerIteration::default();
        let id = spectral_norm((3, 4), |x| x.clone(), settings).unwrap();
        assert!((id - 1.0).abs() <= 1e-12);

        // Zero out the last column: an orthogonal projection.
        let proj = |x: &DenseMatrix| DenseMatrix::from_fn(3, 4, |i, j| if j < 3 { x[(i, j)] } else { 0.0 });
        let p = spectral_norm((3, 4), proj, settings).unwrap();
        assert!((p - 1.0).abs() <= 1e-6);
        let p2 = spectral_norm((3, 4), |x| proj(x).scale(2.0), settings).unwrap();
        assert!((p2 - 2.0).abs() <= 2e-6);
    }

    #[test]
    fn power_iteration_gram_matrix() {
        let a = random(6, 6, 31);
        let s = svd_thin(&a).unwrap();
        let expect = s.sigma[0] * s.sigma[0];
        // x -> aᵀ a x acting on 6x1 column vectors.
        let got = spectral_norm((6, 1), |x| a.tr_matmul(&a.matmul(x)), PowerIteration::default())
            .unwrap();
        assert!((got - expect).abs() <= 1e-6 * expect);
    }

    #[test]
    fn power_iteration_reports_non_convergence() {
        let a = random(30, 30, 8);
        let err = spectral_norm(
            (30, 1),
            |x| a.tr_matmul(&a.matmul(x)),
            PowerIteration {
                max_iter: 2,
                tol: 1e-15,
                seed: 1,
            },
        )
        .unwrap_err();
        match err {
            Error::NoConvergence { iterations, estimate } => {
                assert_eq!(iterations, 2);
                assert!(estimate > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
