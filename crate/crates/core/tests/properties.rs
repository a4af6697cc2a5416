mod common;

use lowrank::linalg::{qr_thin, svd_thin, RANK_CUTOFF};
use lowrank::measure::{draw_random_subspace, mask_project, subspace_adjoint, subspace_forward};
use lowrank::metrics::auc;
use lowrank::prox::{shrink, soft_threshold, svt};
use lowrank::{DenseMatrix, LinearMeasurement, ObservationMask, SubspaceOperator};
use proptest::prelude::*;

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0..10.0f64, r * c).prop_map(move |d| DenseMatrix::new(r, c, d).unwrap())
    })
}

fn tall_matrix() -> impl Strategy<Value = DenseMatrix> {
    (1..=5usize, 0..=4usize).prop_flat_map(|(c, extra)| {
        let r = c + extra;
        prop::collection::vec(-10.0..10.0f64, r * c).prop_map(move |d| DenseMatrix::new(r, c, d).unwrap())
    })
}

fn pair_same_shape() -> impl Strategy<Value = (DenseMatrix, DenseMatrix)> {
    (1..=6usize, 1..=6usize).prop_flat_map(|(r, c)| {
        (
            prop::collection::vec(-5.0..5.0f64, r * c),
            prop::collection::vec(-5.0..5.0f64, r * c),
        )
            .prop_map(move |(a, b)| (DenseMatrix::new(r, c, a).unwrap(), DenseMatrix::new(r, c, b).unwrap()))
    })
}

fn masked_matrix() -> impl Strategy<Value = (DenseMatrix, ObservationMask)> {
    (1..=6usize, 1..=6usize).prop_flat_map(|(r, c)| {
        (
            prop::collection::vec(-5.0..5.0f64, r * c),
            prop::collection::vec(any::<bool>(), r * c),
        )
            .prop_map(move |(a, mk)| (DenseMatrix::new(r, c, a).unwrap(), ObservationMask::from_marker(r, c, mk)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn qr_is_orthonormal_and_reconstructs(a in tall_matrix()) {
        let f = qr_thin(&a).unwrap();
        prop_assert!(common::orthonormality_defect(&f.q) <= 1e-10);
        let scale = 1.0 + a.max_abs();
        prop_assert!(f.q.matmul(&f.r).sub(&a).max_abs() <= 1e-10 * scale);
        for i in 0..f.r.rows() {
            prop_assert!(f.r[(i, i)] >= 0.0);
            for j in 0..i {
                prop_assert_eq!(f.r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn svd_reconstructs_with_sorted_values(a in matrix(6, 6)) {
        let f = svd_thin(&a).unwrap();
        prop_assert!(f.reconstruct().sub(&a).max_abs() <= 1e-9 * (1.0 + a.max_abs()));
        prop_assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(f.sigma.iter().all(|&s| s > 0.0));
        if f.rank() > 0 {
            prop_assert!(common::orthonormality_defect(&f.u) <= 1e-10);
            prop_assert!(common::orthonormality_defect(&f.v) <= 1e-10);
        }
        let fro: f64 = f.sigma.iter().map(|s| s * s).sum::<f64>().sqrt();
        prop_assert!((fro - a.frobenius_norm()).abs() <= 1e-9 * (1.0 + fro));
    }

    #[test]
    fn svt_is_nonexpansive((a, b) in pair_same_shape(), mu in 0.0..4.0f64) {
        let d = svt(&a, mu).unwrap().sub(&svt(&b, mu).unwrap()).frobenius_norm();
        prop_assert!(d <= a.sub(&b).frobenius_norm() * (1.0 + 1e-10) + 1e-10);
    }

    #[test]
    fn svt_keeps_values_above_threshold(a in matrix(6, 6), mu in 0.0..6.0f64) {
        let sigma = svd_thin(&a).unwrap().sigma;
        let out = svd_thin(&svt(&a, mu).unwrap()).unwrap();
        let expected: Vec<f64> = sigma.iter().filter(|&&s| s > mu).map(|s| s - mu).collect();
        // Survivors within the numerical-rank cutoff of zero may be dropped.
        let floor = RANK_CUTOFF * 1e3 * (1.0 + sigma.first().copied().unwrap_or(0.0));
        let significant = expected.iter().filter(|&&s| s > floor).count();
        prop_assert!(out.rank() >= significant && out.rank() <= expected.len());
        for (x, y) in out.sigma.iter().zip(&expected) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y));
        }
    }

    #[test]
    fn soft_threshold_is_odd_and_shrinks(x in -20.0..20.0f64, tau in 0.0..5.0f64) {
        prop_assert_eq!(shrink(-x, tau), -shrink(x, tau));
        prop_assert!(shrink(x, tau).abs() <= x.abs());
        prop_assert!(shrink(x, tau).abs() >= x.abs() - tau - 1e-12);
        if x.abs() <= tau {
            prop_assert_eq!(shrink(x, tau), 0.0);
        }
    }

    #[test]
    fn soft_threshold_matrix_is_entrywise(a in matrix(5, 5), tau in 0.0..3.0f64) {
        let out = soft_threshold(&a, tau).unwrap();
        for (o, x) in out.as_slice().iter().zip(a.as_slice()) {
            prop_assert_eq!(*o, shrink(*x, tau));
        }
    }

    #[test]
    fn mask_projection_is_idempotent_and_self_adjoint((a, mask) in masked_matrix(), seed in 0u64..1000) {
        let pa = mask_project(&a, &mask).unwrap();
        prop_assert_eq!(&mask_project(&pa, &mask).unwrap(), &pa);
        let b = common::gaussian(a.rows(), a.cols(), seed);
        let pb = mask_project(&b, &mask).unwrap();
        prop_assert!((pa.inner(&b) - a.inner(&pb)).abs() <= 1e-9 * (1.0 + pa.inner(&b).abs()));
        let off = mask_project(&a, &mask.complement()).unwrap();
        prop_assert_eq!(&pa.add(&off), &a);
    }

    #[test]
    fn subspace_adjoint_identity(m in 1..6usize, n in 1..6usize, frac in 0.05..1.0f64, seed in 0u64..500) {
        let p = ((m * n) as f64 * frac).ceil() as usize;
        let q = draw_random_subspace(m, n, p, seed).unwrap();
        let x = common::gaussian(m, n, seed + 1);
        let y = common::gaussian_vec(p, seed + 2);
        let lhs: f64 = subspace_forward(&x, &q).unwrap().iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs = x.inner(&subspace_adjoint(&y, &q).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn subspace_projection_is_idempotent(m in 1..6usize, n in 1..6usize, frac in 0.05..1.0f64, seed in 0u64..500) {
        let p = ((m * n) as f64 * frac).ceil() as usize;
        let q = draw_random_subspace(m, n, p, seed).unwrap();
        prop_assert!(q.gram_defect() <= 1e-10);
        let x = common::gaussian(m, n, seed + 7);
        let px = q.project(&x).unwrap();
        prop_assert!(q.project(&px).unwrap().sub(&px).max_abs() <= 1e-10);
        let z = common::gaussian(m, n, seed + 8);
        let pz = q.project(&z).unwrap();
        prop_assert!((px.inner(&z) - x.inner(&pz)).abs() <= 1e-10 * (1.0 + px.inner(&z).abs()));
        prop_assert!(px.frobenius_norm() <= x.frobenius_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn mask_as_subspace_agrees_with_mask((a, mask) in masked_matrix()) {
        prop_assume!(!mask.is_empty());
        let q = SubspaceOperator::from_mask(&mask).unwrap();
        prop_assert!(q.project(&a).unwrap().sub(&mask_project(&a, &mask).unwrap()).max_abs() <= 1e-15);
        prop_assert_eq!(q.forward(&a).unwrap(), mask.forward(&a).unwrap());
    }

    #[test]
    fn auc_equals_pairwise_count(
        data in prop::collection::vec(((0u8..6), any::<bool>()), 2..40)
    ) {
        let scores: Vec<f64> = data.iter().map(|(s, _)| *s as f64 * 0.5).collect();
        let labels: Vec<bool> = data.iter().map(|(_, l)| *l).collect();
        let pos = labels.iter().filter(|&&l| l).count();
        prop_assume!(pos > 0 && pos < labels.len());
        let mut twice = 0u64;
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] && !labels[j] {
                    twice += if scores[i] > scores[j] { 2 } else if scores[i] == scores[j] { 1 } else { 0 };
                }
            }
        }
        let expected = twice as f64 / (2.0 * (pos * (labels.len() - pos)) as f64);
        prop_assert_eq!(auc(&scores, &labels).unwrap(), expected);
    }
}
