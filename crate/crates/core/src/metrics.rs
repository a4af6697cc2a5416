//! Evaluation metrics: relative recovery error, outlier-detection AUC, and RMSE.

use crate::data::Rating;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::measure::ObservationMask;

/// `‖estimate − reference‖_F / ‖reference‖_F`.
pub fn relative_error(estimate: &DenseMatrix, reference: &DenseMatrix) -> Result<f64> {
    if estimate.shape() != reference.shape() {
        return Err(Error::Dimension(format!(
            "estimate is {}x{}, reference is {}x{}",
            estimate.rows(),
            estimate.cols(),
            reference.rows(),
            reference.cols()
        )));
    }
    let denom = reference.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::Argument("reference matrix has zero norm".into()));
    }
    Ok(estimate.sub(reference).frobenius_norm() / denom)
}

/// Root mean squared error of `predicted` over the given test ratings.
pub fn rmse(predicted: &DenseMatrix, test: &[Rating]) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Argument("empty test set".into()));
    }
    let mut sum = 0.0;
    for r in test {
        if r.user >= predicted.rows() || r.item >= predicted.cols() {
            return Err(Error::Dimension(format!(
                "test entry ({}, {}) outside {}x{} prediction",
                r.user,
                r.item,
                predicted.rows(),
                predicted.cols()
            )));
        }
        let e = r.value - predicted[(r.user, r.item)];
        sum += e * e;
    }
    Ok((sum / test.len() as f64).sqrt())
}

/// Area under the ROC curve in its Mann–Whitney form: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("AUC scores"));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Argument(
            "AUC needs both positive and negative labels".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of midranks of the positives, counted in half-units so ties stay exact.
    let mut twice_rank_sum: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Ranks start..end (0-based) share the midrank (start + end + 1) / 2.
        let twice_mid = (start + end + 1) as u64;
        let pos_in_group = order[start..end].iter().filter(|&&i| labels[i]).count() as u64;
        twice_rank_sum += pos_in_group * twice_mid;
        start = end;
    }
    let p = positives as u64;
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2.0 * positives as f64 * negatives as f64))
}

/// AUC of `|S|` on Ω against the planted spike support.
pub fn outlier_auc(s_hat: &DenseMatrix, s_true: &DenseMatrix, mask: &ObservationMask) -> Result<f64> {
    if s_hat.shape() != mask.shape() || s_true.shape() != mask.shape() {
        return Err(Error::Dimension("sparse estimate, truth and mask must share a shape".into()));
    }
    let scores: Vec<f64> = mask.indices().iter().map(|&ij| s_hat[ij].abs()).collect();
    let labels: Vec<bool> = mask.indices().iter().map(|&ij| s_true[ij] != 0.0).collect();
    auc(&scores, &labels)
}
