use crate::error::{KdicaError, Result};

/// Area under the ROC curve via the Mann-Whitney statistic with midranks.
///
/// Equals the fraction of (positive, negative) pairs ordered correctly,
/// counting ties as one half. Undefined without both classes.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(KdicaError::DimensionMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(KdicaError::NonFinite("AUC scores contain NaN".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 {
        return Err(KdicaError::UndefinedAuc("no positive samples"));
    }
    if n_neg == 0 {
        return Err(KdicaError::UndefinedAuc("no negative samples"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));

    // Twice the rank sum keeps midranks integral.
    let mut twice_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end, midrank doubled = start + 1 + end
        let twice_mid = (start + 1 + end) as u128;
        let pos_in_group = order[start..end].iter().filter(|&&i| labels[i]).count() as u128;
        twice_rank_sum += twice_mid * pos_in_group;
        start = end;
    }
    let np = n_pos as u128;
    // 2U = 2R - n+(n+ + 1); U counts ties as one half.
    let twice_u = twice_rank_sum - np * (np + 1);
    Ok(twice_u as f64 / 2.0 / (n_pos as f64 * n_neg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::brute_force_auc;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_and_tied() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), 1.0);
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[true, true, false, false]).unwrap(), 0.0);
        assert_eq!(auc(&[0.5; 6], &[true, false, true, false, false, true]).unwrap(), 0.5);
    }

    #[test]
    fn single_class_is_undefined() {
        assert!(matches!(auc(&[1.0, 2.0], &[true, true]), Err(KdicaError::UndefinedAuc(_))));
        assert!(matches!(auc(&[1.0, 2.0], &[false, false]), Err(KdicaError::UndefinedAuc(_))));
        assert!(auc(&[1.0], &[true, false]).is_err());
        assert!(auc(&[f64::NAN, 1.0], &[true, false]).is_err());
    }

    #[test]
    fn matches_pair_count_on_200_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        let scores: Vec<f64> = (0..200).map(|_| (rng.random_range(0..40) as f64) / 7.0).collect();
        let labels: Vec<bool> = (0..200).map(|_| rng.random_bool(0.4)).collect();
        assert_eq!(auc(&scores, &labels).unwrap(), brute_force_auc(&scores, &labels));
    }

    proptest! {
        #[test]
        fn invariant_under_increasing_maps(
            pts in proptest::collection::vec((-5i32..5, any::<bool>()), 2..60),
            scale in 0.1f64..10.0, shift in -3.0f64..3.0,
        ) {
            let scores: Vec<f64> = pts.iter().map(|p| p.0 as f64 * 0.5).collect();
            let labels: Vec<bool> = pts.iter().map(|p| p.1).collect();
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let base = auc(&scores, &labels).unwrap();
            prop_assert_eq!(base, brute_force_auc(&scores, &labels));
            let ex: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
            let af: Vec<f64> = scores.iter().map(|s| scale * s + shift).collect();
            prop_assert_eq!(auc(&ex, &labels).unwrap(), base);
            prop_assert_eq!(auc(&af, &labels).unwrap(), base);
        }
    }
}
