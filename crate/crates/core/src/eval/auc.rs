//! Mann-Whitney ROC-AUC.

/// Area under the ROC curve: the fraction of positive/negative pairs ranked
/// correctly, ties counting one half. `None` when either class is missing.
///
/// ```
/// use coldguess::eval::roc_auc;
/// assert_eq!(roc_auc(&[0.8, 0.6, 0.4], &[1, 0, 1]), Some(0.5));
/// assert_eq!(roc_auc(&[0.3, 0.3], &[1, 1]), None);
/// ```
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    assert_eq!(
        scores.len(),
        labels.len(),
        "scores and labels differ in length"
    );
    let pos = labels.iter().filter(|&&l| l != 0).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // twice the Mann-Whitney U, kept integral so no rounding creeps in
    let mut twice_u = 0u64;
    let mut neg_below = 0u64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut p, mut n) = (0u64, 0u64);
        while j < order.len() && scores[order[j]].total_cmp(&scores[order[i]]).is_eq() {
            if labels[order[j]] != 0 {
                p += 1;
            } else {
                n += 1;
            }
            j += 1;
        }
        twice_u += 2 * p * neg_below + p * n;
        neg_below += n;
        i = j;
    }
    Some(twice_u as f64 / (2 * pos * neg) as f64)
}

/// [`roc_auc`] over `f32` scores.
pub fn roc_auc_f32(scores: &[f32], labels: &[u8]) -> Option<f64> {
    let s: Vec<f64> = scores.iter().map(|&v| v as f64).collect();
    roc_auc(&s, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairwise(scores: &[f64], labels: &[u8]) -> Option<f64> {
        let mut twice = 0u64;
        let mut pairs = 0u64;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li == 1 && lj == 0 {
                    pairs += 1;
                    twice += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        std::cmp::Ordering::Greater => 2,
                        std::cmp::Ordering::Equal => 1,
                        std::cmp::Ordering::Less => 0,
                    };
                }
            }
        }
        (pairs > 0).then(|| twice as f64 / (2 * pairs) as f64)
    }

    #[test]
    fn small_cases() {
        assert_eq!(roc_auc(&[0.9, 0.1], &[1, 0]), Some(1.0));
        assert_eq!(roc_auc(&[0.4; 6], &[1, 0, 1, 0, 0, 1]), Some(0.5));
        assert_eq!(roc_auc(&[0.8, 0.6, 0.4], &[1, 0, 1]), Some(0.5));
        assert_eq!(roc_auc(&[0.1, 0.2], &[0, 0]), None);
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
        (1usize..=200).prop_flat_map(|n| {
            (
                prop::collection::vec((0u8..12).prop_map(|v| v as f64 / 11.0), n),
                prop::collection::vec(0u8..=1, n),
            )
        })
    }

    proptest! {
        #[test]
        fn matches_pairwise_oracle((s, l) in instance()) {
            prop_assert_eq!(roc_auc(&s, &l), pairwise(&s, &l));
        }

        #[test]
        fn invariant_under_increasing_maps((s, l) in instance()) {
            let t: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
            prop_assert_eq!(roc_auc(&s, &l), roc_auc(&t, &l));
        }

        #[test]
        fn negation_complements_without_ties(
            (s, l) in (2usize..150).prop_flat_map(|n| (
                Just((0..n).map(|i| i as f64).collect::<Vec<_>>()).prop_shuffle(),
                prop::collection::vec(0u8..=1, n),
            ))
        ) {
            let neg: Vec<f64> = s.iter().map(|v| -v).collect();
            if let (Some(a), Some(b)) = (roc_auc(&s, &l), roc_auc(&neg, &l)) {
                prop_assert!((a + b - 1.0).abs() < 1e-12);
            }
        }
    }
}
