use std::collections::BTreeSet;

use proptest::prelude::*;
use rowcomp_core::embed::{levenshtein, normalized_levenshtein};
use rowcomp_core::metrics::{average_precision, recall_at_n};
use rowcomp_core::suggest::{normalize_scores, outlier_scores, scale_columns, Detector};
use rowcomp_core::vector::cosine;

fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..5).prop_flat_map(|w| prop::collection::vec(prop::collection::vec(-100.0f64..100.0, w), 1..30))
}

proptest! {
    #[test]
    fn edit_distance_is_a_metric(a in "[a-c]{0,6}", b in "[a-c]{0,6}", c in "[a-c]{0,6}") {
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert_eq!(levenshtein(&a, &a), 0);
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        let n = normalized_levenshtein(&a, &b);
        prop_assert!((0.0..=1.0).contains(&n));
    }

    #[test]
    fn cosine_is_bounded_and_symmetric(
        a in prop::collection::vec(-10.0f64..10.0, 4),
        b in prop::collection::vec(-10.0f64..10.0, 4),
    ) {
        let s = cosine(&a, &b);
        prop_assert!((-1.0..=1.0).contains(&s));
        prop_assert_eq!(s, cosine(&b, &a));
    }

    #[test]
    fn scaled_columns_lie_in_unit_interval(mut rows in matrix()) {
        scale_columns(&mut rows);
        prop_assert!(rows.iter().flatten().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn outlier_scores_are_permutation_equivariant(rows in matrix(), lof in any::<bool>(), shift in 0usize..30) {
        let detector = if lof { Detector::Lof } else { Detector::Knn };
        let scores = outlier_scores(&rows, detector);
        prop_assert_eq!(scores.len(), rows.len());
        let k = shift % rows.len();
        let mut rotated = rows.clone();
        rotated.rotate_left(k);
        let rotated_scores = outlier_scores(&rotated, detector);
        for i in 0..rows.len() {
            let j = (i + rows.len() - k) % rows.len();
            prop_assert!((scores[i] - rotated_scores[j]).abs() <= 1e-9 * scores[i].abs().max(1.0));
        }
    }

    #[test]
    fn normalized_scores_keep_order(raw in prop::collection::vec(-50.0f64..50.0, 1..40), c in 0.01f64..0.06) {
        let s = normalize_scores(&raw, c);
        prop_assert!(s.iter().all(|x| (0.0..=1.0).contains(x)));
        for i in 0..raw.len() {
            for j in 0..raw.len() {
                if raw[i] < raw[j] {
                    prop_assert!(s[i] <= s[j]);
                }
            }
        }
    }

    #[test]
    fn recall_grows_with_budget(
        ranked in prop::collection::vec(0u8..20, 0..30),
        truth in prop::collection::btree_set(0u8..20, 0..8),
    ) {
        let mut last = 0.0;
        for n in 0..=ranked.len() + 1 {
            let r = recall_at_n(&ranked, &truth, n);
            prop_assert!(r >= last && r <= 1.0);
            last = r;
        }
        let ap = average_precision(&ranked, &truth);
        prop_assert!((0.0..=1.0).contains(&ap));
        prop_assert!(ap <= recall_at_n(&ranked, &truth, ranked.len()) + 1e-12);
    }
}

#[test]
fn perfect_ranking_has_unit_precision() {
    let truth: BTreeSet<u8> = [3, 5, 7].into();
    assert_eq!(average_precision(&[3, 5, 7, 1], &truth), 1.0);
    assert_eq!(recall_at_n(&[1, 3], &truth, 2), 1.0 / 3.0);
}
