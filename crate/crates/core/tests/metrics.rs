mod common;

use common::pairwise_auc;
use fairsp_core::metrics::{accuracy, delta_dp, delta_eo, f1_binary, roc_auc, FairnessReport};
use proptest::prelude::*;

/// `(y_hat, y, a)` triples where both groups have positives, so every metric
/// is defined.
fn triples() -> impl Strategy<Value = (Vec<u8>, Vec<u8>, Vec<u8>)> {
    (8usize..120)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0u8..2, n),
                prop::collection::vec(0u8..2, n),
                prop::collection::vec(0u8..2, n),
            )
        })
        .prop_map(|(p, mut y, mut a)| {
            // Guarantee a positive in each group.
            y[0] = 1;
            a[0] = 0;
            y[1] = 1;
            a[1] = 1;
            (p, y, a)
        })
}

fn permute<T: Copy>(v: &[T], perm: &[usize]) -> Vec<T> {
    perm.iter().map(|&i| v[i]).collect()
}

/// Straight-from-definition group rate.
fn rate(p: &[u8], keep: impl Fn(usize) -> bool) -> f64 {
    let idx: Vec<usize> = (0..p.len()).filter(|&i| keep(i)).collect();
    idx.iter().filter(|&&i| p[i] == 1).count() as f64 / idx.len() as f64
}

proptest! {
    #[test]
    fn metrics_invariant_under_permutation((p, y, a) in triples(), seed in any::<u64>()) {
        let mut perm: Vec<usize> = (0..p.len()).collect();
        // Deterministic shuffle from the seed.
        let mut s = seed | 1;
        for i in (1..perm.len()).rev() {
            s ^= s << 13; s ^= s >> 7; s ^= s << 17;
            perm.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let (pp, yp, ap) = (permute(&p, &perm), permute(&y, &perm), permute(&a, &perm));
        let r = FairnessReport::compute(&p, &y, &a).unwrap();
        let rp = FairnessReport::compute(&pp, &yp, &ap).unwrap();
        prop_assert_eq!(r.accuracy, rp.accuracy);
        prop_assert_eq!(r.f1, rp.f1);
        prop_assert!((r.delta_dp - rp.delta_dp).abs() < 1e-15);
        prop_assert!((r.delta_eo - rp.delta_eo).abs() < 1e-15);
    }

    #[test]
    fn gaps_symmetric_in_group_labels((p, y, a) in triples()) {
        let swapped: Vec<u8> = a.iter().map(|&g| 1 - g).collect();
        prop_assert_eq!(delta_dp(&p, &a).unwrap(), delta_dp(&p, &swapped).unwrap());
        prop_assert_eq!(delta_eo(&p, &y, &a).unwrap(), delta_eo(&p, &y, &swapped).unwrap());
    }

    #[test]
    fn gaps_match_definitions((p, y, a) in triples()) {
        let dp = (rate(&p, |i| a[i] == 1) - rate(&p, |i| a[i] == 0)).abs();
        let eo = (rate(&p, |i| a[i] == 1 && y[i] == 1) - rate(&p, |i| a[i] == 0 && y[i] == 1)).abs();
        prop_assert!((delta_dp(&p, &a).unwrap() - dp).abs() < 1e-12);
        prop_assert!((delta_eo(&p, &y, &a).unwrap() - eo).abs() < 1e-12);
    }

    #[test]
    fn accuracy_complements_under_flip((p, y, _a) in triples()) {
        let flipped: Vec<u8> = p.iter().map(|&v| 1 - v).collect();
        let s = accuracy(&p, &y).unwrap() + accuracy(&flipped, &y).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f1_matches_harmonic_mean((p, y, _a) in triples()) {
        let tp = p.iter().zip(&y).filter(|(&a, &b)| a == 1 && b == 1).count() as f64;
        let pp = p.iter().filter(|&&v| v == 1).count() as f64;
        let ap = y.iter().filter(|&&v| v == 1).count() as f64;
        // 2TP / (|predicted positive| + |actual positive|)
        let oracle = if tp == 0.0 { 0.0 } else { 2.0 * tp / (pp + ap) };
        prop_assert!((f1_binary(&p, &y).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn all_metrics_in_unit_interval((p, y, a) in triples()) {
        let r = FairnessReport::compute(&p, &y, &a).unwrap();
        for v in [r.accuracy, r.f1, r.delta_dp, r.delta_eo] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert_eq!(r.group_counts.total(), p.len());
    }

    #[test]
    fn auc_matches_pairwise(scores in prop::collection::vec(0u8..6, 4..80), labels in prop::collection::vec(0u8..2, 80)) {
        let s: Vec<f64> = scores.iter().map(|&v| f64::from(v) / 5.0).collect();
        let mut l = labels[..s.len()].to_vec();
        l[0] = 0;
        l[1] = 1;
        prop_assert!((roc_auc(&s, &l).unwrap() - pairwise_auc(&s, &l)).abs() < 1e-12);
    }
}

#[test]
fn identical_predictions_across_groups_are_fair() {
    let y = vec![1, 0, 1, 0, 1, 1, 0, 0];
    let a = vec![0, 0, 0, 0, 1, 1, 1, 1];
    let p = vec![1, 0, 0, 1, 1, 0, 0, 1];
    assert_eq!(delta_dp(&p, &a).unwrap(), 0.0);
    assert_eq!(delta_eo(&p, &y, &a).unwrap(), 0.0);
}
