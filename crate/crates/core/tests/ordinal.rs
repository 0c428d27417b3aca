mod common;

use common::oracles::{naive_ordinal_loss, naive_sid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radar_depth::ordinal::{
    bin_of, decode_probs, depth_to_label, ordinal_loss, ordinal_loss_grad, sid_thresholds, OrdinalLabels, OrdinalProbs,
    OrdinalScores, SidConfig, DEFAULT_CLAMP_EPS,
};
use radar_depth::DepthMap;

#[test]
fn thresholds_match_closed_form() {
    for (a, b, k) in [(1.0, 80.0, 80), (0.5, 10.0, 7), (2.0, 3.0, 1)] {
        let t = sid_thresholds(&SidConfig::new(a, b, k).unwrap()).unwrap();
        let oracle = naive_sid(a, b, k);
        assert_eq!(t.len(), oracle.len());
        for (x, y) in t.iter().zip(&oracle) {
            assert!((x - y).abs() <= 1e-12 * y, "{x} vs {y}");
        }
        assert_eq!((t[0], t[k]), (a, b));
    }
}

#[test]
fn labels_are_ordinal_at_eight_bins() {
    let cfg = SidConfig::new(1.0, 80.0, 8).unwrap();
    let t = sid_thresholds(&cfg).unwrap();
    let depths: Vec<f64> = (0..400).map(|i| 0.5 + i as f64 * 0.2).collect();
    let map = DepthMap::from_vec(depths.len(), 1, depths.clone()).unwrap();
    let labels = depth_to_label(&map, &cfg).unwrap();
    let mut prev = 0;
    for (i, d) in depths.iter().enumerate() {
        let l = labels.get(i).unwrap();
        assert!(l >= prev, "labels must not decrease with depth");
        assert!(l < 8);
        if (1.0..80.0).contains(d) {
            assert!(t[l] <= *d && *d < t[l + 1]);
        }
        prev = l;
    }
    assert_eq!(bin_of(80.0, &t), 7);
    assert_eq!(bin_of(t[3], &t), 3);
}

proptest! {
    #[test]
    fn decode_lands_in_the_label_bin(depth in 1.0..80.0f64, bins in 1usize..100) {
        let cfg = SidConfig::new(1.0, 80.0, bins).unwrap();
        let t = sid_thresholds(&cfg).unwrap();
        let l = bin_of(depth, &t);
        let probs = OrdinalProbs::ideal(&[l], bins).unwrap();
        let d = decode_probs(probs.pixel(0), &cfg).unwrap();
        prop_assert!(t[l] <= d && d <= t[l + 1]);
        prop_assert_eq!(bin_of(d, &t), l);
    }

    #[test]
    fn loss_is_minimal_at_ideal_probabilities(labels in prop::collection::vec(0usize..6, 1..12), noise in 0.01..0.49f64) {
        let bins = 6;
        let n = labels.len();
        let lab = OrdinalLabels::new(n, 1, bins, labels.clone(), vec![true; n]).unwrap();
        let ideal = OrdinalProbs::ideal(&labels, bins).unwrap();
        let blurred = OrdinalProbs::new(
            bins,
            (0..n).flat_map(|i| ideal.pixel(i).to_vec())
                .map(|p| if p > 0.5 { p - noise } else { p + noise })
                .collect(),
        ).unwrap();
        let best = ordinal_loss(&ideal, &lab, DEFAULT_CLAMP_EPS).unwrap();
        let worse = ordinal_loss(&blurred, &lab, DEFAULT_CLAMP_EPS).unwrap();
        prop_assert!(best < worse);
    }
}

fn random_problem(rng: &mut ChaCha8Rng, bins: usize) -> (OrdinalScores, OrdinalLabels, Vec<Option<usize>>) {
    let pixels = rng.gen_range(1..6);
    let scores: Vec<f64> = (0..pixels * bins * 2).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let mut labels = Vec::new();
    let mut valid = Vec::new();
    for i in 0..pixels {
        labels.push(rng.gen_range(0..bins));
        valid.push(i == 0 || rng.gen_bool(0.8));
    }
    let masked = labels.iter().zip(&valid).map(|(l, v)| v.then_some(*l)).collect();
    (
        OrdinalScores::new(bins, scores).unwrap(),
        OrdinalLabels::new(pixels, 1, bins, labels, valid).unwrap(),
        masked,
    )
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let h = 1e-5;
    for bins in [2, 5, 80] {
        for _ in 0..10 {
            let (scores, labels, masked) = random_problem(&mut rng, bins);
            let (loss, grad) = ordinal_loss_grad(&scores, &labels).unwrap();
            let s = scores.as_slice().to_vec();
            assert!((loss - naive_ordinal_loss(&s, &masked, bins)).abs() < 1e-10);
            let (mut num2, mut diff2, mut ana2) = (0.0, 0.0, 0.0);
            for j in 0..s.len() {
                let (mut up, mut down) = (s.clone(), s.clone());
                up[j] += h;
                down[j] -= h;
                let fd = (naive_ordinal_loss(&up, &masked, bins) - naive_ordinal_loss(&down, &masked, bins)) / (2.0 * h);
                num2 += fd * fd;
                ana2 += grad[j] * grad[j];
                diff2 += (fd - grad[j]).powi(2);
            }
            let rel = diff2.sqrt() / num2.sqrt().max(ana2.sqrt()).max(1e-12);
            assert!(rel < 1e-4, "relative gradient error {rel} at K={bins}");
        }
    }
}

#[test]
fn gradient_pushes_towards_targets() {
    let labels = OrdinalLabels::new(1, 1, 4, vec![2], vec![true]).unwrap();
    let scores = OrdinalScores::new(4, vec![0.0; 8]).unwrap();
    let (loss, grad) = ordinal_loss_grad(&scores, &labels).unwrap();
    assert!((loss - 4.0 * 2f64.ln()).abs() < 1e-12);
    for k in 0..4 {
        let ds1 = grad[2 * k + 1];
        // descending the gradient raises P_k for k < label and lowers it otherwise
        if k < 2 {
            assert!(ds1 < 0.0);
        } else {
            assert!(ds1 > 0.0);
        }
        assert_eq!(grad[2 * k], -ds1);
    }
}

#[test]
fn masked_pixels_get_no_gradient() {
    let labels = OrdinalLabels::new(2, 1, 3, vec![1, 2], vec![true, false]).unwrap();
    let scores = OrdinalScores::new(3, (0..12).map(|i| i as f64 * 0.1).collect()).unwrap();
    let (_, grad) = ordinal_loss_grad(&scores, &labels).unwrap();
    assert!(grad[6..].iter().all(|g| *g == 0.0));
}
