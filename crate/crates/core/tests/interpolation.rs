mod common;

use common::oracles::{dense_interpolation, naive_weights};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radar_depth::interp::{interpolate_dense, system_residual, AffinityWeights, GuidanceImage, InterpolationConfig, Neighborhood};
use radar_depth::DepthMap;

struct Instance {
    seeds: DepthMap,
    guide: GuidanceImage,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let w = rng.gen_range(1..=8);
    let h = rng.gen_range(1..=8);
    let n = w * h;
    let lum: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut data: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.25) { rng.gen_range(1.0..80.0) } else { 0.0 })
        .collect();
    if data.iter().all(|d| *d == 0.0) {
        data[rng.gen_range(0..n)] = rng.gen_range(1.0..80.0);
    }
    Instance {
        seeds: DepthMap::from_vec(w, h, data).unwrap(),
        guide: GuidanceImage::new(w, h, lum).unwrap(),
    }
}

#[test]
fn weights_match_independent_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let inst = random_instance(&mut rng);
        let (w, h) = (inst.guide.width(), inst.guide.height());
        for (nb, eight) in [(Neighborhood::Four, false), (Neighborhood::Eight, true)] {
            let lib = AffinityWeights::compute(&inst.guide, nb, 1e-4);
            let oracle = naive_weights(inst.guide.luminance(), w, h, eight, 1e-4);
            for (r, row) in oracle.iter().enumerate() {
                let got: Vec<(usize, f64)> = lib.row(r).collect();
                assert_eq!(got.len(), row.len());
                for ((s1, w1), (s2, w2)) in got.iter().zip(row) {
                    assert_eq!(s1, s2);
                    assert!((w1 - w2).abs() < 1e-12, "{w1} vs {w2}");
                }
            }
        }
    }
}

#[test]
fn matches_dense_direct_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // the default stop is a relative residual; tighten it for an absolute comparison
    let cfg = InterpolationConfig {
        solver_tolerance: 1e-12,
        ..InterpolationConfig::default()
    };
    for _ in 0..60 {
        let inst = random_instance(&mut rng);
        let (w, h) = (inst.guide.width(), inst.guide.height());
        let out = interpolate_dense(&inst.seeds, &inst.guide, &cfg).unwrap();
        let oracle = dense_interpolation(inst.seeds.data(), &naive_weights(inst.guide.luminance(), w, h, true, 1e-4));
        for (a, b) in out.depth.data().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn seeds_are_kept_bit_exact_and_solution_is_locally_minimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = InterpolationConfig::default();
    for _ in 0..30 {
        let inst = random_instance(&mut rng);
        let out = interpolate_dense(&inst.seeds, &inst.guide, &cfg).unwrap();
        for (s, d) in inst.seeds.data().iter().zip(out.depth.data()) {
            if *s > 0.0 {
                assert_eq!(s.to_bits(), d.to_bits());
            }
        }
        let base = system_residual(&inst.seeds, &inst.guide, &out.depth, &cfg).unwrap();
        assert_eq!(base.max_seed_mismatch, 0.0);
        // nudging any free pixel must not lower the objective
        for r in 0..out.depth.data().len() {
            if inst.seeds.is_valid(r) {
                continue;
            }
            for step in [-1e-2, 1e-2] {
                let mut data = out.depth.data().to_vec();
                data[r] += step;
                let probe = DepthMap::from_vec(out.depth.width(), out.depth.height(), data).unwrap();
                let obj = system_residual(&inst.seeds, &inst.guide, &probe, &cfg).unwrap();
                assert!(obj.value >= base.value - 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn maximum_principle_and_scale_equivariance(seed in any::<u64>(), scale in 0.1..10.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let cfg = InterpolationConfig::default();
        let out = interpolate_dense(&inst.seeds, &inst.guide, &cfg).unwrap();
        let valid: Vec<f64> = inst.seeds.data().iter().copied().filter(|d| *d > 0.0).collect();
        let lo = valid.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = valid.iter().copied().fold(0.0, f64::max);
        for d in out.depth.data() {
            prop_assert!(*d >= lo - 1e-6 && *d <= hi + 1e-6);
        }
        let scaled = inst.seeds.map_valid(|d| d * scale).unwrap();
        let out2 = interpolate_dense(&scaled, &inst.guide, &cfg).unwrap();
        for (a, b) in out.depth.data().iter().zip(out2.depth.data()) {
            prop_assert!((a * scale - b).abs() < 1e-6 * scale.max(1.0) * hi);
        }
    }
}

#[test]
fn guide_edges_stop_propagation() {
    // a dark left half and a bright right half, one seed on each side
    let (w, h) = (8, 4);
    let lum: Vec<f64> = (0..w * h).map(|i| if i % w < 4 { 0.1 } else { 0.9 }).collect();
    let guide = GuidanceImage::new(w, h, lum).unwrap();
    let mut seeds = DepthMap::zeros(w, h);
    seeds.set(0, 0, 10.0).unwrap();
    seeds.set(7, 3, 40.0).unwrap();
    let out = interpolate_dense(&seeds, &guide, &InterpolationConfig::default()).unwrap();
    let side_mean = |cols: std::ops::Range<usize>| {
        let vals: Vec<f64> = (0..h).flat_map(|v| cols.clone().map(move |u| (u, v))).map(|(u, v)| out.depth.get(u, v)).collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    assert!(side_mean(0..4) < 20.0, "left mean {}", side_mean(0..4));
    assert!(side_mean(4..8) > 30.0, "right mean {}", side_mean(4..8));
}

#[test]
fn mismatched_guide_is_rejected() {
    let seeds = DepthMap::filled(3, 3, 1.0).unwrap();
    let guide = GuidanceImage::uniform(3, 4, 0.5).unwrap();
    assert!(interpolate_dense(&seeds, &guide, &InterpolationConfig::default()).is_err());
}
