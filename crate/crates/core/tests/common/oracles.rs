//! Straightforward reference implementations used to cross-check the
//! library. They favor obviousness over speed and share no code with it.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Normalized neighbor weights `exp(-dY² / 2σ²)` per pixel, where σ² is the
/// population variance of the pixel and its neighbors, floored at `eps`.
pub fn naive_weights(lum: &[f64], w: usize, h: usize, eight: bool, eps: f64) -> Vec<Vec<(usize, f64)>> {
    let mut rows = Vec::with_capacity(w * h);
    for v in 0..h as i64 {
        for u in 0..w as i64 {
            let mut nbrs = Vec::new();
            for dv in -1i64..=1 {
                for du in -1i64..=1 {
                    if (du, dv) == (0, 0) || (!eight && du != 0 && dv != 0) {
                        continue;
                    }
                    let (x, y) = (u + du, v + dv);
                    if x >= 0 && y >= 0 && x < w as i64 && y < h as i64 {
                        nbrs.push((y * w as i64 + x) as usize);
                    }
                }
            }
            let r = (v * w as i64 + u) as usize;
            let mut window: Vec<f64> = nbrs.iter().map(|&s| lum[s]).collect();
            window.push(lum[r]);
            let n = window.len() as f64;
            let mean = window.iter().sum::<f64>() / n;
            let var = (window.iter().map(|x| x * x).sum::<f64>() / n - mean * mean).max(eps);
            let raw: Vec<f64> = nbrs
                .iter()
                .map(|&s| (-(lum[r] - lum[s]).powi(2) / (2.0 * var)).exp())
                .collect();
            let total: f64 = raw.iter().sum();
            rows.push(nbrs.into_iter().zip(raw.into_iter().map(|x| x / total)).collect());
        }
    }
    rows
}

/// Solves `D(r) = Σ w_rs D(s)` for every non-seed pixel by dense LU on the
/// full system, with one identity row per seed.
pub fn dense_interpolation(seeds: &[f64], weights: &[Vec<(usize, f64)>]) -> Vec<f64> {
    let n = seeds.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for r in 0..n {
        a[(r, r)] = 1.0;
        if seeds[r] > 0.0 {
            b[r] = seeds[r];
        } else {
            for &(s, w) in &weights[r] {
                a[(r, s)] -= w;
            }
        }
    }
    a.lu().solve(&b).expect("interpolation system is nonsingular").as_slice().to_vec()
}

/// δ₁..δ₃, RMSE, AbsRel and count over `gt > 0 && min <= gt <= max`.
pub fn naive_eval(pred: &[f64], gt: &[f64], min: f64, max: f64) -> Option<([f64; 3], f64, f64, usize)> {
    let idx: Vec<usize> = (0..gt.len()).filter(|&i| gt[i] > 0.0 && gt[i] >= min && gt[i] <= max).collect();
    if idx.is_empty() {
        return None;
    }
    let n = idx.len() as f64;
    let mut deltas = [0.0; 3];
    for (k, d) in deltas.iter_mut().enumerate() {
        let thr = 1.25f64.powi(k as i32 + 1);
        *d = idx.iter().filter(|&&i| f64::max(pred[i] / gt[i], gt[i] / pred[i]) < thr).count() as f64 / n;
    }
    let rmse = (idx.iter().map(|&i| (pred[i] - gt[i]).powi(2)).sum::<f64>() / n).sqrt();
    let abs_rel = idx.iter().map(|&i| (pred[i] - gt[i]).abs() / gt[i]).sum::<f64>() / n;
    Some((deltas, rmse, abs_rel, idx.len()))
}

/// Mean ordinal loss computed from raw score pairs `[s0, s1]` laid out
/// pixel-major then bin-major. `labels[i] = None` masks pixel `i`.
pub fn naive_ordinal_loss(scores: &[f64], labels: &[Option<usize>], bins: usize) -> f64 {
    let mut total = 0.0;
    let mut valid = 0;
    for (i, label) in labels.iter().enumerate() {
        let Some(l) = *label else { continue };
        valid += 1;
        for k in 0..bins {
            let s0 = scores[2 * (i * bins + k)];
            let s1 = scores[2 * (i * bins + k) + 1];
            let p = s1.exp() / (s0.exp() + s1.exp());
            total -= if k < l { p.ln() } else { (1.0 - p).ln() };
        }
    }
    total / valid as f64
}

/// Geometric thresholds from the closed form `α (β/α)^(i/K)`.
pub fn naive_sid(alpha: f64, beta: f64, bins: usize) -> Vec<f64> {
    (0..=bins)
        .map(|i| alpha * (beta / alpha).powf(i as f64 / bins as f64))
        .collect()
}
