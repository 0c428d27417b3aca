//! Spacing-increasing discretization (SID) and ordinal regression.
//!
//! Depth in `[alpha, beta]` is split into `bins` log-uniform intervals with
//! thresholds `t_i = exp(ln alpha + i (ln beta - ln alpha) / bins)`. A depth in
//! bin `l` is encoded as the `bins` binary events "label > k", and the loss is
//! the sum of their binary log-losses. Bins are left-closed, `[t_i, t_{i+1})`,
//! with `beta` itself folded into the top bin.

use crate::error::{Error, Result};
use crate::geometry::DepthMap;

/// Default probability floor applied before taking logarithms.
pub const DEFAULT_CLAMP_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidConfig {
    /// Lower depth bound, meters.
    pub alpha: f64,
    /// Upper depth bound, meters.
    pub beta: f64,
    /// Number of bins.
    pub bins: usize,
}

impl Default for SidConfig {
    /// 80 bins over 1–80 m.
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 80.0,
            bins: 80,
        }
    }
}

impl SidConfig {
    pub fn new(alpha: f64, beta: f64, bins: usize) -> Result<Self> {
        let cfg = Self { alpha, beta, bins };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.beta.is_finite() && self.alpha > 0.0 && self.alpha < self.beta) {
            return Err(Error::invalid(format!(
                "SID bounds need 0 < alpha < beta, got alpha {} beta {}",
                self.alpha, self.beta
            )));
        }
        if self.bins == 0 {
            return Err(Error::invalid("SID needs at least one bin"));
        }
        Ok(())
    }
}

/// The `bins + 1` bin edges; endpoints are exactly `alpha` and `beta`.
pub fn sid_thresholds(cfg: &SidConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let k = cfg.bins;
    let (la, lb) = (cfg.alpha.ln(), cfg.beta.ln());
    let step = (lb - la) / k as f64;
    Ok((0..=k)
        .map(|i| match i {
            0 => cfg.alpha,
            i if i == k => cfg.beta,
            i => (la + i as f64 * step).exp(),
        })
        .collect())
}

/// Bin index of a depth, clamped into `[alpha, beta]`.
pub fn bin_of(depth: f64, thresholds: &[f64]) -> usize {
    let k = thresholds.len() - 1;
    // number of interior edges t_1..t_{K-1} that are <= depth
    thresholds[1..k].partition_point(|&t| t <= depth)
}

/// Per-pixel bin labels with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalLabels {
    pub width: usize,
    pub height: usize,
    pub bins: usize,
    labels: Vec<usize>,
    valid: Vec<bool>,
}

impl OrdinalLabels {
    pub fn new(width: usize, height: usize, bins: usize, labels: Vec<usize>, valid: Vec<bool>) -> Result<Self> {
        let n = width * height;
        if labels.len() != n || valid.len() != n {
            return Err(Error::invalid(format!(
                "label buffers must have {n} entries, got {} labels and {} mask values",
                labels.len(),
                valid.len()
            )));
        }
        if let Some(l) = labels.iter().zip(&valid).find(|(l, v)| **v && **l >= bins) {
            return Err(Error::invalid(format!("label {} not below bin count {bins}", l.0)));
        }
        Ok(Self {
            width,
            height,
            bins,
            labels,
            valid,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Label of pixel `i`, `None` when masked out.
    pub fn get(&self, i: usize) -> Option<usize> {
        self.valid[i].then(|| self.labels[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Encodes a depth map into SID labels; zero pixels are masked out.
pub fn depth_to_label(depth: &DepthMap, cfg: &SidConfig) -> Result<OrdinalLabels> {
    let t = sid_thresholds(cfg)?;
    let mut labels = Vec::with_capacity(depth.data().len());
    let mut valid = Vec::with_capacity(depth.data().len());
    for &d in depth.data() {
        if d > 0.0 {
            labels.push(bin_of(d.clamp(cfg.alpha, cfg.beta), &t));
            valid.push(true);
        } else {
            labels.push(0);
            valid.push(false);
        }
    }
    OrdinalLabels::new(depth.width(), depth.height(), cfg.bins, labels, valid)
}

/// Per-pixel probability vectors `P_k = P(label > k)`, stored pixel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalProbs {
    bins: usize,
    data: Vec<f64>,
}

impl OrdinalProbs {
    pub fn new(bins: usize, data: Vec<f64>) -> Result<Self> {
        if bins == 0 || !data.len().is_multiple_of(bins) {
            return Err(Error::invalid(format!(
                "{} probabilities do not split into vectors of {bins}",
                data.len()
            )));
        }
        if let Some(p) = data.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
            return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
        }
        Ok(Self { bins, data })
    }

    /// The ideal probability vector for each label (1 below the label, 0 from it on).
    pub fn ideal(labels: &[usize], bins: usize) -> Result<Self> {
        let data = labels
            .iter()
            .flat_map(|&l| (0..bins).map(move |k| if k < l { 1.0 } else { 0.0 }))
            .collect();
        Self::new(bins, data)
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn pixel_count(&self) -> usize {
        self.data.len() / self.bins
    }

    pub fn pixel(&self, i: usize) -> &[f64] {
        &self.data[i * self.bins..(i + 1) * self.bins]
    }
}

/// Decodes one probability vector: the number of bins with `P_k >= 0.5`
/// selects a bin whose arithmetic midpoint is returned.
pub fn decode_probs(probs: &[f64], cfg: &SidConfig) -> Result<f64> {
    let t = sid_thresholds(cfg)?;
    decode_with(probs, &t)
}

fn decode_with(probs: &[f64], t: &[f64]) -> Result<f64> {
    let k = t.len() - 1;
    if probs.len() != k {
        return Err(Error::invalid(format!("expected {k} probabilities, got {}", probs.len())));
    }
    let l = probs.iter().filter(|p| **p >= 0.5).count();
    Ok((t[l] + t[(l + 1).min(k)]) / 2.0)
}

/// Decodes every pixel into a depth map of the given size.
pub fn decode_map(probs: &OrdinalProbs, cfg: &SidConfig, width: usize, height: usize) -> Result<DepthMap> {
    if probs.bins() != cfg.bins || probs.pixel_count() != width * height {
        return Err(Error::invalid("probability tensor does not match map size or bin count"));
    }
    let t = sid_thresholds(cfg)?;
    let data = (0..probs.pixel_count())
        .map(|i| decode_with(probs.pixel(i), &t))
        .collect::<Result<Vec<_>>>()?;
    DepthMap::from_vec(width, height, data)
}

/// Mean ordinal regression loss over valid pixels.
pub fn ordinal_loss(probs: &OrdinalProbs, labels: &OrdinalLabels, clamp_eps: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&clamp_eps) {
        return Err(Error::invalid(format!("clamp_eps must lie in [0, 0.5), got {clamp_eps}")));
    }
    check_shape(probs.bins(), probs.pixel_count(), labels)?;
    let mut total = 0.0;
    let mut n = 0usize;
    for i in 0..labels.len() {
        let Some(l) = labels.get(i) else { continue };
        for (k, &p) in probs.pixel(i).iter().enumerate() {
            let p = p.clamp(clamp_eps, 1.0 - clamp_eps);
            total -= if k < l { p.ln() } else { (1.0 - p).ln() };
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(total / n as f64)
}

fn check_shape(bins: usize, pixels: usize, labels: &OrdinalLabels) -> Result<()> {
    if bins != labels.bins || pixels != labels.len() {
        return Err(Error::invalid(format!(
            "predictions cover {pixels} pixels x {bins} bins, labels {} pixels x {} bins",
            labels.len(),
            labels.bins
        )));
    }
    Ok(())
}

/// Raw two-way scores per bin: `P_k = e^{s_k1} / (e^{s_k0} + e^{s_k1})`.
/// Stored pixel-major, then bin, then `[s_k0, s_k1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalScores {
    bins: usize,
    data: Vec<f64>,
}

impl OrdinalScores {
    pub fn new(bins: usize, data: Vec<f64>) -> Result<Self> {
        if bins == 0 || !data.len().is_multiple_of(2 * bins) {
            return Err(Error::invalid(format!(
                "{} scores do not split into {bins} bin pairs",
                data.len()
            )));
        }
        if data.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("scores must be finite"));
        }
        Ok(Self { bins, data })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn pixel_count(&self) -> usize {
        self.data.len() / (2 * self.bins)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Probabilities implied by the scores.
    pub fn probabilities(&self) -> OrdinalProbs {
        let data = self
            .data
            .chunks_exact(2)
            .map(|s| sigmoid(s[1] - s[0]))
            .collect();
        OrdinalProbs {
            bins: self.bins,
            data,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Mean ordinal loss of score pairs and its gradient with respect to every
/// score. Log-probabilities come from the log-sum-exp form, so no clamping
/// is needed. Masked pixels receive zero gradient; a fully masked input
/// yields zero loss and zero gradient.
pub fn ordinal_loss_grad(scores: &OrdinalScores, labels: &OrdinalLabels) -> Result<(f64, Vec<f64>)> {
    let bins = scores.bins();
    check_shape(bins, scores.pixel_count(), labels)?;
    let n = labels.valid_count();
    let mut grad = vec![0.0; scores.as_slice().len()];
    if n == 0 {
        return Ok((0.0, grad));
    }
    let scale = 1.0 / n as f64;
    let mut total = 0.0;
    for i in 0..labels.len() {
        let Some(l) = labels.get(i) else { continue };
        let base = i * 2 * bins;
        for k in 0..bins {
            let j = base + 2 * k;
            let z = scores.as_slice()[j + 1] - scores.as_slice()[j];
            let p = sigmoid(z);
            // dL/dz for -ln P is -(1 - P); for -ln(1 - P) it is P
            let dz = if k < l {
                total += softplus(-z);
                p - 1.0
            } else {
                total += softplus(z);
                p
            };
            grad[j] = -dz * scale;
            grad[j + 1] = dz * scale;
        }
    }
    Ok((total * scale, grad))
}
