//! Masked depth evaluation metrics.

use crate::error::{Error, Result};
use crate::geometry::DepthMap;

/// Base of the δ threshold family: δᵢ counts ratios below `1.25^i`.
pub const DELTA_BASE: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub rmse: f64,
    pub abs_rel: f64,
    pub valid_pixel_count: usize,
}

/// Inclusive ground-truth depth window used to build the evaluation mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthRange {
    pub min: f64,
    pub max: f64,
}

impl DepthRange {
    pub const DRIVING: DepthRange = DepthRange { min: 1.0, max: 80.0 };

    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::invalid(format!("depth range needs min < max, got [{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, d: f64) -> bool {
        d >= self.min && d <= self.max
    }

    /// Accepts every positive depth.
    pub fn unbounded() -> Self {
        Self {
            min: f64::MIN_POSITIVE,
            max: f64::MAX,
        }
    }
}

/// `max(a/b, b/a)`; infinite when either side is zero.
#[inline]
pub fn max_ratio(a: f64, b: f64) -> f64 {
    (a / b).max(b / a)
}

/// Running sums over masked pixel pairs; summation is in pixel order.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct PairAccumulator {
    pub count: usize,
    pub hits: [usize; 3],
    pub sq_err: f64,
    pub abs_rel: f64,
}

impl PairAccumulator {
    #[inline]
    pub fn add(&mut self, pred: f64, gt: f64) {
        let ratio = max_ratio(pred, gt);
        let mut thr = DELTA_BASE;
        for hit in &mut self.hits {
            if ratio < thr {
                *hit += 1;
            }
            thr *= DELTA_BASE;
        }
        let diff = pred - gt;
        self.sq_err += diff * diff;
        self.abs_rel += diff.abs() / gt;
        self.count += 1;
    }

    pub fn report(&self) -> Option<EvalReport> {
        if self.count == 0 {
            return None;
        }
        let n = self.count as f64;
        Some(EvalReport {
            delta1: self.hits[0] as f64 / n,
            delta2: self.hits[1] as f64 / n,
            delta3: self.hits[2] as f64 / n,
            rmse: (self.sq_err / n).sqrt(),
            abs_rel: self.abs_rel / n,
            valid_pixel_count: self.count,
        })
    }
}

/// Compares `pred` against `gt` over pixels where `gt` is valid and inside
/// `range`. Predictions are used as-is, including zeros.
pub fn evaluate(pred: &DepthMap, gt: &DepthMap, range: DepthRange) -> Result<EvalReport> {
    pred.ensure_same_dims(gt)?;
    let mut acc = PairAccumulator::default();
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        if g > 0.0 && range.contains(g) {
            acc.add(p, g);
        }
    }
    acc.report().ok_or(Error::EmptyMask)
}

/// Number of pixels carrying a measurement.
pub fn count_points(map: &DepthMap) -> usize {
    map.count_valid()
}
