//! Guidance-weighted dense interpolation of sparse depth ("colorization").
//!
//! Every non-seed pixel is asked to equal the weighted mean of its
//! neighbors, `D(r) = Σ_s w_rs D(s)`, with weights
//! `w_rs ∝ exp(-(Y(r) - Y(s))² / (2 σ_r²))` that sum to one over the
//! neighborhood. `σ_r²` is the luminance variance of the window around `r`,
//! floored at `epsilon_var`. Seed pixels are eliminated from the unknowns, so
//! they are reproduced exactly. The remaining square system `A x = b` is
//! solved in the least-squares sense through its normal equations
//! `AᵀA x = Aᵀb`, which are symmetric positive definite, with
//! Jacobi-preconditioned conjugate gradients.

use crate::error::{Error, Result};
use crate::geometry::DepthMap;

/// Scalar guidance image with luminance in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceImage {
    width: usize,
    height: usize,
    luminance: Vec<f64>,
}

impl GuidanceImage {
    pub fn new(width: usize, height: usize, luminance: Vec<f64>) -> Result<Self> {
        if luminance.len() != width * height {
            return Err(Error::invalid(format!(
                "guidance buffer has {} values, expected {}x{}",
                luminance.len(),
                width,
                height
            )));
        }
        if let Some(y) = luminance.iter().find(|y| !(**y >= 0.0 && **y <= 1.0)) {
            return Err(Error::invalid(format!("luminance {y} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            luminance,
        })
    }

    pub fn uniform(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Luminance `0.299 R + 0.587 G + 0.114 B` of interleaved 8-bit RGB.
    pub fn from_rgb8(width: usize, height: usize, rgb: &[u8]) -> Result<Self> {
        if rgb.len() != 3 * width * height {
            return Err(Error::invalid("RGB buffer size does not match dimensions"));
        }
        let luminance = rgb
            .chunks_exact(3)
            .map(|c| (0.299 * c[0] as f64 + 0.587 * c[1] as f64 + 0.114 * c[2] as f64) / 255.0)
            .map(|y| y.clamp(0.0, 1.0))
            .collect();
        Self::new(width, height, luminance)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn luminance(&self) -> &[f64] {
        &self.luminance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighborhood {
    Four,
    Eight,
}

impl Neighborhood {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Neighborhood::Four => &[(0, -1), (-1, 0), (1, 0), (0, 1)],
            Neighborhood::Eight => &[
                (-1, -1),
                (0, -1),
                (1, -1),
                (-1, 0),
                (1, 0),
                (-1, 1),
                (0, 1),
                (1, 1),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationConfig {
    pub neighborhood: Neighborhood,
    /// Floor on the local luminance variance.
    pub epsilon_var: f64,
    /// Relative residual of the normal equations at which CG stops.
    pub solver_tolerance: f64,
    /// `None` means ten times the pixel count.
    pub max_iterations: Option<usize>,
}

impl Default for InterpolationConfig {
    fn default() -> Self {
        Self {
            neighborhood: Neighborhood::Eight,
            epsilon_var: 1e-4,
            solver_tolerance: 1e-6,
            max_iterations: None,
        }
    }
}

impl InterpolationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.solver_tolerance.is_finite() && self.solver_tolerance > 0.0) {
            return Err(Error::invalid(format!(
                "solver tolerance must be positive, got {}",
                self.solver_tolerance
            )));
        }
        if !(self.epsilon_var.is_finite() && self.epsilon_var > 0.0) {
            return Err(Error::invalid(format!(
                "variance floor must be positive, got {}",
                self.epsilon_var
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::invalid("max_iterations must be >= 1"));
        }
        Ok(())
    }
}

/// Normalized neighbor weights of every pixel in compressed-row layout.
#[derive(Debug, Clone)]
pub struct AffinityWeights {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
}

impl AffinityWeights {
    pub fn compute(guide: &GuidanceImage, neighborhood: Neighborhood, epsilon_var: f64) -> Self {
        let (w, h) = (guide.width, guide.height);
        let y = &guide.luminance;
        let mut offsets = Vec::with_capacity(w * h + 1);
        let mut neighbors = Vec::with_capacity(w * h * neighborhood.offsets().len());
        let mut weights = Vec::with_capacity(neighbors.capacity());
        offsets.push(0);
        let mut window = Vec::with_capacity(9);
        for v in 0..h {
            for u in 0..w {
                let r = v * w + u;
                window.clear();
                let start = neighbors.len();
                for &(du, dv) in neighborhood.offsets() {
                    let (nu, nv) = (u as isize + du, v as isize + dv);
                    if nu >= 0 && nv >= 0 && (nu as usize) < w && (nv as usize) < h {
                        neighbors.push(nv as usize * w + nu as usize);
                    }
                }
                window.push(y[r]);
                window.extend(neighbors[start..].iter().map(|&s| y[s]));
                let mean = window.iter().sum::<f64>() / window.len() as f64;
                let var = window.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / window.len() as f64;
                let two_sigma2 = 2.0 * var.max(epsilon_var);
                let sq: Vec<f64> = neighbors[start..].iter().map(|&s| (y[r] - y[s]).powi(2)).collect();
                // shift by the smallest exponent so the largest weight is 1
                let min_sq = sq.iter().copied().fold(f64::INFINITY, f64::min);
                let raw: Vec<f64> = sq.iter().map(|d| (-(d - min_sq) / two_sigma2).exp()).collect();
                let total: f64 = raw.iter().sum();
                weights.extend(raw.iter().map(|x| x / total));
                offsets.push(neighbors.len());
            }
        }
        Self {
            offsets,
            neighbors,
            weights,
        }
    }

    /// `(neighbor index, weight)` pairs of pixel `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[r]..self.offsets[r + 1];
        self.neighbors[span.clone()]
            .iter()
            .copied()
            .zip(self.weights[span].iter().copied())
    }
}

/// Dense result plus solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolation {
    pub depth: DepthMap,
    pub iterations: usize,
    /// Final relative residual of the normal equations.
    pub relative_residual: f64,
}

/// Square system over the free pixels, in compressed-row layout.
struct FreeSystem {
    n: usize,
    row_offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    rhs: Vec<f64>,
}

impl FreeSystem {
    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let span = self.row_offsets[r]..self.row_offsets[r + 1];
            *o = self.cols[span.clone()]
                .iter()
                .zip(&self.vals[span])
                .map(|(&c, &a)| a * x[c])
                .sum();
        }
    }

    fn mul_transpose(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &xr) in x.iter().enumerate() {
            let span = self.row_offsets[r]..self.row_offsets[r + 1];
            for (&c, &a) in self.cols[span.clone()].iter().zip(&self.vals[span]) {
                out[c] += a * xr;
            }
        }
    }
}

fn check_inputs(seeds: &DepthMap, guide: &GuidanceImage) -> Result<()> {
    if seeds.width() != guide.width || seeds.height() != guide.height {
        return Err(Error::DimensionMismatch {
            left_width: seeds.width(),
            left_height: seeds.height(),
            right_width: guide.width,
            right_height: guide.height,
        });
    }
    Ok(())
}

/// Fills every pixel of `seeds` using the guidance image.
pub fn interpolate_dense(seeds: &DepthMap, guide: &GuidanceImage, cfg: &InterpolationConfig) -> Result<Interpolation> {
    cfg.validate()?;
    check_inputs(seeds, guide)?;
    let npix = seeds.data().len();
    let seed_count = seeds.count_valid();
    if seed_count == 0 {
        return Err(Error::invalid("no seed pixels to interpolate from"));
    }
    let weights = AffinityWeights::compute(guide, cfg.neighborhood, cfg.epsilon_var);

    let mut unknown = vec![usize::MAX; npix];
    let mut free = Vec::with_capacity(npix - seed_count);
    for (i, slot) in unknown.iter_mut().enumerate() {
        if !seeds.is_valid(i) {
            *slot = free.len();
            free.push(i);
        }
    }
    let mut out = seeds.data().to_vec();
    if free.is_empty() {
        return Ok(Interpolation {
            depth: seeds.clone(),
            iterations: 0,
            relative_residual: 0.0,
        });
    }

    let mut sys = FreeSystem {
        n: free.len(),
        row_offsets: vec![0],
        cols: Vec::new(),
        vals: Vec::new(),
        rhs: Vec::with_capacity(free.len()),
    };
    for (row, &r) in free.iter().enumerate() {
        sys.cols.push(row);
        sys.vals.push(1.0);
        let mut b = 0.0;
        for (s, w) in weights.row(r) {
            if seeds.is_valid(s) {
                b += w * seeds.data()[s];
            } else {
                sys.cols.push(unknown[s]);
                sys.vals.push(-w);
            }
        }
        sys.rhs.push(b);
        sys.row_offsets.push(sys.cols.len());
    }

    let seed_mean = seeds.data().iter().filter(|d| **d > 0.0).sum::<f64>() / seed_count as f64;
    let max_iterations = cfg.max_iterations.unwrap_or(10 * npix);
    let (x, iterations, relative_residual) = solve_normal_equations(&sys, seed_mean, cfg.solver_tolerance, max_iterations)?;
    for (&i, &xi) in free.iter().zip(&x) {
        out[i] = xi;
    }
    let depth = DepthMap::from_vec(seeds.width(), seeds.height(), out)?;
    Ok(Interpolation {
        depth,
        iterations,
        relative_residual,
    })
}

/// Jacobi-preconditioned CG on `AᵀA x = Aᵀb`, starting from a constant field.
fn solve_normal_equations(sys: &FreeSystem, start: f64, tol: f64, max_iterations: usize) -> Result<(Vec<f64>, usize, f64)> {
    let n = sys.n;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    // diag(AᵀA) = squared column norms
    let mut diag = vec![0.0; n];
    for (&c, &a) in sys.cols.iter().zip(&sys.vals) {
        diag[c] += a * a;
    }
    let mut tmp = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    sys.mul_transpose(&sys.rhs, &mut rhs);
    let rhs_norm = dot(&rhs, &rhs).sqrt();

    let apply = |x: &[f64], tmp: &mut [f64], out: &mut [f64]| {
        sys.mul(x, tmp);
        sys.mul_transpose(tmp, out);
    };

    let mut x = vec![start; n];
    let mut r = vec![0.0; n];
    apply(&x, &mut tmp, &mut r);
    r.iter_mut().zip(&rhs).for_each(|(ri, bi)| *ri = bi - *ri);
    let scale = if rhs_norm > 0.0 { rhs_norm } else { 1.0 };
    let mut res = dot(&r, &r).sqrt() / scale;
    if res <= tol {
        return Ok((x, 0, res));
    }
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for it in 1..=max_iterations {
        apply(&p, &mut tmp, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::NotConverged {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        res = dot(&r, &r).sqrt() / scale;
        if res <= tol {
            return Ok((x, it, res));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations: max_iterations,
        residual: res,
    })
}

/// Objective value of a candidate field and how far it strays from the seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    /// `Σ_{r free} (D(r) - Σ_s w_rs D(s))²`, meters².
    pub value: f64,
    /// Largest `|candidate - seed|` over seed pixels.
    pub max_seed_mismatch: f64,
}

/// Evaluates the interpolation objective at `candidate`. Seed pixels do not
/// contribute rows; their candidate values still enter as neighbors.
pub fn system_residual(
    seeds: &DepthMap,
    guide: &GuidanceImage,
    candidate: &DepthMap,
    cfg: &InterpolationConfig,
) -> Result<Objective> {
    check_inputs(seeds, guide)?;
    seeds.ensure_same_dims(candidate)?;
    let weights = AffinityWeights::compute(guide, cfg.neighborhood, cfg.epsilon_var);
    let d = candidate.data();
    let mut value = 0.0;
    let mut max_seed_mismatch = 0.0f64;
    for r in 0..d.len() {
        if seeds.is_valid(r) {
            max_seed_mismatch = max_seed_mismatch.max((d[r] - seeds.data()[r]).abs());
            continue;
        }
        let mean: f64 = weights.row(r).map(|(s, w)| w * d[s]).sum();
        value += (d[r] - mean).powi(2);
    }
    Ok(Objective {
        value,
        max_seed_mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_seeds_give_constant_field() {
        let mut seeds = DepthMap::zeros(6, 5);
        for (u, v) in [(0, 0), (5, 4), (2, 3)] {
            seeds.set(u, v, 7.3).unwrap();
        }
        let luminance: Vec<f64> = (0..30).map(|i| ((i * 7) % 11) as f64 / 10.0).collect();
        let guide = GuidanceImage::new(6, 5, luminance).unwrap();
        let out = interpolate_dense(&seeds, &guide, &InterpolationConfig::default()).unwrap();
        assert!(out.depth.data().iter().all(|d| (d - 7.3).abs() < 1e-6));
        let obj = system_residual(&seeds, &guide, &DepthMap::filled(6, 5, 7.3).unwrap(), &InterpolationConfig::default()).unwrap();
        assert!(obj.value.abs() < 1e-24);
        assert_eq!(obj.max_seed_mismatch, 0.0);
    }

    #[test]
    fn strip_interpolates_linearly() {
        let mut seeds = DepthMap::zeros(5, 1);
        seeds.set(0, 0, 1.0).unwrap();
        seeds.set(4, 0, 5.0).unwrap();
        let guide = GuidanceImage::uniform(5, 1, 0.5).unwrap();
        for neighborhood in [Neighborhood::Four, Neighborhood::Eight] {
            let cfg = InterpolationConfig { neighborhood, ..Default::default() };
            let out = interpolate_dense(&seeds, &guide, &cfg).unwrap();
            for (got, want) in out.depth.data().iter().zip([1.0, 2.0, 3.0, 4.0, 5.0]) {
                assert!((got - want).abs() < 1e-6, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn seed_mismatch_reported_separately() {
        let mut seeds = DepthMap::zeros(3, 1);
        seeds.set(0, 0, 2.0).unwrap();
        let guide = GuidanceImage::uniform(3, 1, 0.2).unwrap();
        let cand = DepthMap::filled(3, 1, 3.0).unwrap();
        let obj = system_residual(&seeds, &guide, &cand, &InterpolationConfig::default()).unwrap();
        assert_eq!(obj.value, 0.0);
        assert_eq!(obj.max_seed_mismatch, 1.0);
    }

    #[test]
    fn errors() {
        let guide = GuidanceImage::uniform(3, 3, 0.5).unwrap();
        let empty = DepthMap::zeros(3, 3);
        assert!(matches!(
            interpolate_dense(&empty, &guide, &InterpolationConfig::default()),
            Err(Error::InvalidArgument(_))
        ));
        let wrong = DepthMap::filled(2, 3, 1.0).unwrap();
        assert!(matches!(
            interpolate_dense(&wrong, &guide, &InterpolationConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut seeds = DepthMap::zeros(20, 20);
        seeds.set(0, 0, 1.0).unwrap();
        seeds.set(19, 19, 50.0).unwrap();
        let guide = GuidanceImage::uniform(20, 20, 0.5).unwrap();
        let cfg = InterpolationConfig { max_iterations: Some(2), ..Default::default() };
        match interpolate_dense(&seeds, &guide, &cfg) {
            Err(Error::NotConverged { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-6);
            }
            other => panic!("expected convergence failure, got {other:?}"),
        }
        assert!(GuidanceImage::new(1, 1, vec![1.5]).is_err());
    }

    #[test]
    fn weights_are_normalized() {
        let lum: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let guide = GuidanceImage::new(4, 3, lum).unwrap();
        let w = AffinityWeights::compute(&guide, Neighborhood::Eight, 1e-4);
        for r in 0..12 {
            let total: f64 = w.row(r).map(|(_, x)| x).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(w.row(r).all(|(_, x)| x > 0.0));
        }
        assert_eq!(w.row(0).count(), 3);
        assert_eq!(w.row(5).count(), 8);
    }

    #[test]
    fn rgb_luminance() {
        let g = GuidanceImage::from_rgb8(2, 1, &[255, 255, 255, 255, 0, 0]).unwrap();
        assert!((g.luminance()[0] - 1.0).abs() < 1e-12);
        assert!((g.luminance()[1] - 0.299).abs() < 1e-12);
    }
}
