//! Radar preprocessing: multi-frame accumulation, projection, height
//! extension, ratio filtering and intrinsic error.

use nalgebra::{Point3, Unit, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{project_point, CameraIntrinsics, DepthMap, PointCloud, RigidTransform};
use crate::metrics::{max_ratio, PairAccumulator};

/// Number of frames accumulated by default: the current one plus four past.
pub const DEFAULT_WINDOW: usize = 5;

/// Hard cap on samples along one extended segment.
const MAX_SEGMENT_SAMPLES: usize = 1 << 16;

/// Tolerance for treating a point as lying on its own extension segment.
const HEIGHT_TOL: f64 = 1e-9;

/// One radar sweep with its mounting and ego pose.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarFrame {
    /// Points in the radar sensor frame.
    pub points: PointCloud,
    /// Seconds.
    pub timestamp: f64,
    pub sensor_to_ego: RigidTransform,
    pub ego_to_global: RigidTransform,
}

/// Maps every frame's points into the camera frame of `frames[target]`
/// (sensor → ego → global → target ego → camera) and concatenates them in
/// frame order.
pub fn accumulate_frames(
    frames: &[RadarFrame],
    target: usize,
    camera_from_ego: &RigidTransform,
) -> Result<PointCloud> {
    if frames.is_empty() {
        return Err(Error::invalid("no radar frames to accumulate"));
    }
    if target >= frames.len() {
        return Err(Error::invalid(format!(
            "target frame {target} out of range for {} frames",
            frames.len()
        )));
    }
    if let Some(w) = frames.windows(2).find(|w| !(w[1].timestamp > w[0].timestamp)) {
        return Err(Error::invalid(format!(
            "frame timestamps must strictly increase ({} then {})",
            w[0].timestamp, w[1].timestamp
        )));
    }
    let camera_from_global = camera_from_ego.compose(&frames[target].ego_to_global.inverse());
    let mut out = PointCloud::new("camera");
    for frame in frames {
        let camera_from_sensor = camera_from_global
            .compose(&frame.ego_to_global)
            .compose(&frame.sensor_to_ego);
        out.append(&frame.points.map_points("camera", |p| camera_from_sensor.apply(p)));
    }
    Ok(out)
}

/// Projects camera-frame points into a sparse depth map; the nearest depth
/// wins when several points share a pixel.
pub fn render_sparse_depth(points: &PointCloud, intr: &CameraIntrinsics) -> DepthMap {
    let mut map = DepthMap::zeros(intr.width, intr.height);
    for p in points.points() {
        if let Some(px) = project_point(p, intr) {
            map.splat_min(px.u, px.v, px.depth);
        }
    }
    map
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightExtensionConfig {
    /// Lowest extended height above ground, meters.
    pub h_min: f64,
    /// Highest extended height above ground, meters.
    pub h_max: f64,
    /// Nominal mounting height of the planar radar returns, meters.
    pub base_height: f64,
}

impl Default for HeightExtensionConfig {
    fn default() -> Self {
        Self {
            h_min: 0.25,
            h_max: 2.0,
            base_height: 0.5,
        }
    }
}

impl HeightExtensionConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = self.h_min.is_finite() && self.h_max.is_finite() && self.base_height.is_finite();
        if !finite {
            return Err(Error::invalid("height extension bounds must be finite"));
        }
        if self.h_min > self.h_max {
            return Err(Error::invalid(format!(
                "height range is inverted: h_min {} > h_max {}",
                self.h_min, self.h_max
            )));
        }
        if self.base_height < self.h_min || self.base_height > self.h_max {
            return Err(Error::invalid(format!(
                "base height {} outside [{}, {}]",
                self.base_height, self.h_min, self.h_max
            )));
        }
        Ok(())
    }

    /// A zero-length range at the base height; extension reduces to plain rendering.
    pub fn degenerate(base_height: f64) -> Self {
        Self {
            h_min: base_height,
            h_max: base_height,
            base_height,
        }
    }
}

/// Ground plane in camera coordinates: `height(p) = up · p + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundPlane {
    up: Unit<Vector3<f64>>,
    offset: f64,
}

impl GroundPlane {
    /// Plane `y = ground_y` for a camera whose y axis points straight down.
    pub fn upright(ground_y: f64) -> Self {
        Self {
            up: Unit::new_unchecked(Vector3::new(0.0, -1.0, 0.0)),
            offset: ground_y,
        }
    }

    /// Plane with upward normal `up` (normalized here) passing at signed
    /// height `offset` below the camera origin.
    pub fn new(up: Vector3<f64>, offset: f64) -> Result<Self> {
        let up = Unit::try_new(up, 1e-12).ok_or_else(|| Error::invalid("ground normal is zero"))?;
        if !offset.is_finite() {
            return Err(Error::invalid("ground offset must be finite"));
        }
        Ok(Self { up, offset })
    }

    pub fn height(&self, p: &Point3<f64>) -> f64 {
        self.up.dot(&p.coords) + self.offset
    }

    pub fn up(&self) -> &Vector3<f64> {
        &self.up
    }
}

/// Renders each point as a vertical segment spanning `[h_min, h_max]` above
/// the ground plane `y = ground_y` of an upright camera.
pub fn extend_height(
    points: &PointCloud,
    intr: &CameraIntrinsics,
    cfg: &HeightExtensionConfig,
    ground_y: f64,
) -> Result<DepthMap> {
    extend_height_on(points, intr, cfg, &GroundPlane::upright(ground_y))
}

/// Height extension against an arbitrary ground plane. Every sample is
/// splatted with its own camera-frame depth; collisions keep the minimum.
pub fn extend_height_on(
    points: &PointCloud,
    intr: &CameraIntrinsics,
    cfg: &HeightExtensionConfig,
    ground: &GroundPlane,
) -> Result<DepthMap> {
    cfg.validate()?;
    let mut map = DepthMap::zeros(intr.width, intr.height);
    let up = *ground.up();
    for p in points.points() {
        let h_p = ground.height(p);
        if !h_p.is_finite() {
            continue;
        }
        let foot = p - up * h_p;
        let on_segment = h_p >= cfg.h_min - HEIGHT_TOL && h_p <= cfg.h_max + HEIGHT_TOL;
        if on_segment {
            splat(&mut map, p, intr);
        }
        for h in segment_heights(&foot, &up, cfg, intr) {
            if on_segment && (h - h_p).abs() <= HEIGHT_TOL {
                continue;
            }
            splat(&mut map, &(foot + up * h), intr);
        }
    }
    Ok(map)
}

fn splat(map: &mut DepthMap, p: &Point3<f64>, intr: &CameraIntrinsics) {
    if let Some(px) = project_point(p, intr) {
        map.splat_min(px.u, px.v, px.depth);
    }
}

/// Heights along the segment, dense enough that consecutive projections are
/// at most one pixel row apart.
fn segment_heights(
    foot: &Point3<f64>,
    up: &Vector3<f64>,
    cfg: &HeightExtensionConfig,
    intr: &CameraIntrinsics,
) -> Vec<f64> {
    let span = cfg.h_max - cfg.h_min;
    if span <= 0.0 {
        return vec![cfg.h_min];
    }
    let row = |h: f64| intr.project_continuous(&(foot + up * h)).map(|(_, v)| v);
    let mut steps = match (row(cfg.h_min), row(cfg.h_max)) {
        (Some(a), Some(b)) => ((a - b).abs().ceil() as usize).max(1),
        _ => 1,
    };
    loop {
        let heights: Vec<f64> = (0..=steps)
            .map(|i| {
                if i == steps {
                    cfg.h_max
                } else {
                    cfg.h_min + span * i as f64 / steps as f64
                }
            })
            .collect();
        let dense = heights.windows(2).all(|w| match (row(w[0]), row(w[1])) {
            (Some(a), Some(b)) => (a - b).abs() <= 1.0,
            _ => true,
        });
        if dense || steps >= MAX_SEGMENT_SAMPLES {
            return heights;
        }
        steps *= 2;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    /// Largest accepted `max(radar/ref, ref/radar)`, exclusive.
    pub ratio_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        // δ₂ criterion
        Self {
            ratio_threshold: 1.25 * 1.25,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio_threshold.is_finite() && self.ratio_threshold > 1.0) {
            return Err(Error::invalid(format!(
                "ratio threshold must be > 1, got {}",
                self.ratio_threshold
            )));
        }
        Ok(())
    }
}

/// Keeps radar pixels whose depth agrees with a valid reference pixel within
/// the ratio threshold; everything else is zeroed.
pub fn filter_by_ratio(radar: &DepthMap, reference: &DepthMap, cfg: &FilterConfig) -> Result<DepthMap> {
    cfg.validate()?;
    radar.ensure_same_dims(reference)?;
    let data = radar
        .data()
        .iter()
        .zip(reference.data())
        .map(|(&r, &g)| {
            if r > 0.0 && g > 0.0 && max_ratio(r, g) < cfg.ratio_threshold {
                r
            } else {
                0.0
            }
        })
        .collect();
    DepthMap::from_vec(radar.width(), radar.height(), data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntrinsicErrorReport {
    pub delta1: f64,
    /// Meters.
    pub rmse: f64,
    /// Valid radar pixels.
    pub point_count: usize,
    /// `point_count` relative to the baseline count.
    pub retained_fraction: f64,
}

/// Error of sparse radar depth against a reference map, over pixels valid in
/// both. `baseline_count` defaults to the radar's own point count.
pub fn intrinsic_error(
    radar: &DepthMap,
    reference: &DepthMap,
    baseline_count: Option<usize>,
) -> Result<IntrinsicErrorReport> {
    radar.ensure_same_dims(reference)?;
    let point_count = radar.count_valid();
    let retained_fraction = match baseline_count {
        None => 1.0,
        Some(0) => return Err(Error::invalid("baseline point count must be positive")),
        Some(b) => point_count as f64 / b as f64,
    };
    let mut acc = PairAccumulator::default();
    for (&r, &g) in radar.data().iter().zip(reference.data()) {
        if r > 0.0 && g > 0.0 {
            acc.add(r, g);
        }
    }
    let report = acc.report().ok_or(Error::EmptyOverlap)?;
    Ok(IntrinsicErrorReport {
        delta1: report.delta1,
        rmse: report.rmse,
        point_count,
        retained_fraction,
    })
}

/// Settings for the full accumulate → extend → filter chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    /// Frames accumulated, counting the target.
    pub window: usize,
    /// `None` renders the planar points directly.
    pub extension: Option<HeightExtensionConfig>,
    /// Ground plane height in the camera frame (upright camera).
    pub ground_y: f64,
    /// `None` skips filtering.
    pub filter: Option<FilterConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            extension: Some(HeightExtensionConfig::default()),
            ground_y: 1.5,
            filter: Some(FilterConfig::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub depth: DepthMap,
    /// Point count before filtering.
    pub unfiltered_count: usize,
    /// Present when a reference map was supplied.
    pub report: Option<IntrinsicErrorReport>,
}

/// Runs the preprocessing chain for `frames[target]`, using up to
/// `cfg.window` frames ending at the target.
pub fn run_pipeline(
    frames: &[RadarFrame],
    target: usize,
    camera_from_ego: &RigidTransform,
    intr: &CameraIntrinsics,
    cfg: &PipelineConfig,
    reference: Option<&DepthMap>,
) -> Result<PipelineOutput> {
    if cfg.window == 0 {
        return Err(Error::invalid("accumulation window must be >= 1"));
    }
    if target >= frames.len() {
        return Err(Error::invalid(format!(
            "target frame {target} out of range for {} frames",
            frames.len()
        )));
    }
    if cfg.filter.is_some() && reference.is_none() {
        return Err(Error::invalid("filtering requires a reference depth map"));
    }
    let first = (target + 1).saturating_sub(cfg.window);
    let window = &frames[first..=target];
    let cloud = accumulate_frames(window, window.len() - 1, camera_from_ego)?;
    let rendered = match &cfg.extension {
        Some(ext) => extend_height(&cloud, intr, ext, cfg.ground_y)?,
        None => render_sparse_depth(&cloud, intr),
    };
    let unfiltered_count = rendered.count_valid();
    let depth = match (&cfg.filter, reference) {
        (Some(f), Some(r)) => filter_by_ratio(&rendered, r, f)?,
        _ => rendered,
    };
    let report = match reference {
        Some(r) => Some(intrinsic_error(&depth, r, Some(unfiltered_count.max(1)))?),
        None => None,
    };
    Ok(PipelineOutput {
        depth,
        unfiltered_count,
        report,
    })
}
