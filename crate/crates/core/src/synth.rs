//! Deterministic synthetic street scenes.
//!
//! A scene is a ground plane plus axis-aligned boxes, all in a camera-aligned
//! frame (+x right, +y down, +z forward) whose origin is the camera. The
//! generator renders exact dense depth, beam-structured lidar samples, a
//! flat-shaded guidance image and planar noisy radar sweeps.

use std::fmt::Write as _;

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthMap, PointAttributes, PointCloud, RigidTransform};
use crate::interp::GuidanceImage;
use crate::radar::RadarFrame;

/// Widest row stride used when thinning lidar into beams.
const MAX_BEAM_STRIDE: usize = 4;

/// Axis-aligned box; `extent` holds full edge lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: Point3<f64>,
    pub extent: Vector3<f64>,
}

impl Obstacle {
    fn min(&self) -> Point3<f64> {
        self.center - self.extent / 2.0
    }

    fn max(&self) -> Point3<f64> {
        self.center + self.extent / 2.0
    }

    /// Entry distance of `origin + t dir` through the slabs, if positive.
    fn intersect(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let (lo, hi) = (self.min(), self.max());
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        for axis in 0..3 {
            let (o, d) = (origin[axis], dir[axis]);
            if d == 0.0 {
                if o < lo[axis] || o > hi[axis] {
                    return None;
                }
                continue;
            }
            let (mut t0, mut t1) = ((lo[axis] - o) / d, (hi[axis] - o) / d);
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_near = t_near.max(t0);
            t_far = t_far.min(t1);
            if t_near > t_far {
                return None;
            }
        }
        if t_far <= 0.0 {
            return None;
        }
        // origin inside the box: the surface is where the ray leaves
        Some(if t_near > 0.0 { t_near } else { t_far })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// Camera height above the ground plane; the plane is `y = ground_height`.
    pub ground_height: f64,
    pub obstacles: Vec<Obstacle>,
    /// Hits deeper than this are discarded.
    pub far_plane: f64,
}

/// What a ray hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Surface {
    Ground,
    Obstacle(usize),
}

impl Scene {
    pub fn new(ground_height: f64, obstacles: Vec<Obstacle>, far_plane: f64) -> Result<Self> {
        let scene = Self {
            ground_height,
            obstacles,
            far_plane,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ground_height.is_finite() && self.ground_height > 0.0) {
            return Err(Error::invalid(format!(
                "ground height must be positive, got {}",
                self.ground_height
            )));
        }
        if !(self.far_plane.is_finite() && self.far_plane > 0.0) {
            return Err(Error::invalid(format!("far plane must be positive, got {}", self.far_plane)));
        }
        for (i, b) in self.obstacles.iter().enumerate() {
            if b.extent.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
                return Err(Error::invalid(format!("box {i} has a non-positive extent")));
            }
            if !(b.min().z > 0.0) {
                return Err(Error::invalid(format!("box {i} is not entirely in front of the camera")));
            }
        }
        Ok(())
    }

    /// The same world seen from a camera displaced by `offset`.
    pub fn shifted(&self, offset: &Vector3<f64>) -> Scene {
        Scene {
            ground_height: self.ground_height - offset.y,
            obstacles: self
                .obstacles
                .iter()
                .map(|b| Obstacle {
                    center: b.center - offset,
                    extent: b.extent,
                })
                .collect(),
            far_plane: self.far_plane,
        }
    }

    /// Nearest hit along `origin + t dir`, `t > 0`.
    pub fn cast(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<(f64, Surface)> {
        let mut best: Option<(f64, Surface)> = None;
        if dir.y > 0.0 && origin.y < self.ground_height {
            best = Some(((self.ground_height - origin.y) / dir.y, Surface::Ground));
        }
        for (i, b) in self.obstacles.iter().enumerate() {
            if let Some(t) = b.intersect(origin, dir) {
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, Surface::Obstacle(i)));
                }
            }
        }
        best
    }

    /// Parses the line-oriented scene description (`ground`, `box`, `far`).
    pub fn parse(text: &str) -> Result<Scene> {
        let mut ground = None;
        let mut far = 80.0;
        let mut obstacles = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let key = fields.next().unwrap_or_default();
            let nums = fields
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::invalid(format!("line {lineno}: '{f}' is not a number")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let expect = |n: usize| {
                if nums.len() == n {
                    Ok(())
                } else {
                    Err(Error::invalid(format!(
                        "line {lineno}: '{key}' takes {n} numbers, got {}",
                        nums.len()
                    )))
                }
            };
            match key {
                "ground" => {
                    expect(1)?;
                    ground = Some(nums[0]);
                }
                "far" => {
                    expect(1)?;
                    far = nums[0];
                }
                "box" => {
                    expect(6)?;
                    obstacles.push(Obstacle {
                        center: Point3::new(nums[0], nums[1], nums[2]),
                        extent: Vector3::new(nums[3], nums[4], nums[5]),
                    });
                }
                other => return Err(Error::invalid(format!("line {lineno}: unknown record '{other}'"))),
            }
        }
        let ground = ground.ok_or_else(|| Error::invalid("scene has no 'ground' record"))?;
        Scene::new(ground, obstacles, far).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::invalid(format!("scene: {m}")),
            e => e,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ground {}", self.ground_height);
        let _ = writeln!(s, "far {}", self.far_plane);
        for b in &self.obstacles {
            let _ = writeln!(
                s,
                "box {} {} {} {} {} {}",
                b.center.x, b.center.y, b.center.z, b.extent.x, b.extent.y, b.extent.z
            );
        }
        s
    }

    /// A straight street: parked cars and vans on both sides in front of
    /// fences, poles, building fronts and a truck far ahead in the lane.
    /// Camera 1.5 m above the ground.
    pub fn default_street() -> Scene {
        let g = 1.5;
        let on_ground = |x: f64, z: f64, w: f64, h: f64, l: f64| Obstacle {
            center: Point3::new(x, g - h / 2.0, z),
            extent: Vector3::new(w, h, l),
        };
        let mut obstacles = Vec::new();
        for (z, h) in [(9.0, 1.5), (17.0, 2.1), (26.0, 1.5), (38.0, 2.3), (52.0, 1.6), (66.0, 1.5)] {
            obstacles.push(on_ground(3.6, z, 1.8, h, 4.3));
        }
        for (z, h) in [(13.0, 2.0), (29.0, 1.5), (45.0, 2.2), (61.0, 1.6)] {
            obstacles.push(on_ground(-3.8, z, 1.9, h, 4.6));
        }
        for z in [21.0, 34.0, 48.0, 58.0, 72.0] {
            obstacles.push(on_ground(5.6, z, 0.3, 4.0, 0.3));
        }
        obstacles.push(on_ground(6.5, 70.0, 0.4, 2.4, 130.0));
        obstacles.push(on_ground(-6.5, 70.0, 0.4, 2.6, 130.0));
        obstacles.push(on_ground(9.5, 70.0, 1.0, 9.0, 130.0));
        obstacles.push(on_ground(-9.5, 70.0, 1.0, 12.0, 130.0));
        obstacles.push(on_ground(0.4, 74.0, 2.5, 3.4, 8.0));
        Scene {
            ground_height: g,
            obstacles,
            far_plane: 80.0,
        }
    }
}

/// Camera ray through the center of pixel `(u, v)`, normalized to unit depth.
fn pixel_ray(intr: &CameraIntrinsics, u: usize, v: usize) -> Vector3<f64> {
    Vector3::new(
        (u as f64 + 0.5 - intr.cx) / intr.fx,
        (v as f64 + 0.5 - intr.cy) / intr.fy,
        1.0,
    )
}

fn for_each_pixel_hit(scene: &Scene, intr: &CameraIntrinsics, mut f: impl FnMut(usize, usize, Option<(f64, Surface)>)) {
    let origin = Point3::origin();
    for v in 0..intr.height {
        for u in 0..intr.width {
            let hit = scene
                .cast(&origin, &pixel_ray(intr, u, v))
                .filter(|(depth, _)| *depth <= scene.far_plane);
            f(u, v, hit);
        }
    }
}

/// Exact depth through every pixel center; misses and hits beyond the far
/// plane stay 0.
pub fn render_gt_depth(scene: &Scene, intr: &CameraIntrinsics) -> DepthMap {
    let mut map = DepthMap::zeros(intr.width, intr.height);
    for_each_pixel_hit(scene, intr, |u, v, hit| {
        if let Some((depth, _)) = hit {
            map.splat_min(u, v, depth);
        }
    });
    map
}

/// Flat-shaded luminance: one gray level per obstacle, a striped ground and
/// a bright sky, so depth edges coincide with luminance edges.
pub fn render_guidance(scene: &Scene, intr: &CameraIntrinsics) -> GuidanceImage {
    let mut lum = vec![0.0; intr.width * intr.height];
    for_each_pixel_hit(scene, intr, |u, v, hit| {
        lum[v * intr.width + u] = match hit {
            None => 0.9,
            Some((depth, Surface::Ground)) => 0.35 + 0.05 * ((depth / 4.0).floor() as i64 % 2) as f64,
            Some((_, Surface::Obstacle(i))) => 0.1 + 0.06 * ((i * 7) % 10) as f64,
        };
    });
    GuidanceImage::new(intr.width, intr.height, lum).expect("luminance stays within [0, 1]")
}

/// Thins `gt` into beam-like rows: every `stride`-th row (random phase) is a
/// beam, and each valid pixel on a beam survives with probability
/// `density * stride`, so the expected kept fraction is `density`.
pub fn sample_lidar(gt: &DepthMap, density: f64, seed: u64) -> Result<DepthMap> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::invalid(format!("lidar density must lie in (0, 1], got {density}")));
    }
    let stride = ((1.0 / density).floor() as usize).clamp(1, MAX_BEAM_STRIDE);
    let keep = (density * stride as f64).min(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase = rng.gen_range(0..stride);
    let mut out = DepthMap::zeros(gt.width(), gt.height());
    for v in (phase..gt.height()).step_by(stride) {
        for u in 0..gt.width() {
            let d = gt.get(u, v);
            // draw for every pixel so the stream does not depend on content
            let r: f64 = rng.gen();
            if d > 0.0 && (keep >= 1.0 || r < keep) {
                out.splat_min(u, v, d);
            }
        }
    }
    Ok(out)
}

/// Planar automotive radar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarModel {
    /// Scan plane height above ground, meters.
    pub plane_height: f64,
    /// Range noise standard deviation, meters.
    pub depth_noise_sigma: f64,
    /// Additional range noise proportional to range.
    pub range_noise_ratio: f64,
    /// Beam spacing, radians.
    pub azimuth_step: f64,
    pub dropout_prob: f64,
    /// Probability that a return is a multipath ghost reported farther than
    /// the true surface.
    pub ghost_prob: f64,
    pub seed: u64,
}

impl Default for RadarModel {
    fn default() -> Self {
        Self {
            plane_height: 0.5,
            depth_noise_sigma: 0.3,
            range_noise_ratio: 0.04,
            azimuth_step: 0.02,
            dropout_prob: 0.6,
            ghost_prob: 0.2,
            seed: 0,
        }
    }
}

impl RadarModel {
    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !(self.depth_noise_sigma >= 0.0 && self.range_noise_ratio >= 0.0) {
            return Err(Error::invalid("radar noise levels must be non-negative"));
        }
        if !(self.azimuth_step.is_finite() && self.azimuth_step > 0.0) {
            return Err(Error::invalid("azimuth step must be positive"));
        }
        if !(prob(self.dropout_prob) && prob(self.ghost_prob)) {
            return Err(Error::invalid("radar probabilities must lie in [0, 1]"));
        }
        if !self.plane_height.is_finite() {
            return Err(Error::invalid("radar plane height must be finite"));
        }
        Ok(())
    }

    /// Noise-free, loss-free variant of this model.
    pub fn ideal(self) -> Self {
        Self {
            depth_noise_sigma: 0.0,
            range_noise_ratio: 0.0,
            dropout_prob: 0.0,
            ghost_prob: 0.0,
            ..self
        }
    }
}

/// Azimuths of the beams covering the camera's horizontal field of view.
pub fn beam_azimuths(intr: &CameraIntrinsics, step: f64) -> Vec<f64> {
    let left = -(intr.cx / intr.fx).atan();
    let right = ((intr.width as f64 - intr.cx) / intr.fx).atan();
    let count = ((right - left) / step).floor() as usize + 1;
    (0..count).map(|j| left + j as f64 * step).collect()
}

/// One radar sweep. The sensor sits below the camera at the scan plane and
/// shares the camera's axes, so `sensor_to_ego` is a pure translation and
/// every point has `y = 0` in the sensor frame. The RNG is re-seeded from
/// `model.seed` on every call.
pub fn sample_radar(scene: &Scene, intr: &CameraIntrinsics, model: &RadarModel) -> Result<RadarFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    sample_radar_with(scene, intr, model, &mut rng)
}

fn sample_radar_with(scene: &Scene, intr: &CameraIntrinsics, model: &RadarModel, rng: &mut ChaCha8Rng) -> Result<RadarFrame> {
    model.validate()?;
    let mount = Vector3::new(0.0, scene.ground_height - model.plane_height, 0.0);
    let origin = Point3::from(mount);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut cloud = PointCloud::new("radar");
    for theta in beam_azimuths(intr, model.azimuth_step) {
        let dir = Vector3::new(theta.sin(), 0.0, theta.cos());
        // fixed number of draws per beam keeps streams aligned across scenes
        let drop: f64 = rng.gen();
        let ghost: f64 = rng.gen();
        let ghost_scale: f64 = rng.gen_range(1.3..2.5);
        let noise: f64 = unit.sample(rng);
        let rcs: f64 = rng.gen_range(-5.0..20.0);
        let Some((range, _)) = scene.cast(&origin, &dir) else {
            continue;
        };
        if range * dir.z > scene.far_plane || drop < model.dropout_prob {
            continue;
        }
        let mut measured = range + noise * (model.depth_noise_sigma + model.range_noise_ratio * range);
        if ghost < model.ghost_prob {
            measured = range * ghost_scale;
        }
        if !(measured > 0.0) || measured * dir.z > scene.far_plane {
            continue;
        }
        cloud.push_with_attributes(Point3::from(dir * measured), PointAttributes { rcs, vx: 0.0, vy: 0.0 });
    }
    Ok(RadarFrame {
        points: cloud,
        timestamp: 0.0,
        sensor_to_ego: RigidTransform::from_translation(mount),
        ego_to_global: RigidTransform::identity(),
    })
}

/// Straight-line ego motion along +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceConfig {
    pub frames: usize,
    /// Meters per second.
    pub speed: f64,
    /// Seconds between sweeps.
    pub frame_interval: f64,
    pub lidar_density: f64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            frames: 50,
            speed: 8.0,
            frame_interval: 0.075,
            lidar_density: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFrame {
    pub radar: RadarFrame,
    pub gt: DepthMap,
    pub lidar: DepthMap,
    pub guide: GuidanceImage,
}

/// Renders frame `index` of a drive through `scene` (given in the frame-0
/// ego frame). Each frame draws from its own RNG stream, so frames can be
/// generated in any order or in parallel.
pub fn generate_frame(
    scene: &Scene,
    intr: &CameraIntrinsics,
    model: &RadarModel,
    seq: &SequenceConfig,
    index: usize,
) -> Result<SyntheticFrame> {
    let timestamp = index as f64 * seq.frame_interval;
    let offset = Vector3::new(0.0, 0.0, seq.speed * timestamp);
    let local = scene.shifted(&offset);
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    rng.set_stream(2 * index as u64);
    let mut radar = sample_radar_with(&local, intr, model, &mut rng)?;
    radar.timestamp = timestamp;
    radar.ego_to_global = RigidTransform::from_translation(offset);
    let gt = render_gt_depth(&local, intr);
    let lidar_seed = model.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (2 * index as u64 + 1);
    let lidar = sample_lidar(&gt, seq.lidar_density, lidar_seed)?;
    let guide = render_guidance(&local, intr);
    Ok(SyntheticFrame {
        radar,
        gt,
        lidar,
        guide,
    })
}

/// The default desk-scale camera: 200x88 pixels, 90° horizontal field of
/// view, horizon at row 36.
pub fn default_camera() -> CameraIntrinsics {
    CameraIntrinsics {
        fx: 100.0,
        fy: 100.0,
        cx: 100.0,
        cy: 36.0,
        width: 200,
        height: 88,
    }
}
