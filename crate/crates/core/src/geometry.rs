//! Pinhole camera model, rigid transforms and depth rasters.
//!
//! Camera frame convention: +z along the optical axis, +x to the right,
//! +y down. Pixel `(u, v)` covers the half-open square `[u, u+1) x [v, v+1)`
//! of continuous image coordinates, so its center is at `(u + 0.5, v + 0.5)`.

use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Pinhole intrinsics without distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx.is_finite() && self.fx > 0.0) {
            return Err(Error::invalid(format!("fx must be positive, got {}", self.fx)));
        }
        if !(self.fy.is_finite() && self.fy > 0.0) {
            return Err(Error::invalid(format!("fy must be positive, got {}", self.fy)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("image size must be non-zero"));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(Error::invalid(format!(
                "cx must lie in [0, {}), got {}",
                self.width, self.cx
            )));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(Error::invalid(format!(
                "cy must lie in [0, {}), got {}",
                self.height, self.cy
            )));
        }
        Ok(())
    }

    /// Continuous image coordinates of a camera-frame point, `None` behind the camera.
    pub fn project_continuous(&self, p: &Point3<f64>) -> Option<(f64, f64)> {
        if !(p.z > 0.0) {
            return None;
        }
        Some((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    /// Integer pixel containing the continuous coordinate, if inside the image.
    pub fn pixel_of(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        if !(u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64) {
            return None;
        }
        let (pu, pv) = (u.floor() as usize, v.floor() as usize);
        // Guard against u rounding up to `width` after the comparison.
        (pu < self.width && pv < self.height).then_some((pu, pv))
    }
}

/// Rigid body motion `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    /// Builds a transform, checking that `rotation` is a proper rotation.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("transform contains non-finite values"));
        }
        let ortho_err = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if ortho_err > ORTHONORMAL_TOL {
            return Err(Error::invalid(format!(
                "rotation is not orthonormal (max |R^T R - I| = {ortho_err:e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::invalid(format!(
                "rotation determinant must be +1, got {det}"
            )));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation of `angle` radians about `axis` followed by `translation`.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rotation = match nalgebra::Unit::try_new(axis, f64::EPSILON) {
            Some(axis) => *nalgebra::Rotation3::from_axis_angle(&axis, angle).matrix(),
            None => Matrix3::identity(),
        };
        Self {
            rotation,
            translation,
        }
    }

    /// Parses a row-major 3x4 matrix `[R | t]`.
    pub fn from_row_major_3x4(values: &[f64; 12]) -> Result<Self> {
        let rotation = Matrix3::new(
            values[0], values[1], values[2], values[4], values[5], values[6], values[8],
            values[9], values[10],
        );
        let translation = Vector3::new(values[3], values[7], values[11]);
        Self::new(rotation, translation)
    }

    pub fn to_row_major_3x4(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            t.x,
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            t.y,
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.z,
        ]
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Largest absolute entry-wise difference of the 3x4 matrices.
    pub fn max_abs_diff(&self, other: &RigidTransform) -> f64 {
        self.to_row_major_3x4()
            .iter()
            .zip(other.to_row_major_3x4().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `a ∘ b`: the transform that applies `b` then `a`.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

/// Optional radar attributes carried alongside a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointAttributes {
    /// Radar cross section.
    pub rcs: f64,
    pub vx: f64,
    pub vy: f64,
}

/// Points expressed in a named frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub frame: String,
    points: Vec<Point3<f64>>,
    /// Same length as `points` when present.
    attributes: Option<Vec<PointAttributes>>,
}

impl PointCloud {
    pub fn new(frame: impl Into<String>) -> Self {
        Self {
            frame: frame.into(),
            points: Vec::new(),
            attributes: None,
        }
    }

    pub fn from_points(frame: impl Into<String>, points: Vec<Point3<f64>>) -> Self {
        Self {
            frame: frame.into(),
            points,
            attributes: None,
        }
    }

    pub fn with_attributes(
        frame: impl Into<String>,
        points: Vec<Point3<f64>>,
        attributes: Vec<PointAttributes>,
    ) -> Result<Self> {
        if points.len() != attributes.len() {
            return Err(Error::invalid(format!(
                "{} points but {} attribute records",
                points.len(),
                attributes.len()
            )));
        }
        Ok(Self {
            frame: frame.into(),
            points,
            attributes: Some(attributes),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn attributes(&self) -> Option<&[PointAttributes]> {
        self.attributes.as_deref()
    }

    pub fn push(&mut self, p: Point3<f64>) {
        self.points.push(p);
        if let Some(attrs) = &mut self.attributes {
            attrs.push(PointAttributes::default());
        }
    }

    pub fn push_with_attributes(&mut self, p: Point3<f64>, attrs: PointAttributes) {
        let n = self.points.len();
        self.attributes
            .get_or_insert_with(|| vec![PointAttributes::default(); n])
            .push(attrs);
        self.points.push(p);
    }

    /// Appends `other`, keeping attribute columns aligned.
    pub fn append(&mut self, other: &PointCloud) {
        match (&mut self.attributes, &other.attributes) {
            (Some(mine), Some(theirs)) => mine.extend_from_slice(theirs),
            (Some(mine), None) => mine.extend(std::iter::repeat_n(PointAttributes::default(), other.len())),
            (None, Some(theirs)) => {
                let mut attrs = vec![PointAttributes::default(); self.points.len()];
                attrs.extend_from_slice(theirs);
                self.attributes = Some(attrs);
            }
            (None, None) => {}
        }
        self.points.extend_from_slice(&other.points);
    }

    /// Same attributes, points mapped through `f`, relabelled to `frame`.
    pub fn map_points(&self, frame: impl Into<String>, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> PointCloud {
        PointCloud {
            frame: frame.into(),
            points: self.points.iter().map(f).collect(),
            attributes: self.attributes.clone(),
        }
    }
}

/// Pixel hit of a projected point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedPoint {
    pub u: usize,
    pub v: usize,
    pub depth: f64,
}

/// Projects camera-frame points; points behind the camera or outside the
/// image are dropped.
pub fn project_points(points: &PointCloud, intr: &CameraIntrinsics) -> Vec<ProjectedPoint> {
    points
        .points()
        .iter()
        .filter_map(|p| project_point(p, intr))
        .collect()
}

pub fn project_point(p: &Point3<f64>, intr: &CameraIntrinsics) -> Option<ProjectedPoint> {
    if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
        return None;
    }
    let (u, v) = intr.project_continuous(p)?;
    let (u, v) = intr.pixel_of(u, v)?;
    Some(ProjectedPoint { u, v, depth: p.z })
}

/// Inverse of projection at continuous image coordinates.
pub fn backproject(u: f64, v: f64, depth: f64, intr: &CameraIntrinsics) -> Result<Point3<f64>> {
    if !(depth.is_finite() && depth > 0.0) {
        return Err(Error::invalid(format!("depth must be positive, got {depth}")));
    }
    Ok(Point3::new(
        (u - intr.cx) * depth / intr.fx,
        (v - intr.cy) * depth / intr.fy,
        depth,
    ))
}

pub fn transform_points(points: &PointCloud, t: &RigidTransform) -> PointCloud {
    points.map_points(points.frame.clone(), |p| t.apply(p))
}

/// Row-major depth raster in meters; `0.0` marks a missing measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DepthMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::from_vec(width, height, vec![value; width * height])
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "depth buffer has {} values, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some((i, v)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::invalid(format!(
                "depth value {v} at index {i} is not 0 or a positive finite number"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[self.index(u, v)]
    }

    /// Stores `depth` at `(u, v)`; non-finite or negative values are rejected.
    pub fn set(&mut self, u: usize, v: usize, depth: f64) -> Result<()> {
        if !(depth.is_finite() && depth >= 0.0) {
            return Err(Error::invalid(format!("invalid depth value {depth}")));
        }
        let i = self.index(u, v);
        self.data[i] = depth;
        Ok(())
    }

    /// Keeps the smaller of the current and new depth; empty pixels take the new one.
    pub(crate) fn splat_min(&mut self, u: usize, v: usize, depth: f64) {
        if !(depth.is_finite() && depth > 0.0) {
            return;
        }
        let i = self.index(u, v);
        let cur = self.data[i];
        if cur == 0.0 || depth < cur {
            self.data[i] = depth;
        }
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.data[i] > 0.0
    }

    pub fn count_valid(&self) -> usize {
        self.data.iter().filter(|v| **v > 0.0).count()
    }

    pub fn same_dims(&self, other: &DepthMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn ensure_same_dims(&self, other: &DepthMap) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            })
        }
    }

    /// Applies `f` to every valid pixel.
    pub fn map_valid(&self, f: impl Fn(f64) -> f64) -> Result<DepthMap> {
        let data = self
            .data
            .iter()
            .map(|&v| if v > 0.0 { f(v) } else { 0.0 })
            .collect();
        DepthMap::from_vec(self.width, self.height, data)
    }

    /// Rectangular sub-window starting at `(left, top)`.
    pub fn crop(&self, left: usize, top: usize, width: usize, height: usize) -> Result<DepthMap> {
        if left + width > self.width || top + height > self.height {
            return Err(Error::invalid(format!(
                "crop {width}x{height}+{left}+{top} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(width * height);
        for v in top..top + height {
            let start = self.index(left, v);
            data.extend_from_slice(&self.data[start..start + width]);
        }
        Ok(DepthMap {
            width,
            height,
            data,
        })
    }

    /// Integer-factor downsampling that keeps the nearest valid depth of each
    /// block, so sparse maps stay sparse without inventing values.
    pub fn downsample_min(&self, factor: usize) -> Result<DepthMap> {
        if factor == 0 {
            return Err(Error::invalid("downsample factor must be >= 1"));
        }
        let (w, h) = (self.width / factor, self.height / factor);
        let mut out = DepthMap::zeros(w, h);
        for v in 0..h * factor {
            for u in 0..w * factor {
                out.splat_min(u / factor, v / factor, self.get(u, v));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0, 100, 100).unwrap()
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        let intr = CameraIntrinsics::new(80.0, 90.0, 50.0, 30.0, 100, 60).unwrap();
        let cloud = PointCloud::from_points("camera", vec![Point3::new(0.0, 0.0, 5.0)]);
        let px = project_points(&cloud, &intr);
        assert_eq!(px, vec![ProjectedPoint { u: 50, v: 30, depth: 5.0 }]);
    }

    #[test]
    fn off_axis_projection() {
        let cloud = PointCloud::from_points("camera", vec![Point3::new(1.0, 0.0, 10.0)]);
        let px = project_points(&cloud, &intr());
        assert_eq!(px, vec![ProjectedPoint { u: 60, v: 50, depth: 10.0 }]);
    }

    #[test]
    fn behind_and_outside_are_dropped() {
        let cloud = PointCloud::from_points(
            "camera",
            vec![
                Point3::new(0.0, 0.0, -5.0),
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(100.0, 0.0, 1.0),
                // u lands exactly on the right border
                Point3::new(0.5, 0.0, 1.0),
                Point3::new(f64::NAN, 0.0, 1.0),
            ],
        );
        assert!(project_points(&cloud, &intr()).is_empty());
    }

    #[test]
    fn projection_floors() {
        let cloud = PointCloud::from_points("camera", vec![Point3::new(0.0999, -0.0001, 1.0)]);
        let px = project_points(&cloud, &intr());
        assert_eq!((px[0].u, px[0].v), (59, 49));
    }

    #[test]
    fn backprojection_examples() {
        let a = CameraIntrinsics::new(80.0, 90.0, 50.0, 30.0, 100, 60).unwrap();
        assert_eq!(backproject(50.0, 30.0, 5.0, &a).unwrap(), Point3::new(0.0, 0.0, 5.0));
        let p = backproject(60.0, 50.0, 10.0, &intr()).unwrap();
        assert_abs_diff_eq!(p.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-12);
        assert!(matches!(backproject(1.0, 1.0, 0.0, &intr()), Err(Error::InvalidArgument(_))));
        assert!(backproject(1.0, 1.0, -2.0, &intr()).is_err());
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 1.0, 1.0, 10, 10).is_err());
        assert!(CameraIntrinsics::new(1.0, -1.0, 1.0, 1.0, 10, 10).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 10.0, 1.0, 10, 10).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 1.0, -0.1, 10, 10).is_err());
    }

    #[test]
    fn translation_examples() {
        let cloud = PointCloud::from_points("a", vec![Point3::new(0.0, 0.0, 5.0)]);
        let moved = transform_points(&cloud, &RigidTransform::from_translation(Vector3::new(1.0, 0.0, 0.0)));
        assert_eq!(moved.points()[0], Point3::new(1.0, 0.0, 5.0));
        assert_eq!(transform_points(&cloud, &RigidTransform::identity()), cloud);

        let t = compose(
            &RigidTransform::from_translation(Vector3::new(1.0, 0.0, 0.0)),
            &RigidTransform::from_translation(Vector3::new(0.0, 2.0, 0.0)),
        );
        assert_eq!(*t.translation(), Vector3::new(1.0, 2.0, 0.0));
    }

    #[test]
    fn compose_order_and_inverse() {
        let a = RigidTransform::from_axis_angle(Vector3::z(), 0.3, Vector3::new(1.0, 2.0, 3.0));
        let b = RigidTransform::from_axis_angle(Vector3::x(), -1.1, Vector3::new(-4.0, 0.5, 2.0));
        let p = Point3::new(0.2, -0.7, 4.0);
        let ab = a.compose(&b);
        assert_abs_diff_eq!((ab.apply(&p) - a.apply(&b.apply(&p))).norm(), 0.0, epsilon = 1e-12);
        assert!(a.compose(&a.inverse()).max_abs_diff(&RigidTransform::identity()) < 1e-9);
        assert!(RigidTransform::identity().compose(&a).max_abs_diff(&a) < 1e-15);
    }

    #[test]
    fn rejects_improper_rotation() {
        let reflect = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert!(RigidTransform::new(reflect, Vector3::zeros()).is_err());
        let scaled = Matrix3::identity() * 1.001;
        assert!(RigidTransform::new(scaled, Vector3::zeros()).is_err());
    }

    #[test]
    fn row_major_roundtrip() {
        let a = RigidTransform::from_axis_angle(Vector3::new(1.0, 2.0, 3.0), 0.7, Vector3::new(1.0, -2.0, 3.5));
        let b = RigidTransform::from_row_major_3x4(&a.to_row_major_3x4()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn attributes_follow_points() {
        let mut a = PointCloud::new("radar");
        a.push(Point3::new(1.0, 0.0, 1.0));
        let mut b = PointCloud::new("radar");
        b.push_with_attributes(Point3::new(2.0, 0.0, 1.0), PointAttributes { rcs: 3.0, vx: 1.0, vy: 0.0 });
        a.append(&b);
        let attrs = a.attributes().unwrap();
        assert_eq!(attrs.len(), 2);
        assert_eq!(attrs[1].rcs, 3.0);
        let t = transform_points(&a, &RigidTransform::from_translation(Vector3::new(0.0, 0.0, 1.0)));
        assert_eq!(t.attributes(), a.attributes());
    }

    #[test]
    fn depth_map_validation_and_crop() {
        assert!(DepthMap::from_vec(2, 2, vec![0.0; 3]).is_err());
        assert!(DepthMap::from_vec(1, 1, vec![-1.0]).is_err());
        assert!(DepthMap::from_vec(1, 1, vec![f64::INFINITY]).is_err());
        let m = DepthMap::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let c = m.crop(1, 1, 2, 1).unwrap();
        assert_eq!(c.data(), &[5.0, 6.0]);
        assert!(m.crop(2, 0, 2, 1).is_err());
        let d = DepthMap::from_vec(2, 2, vec![0.0, 3.0, 2.0, 0.0]).unwrap().downsample_min(2).unwrap();
        assert_eq!(d.data(), &[2.0]);
    }
}
