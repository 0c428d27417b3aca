use nalgebra::{Point3, Vector3};
use proptest::prelude::*;
use radar_depth::geometry::{backproject, project_point};
use radar_depth::radar::render_sparse_depth;
use radar_depth::{CameraIntrinsics, PointCloud, RigidTransform};

fn vec3(r: f64) -> impl Strategy<Value = Vector3<f64>> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn transform() -> impl Strategy<Value = RigidTransform> {
    (vec3(1.0), -std::f64::consts::PI..std::f64::consts::PI, vec3(50.0)).prop_filter_map("degenerate axis", |(axis, angle, t)| {
        (axis.norm() > 1e-3).then(|| RigidTransform::from_axis_angle(axis, angle, t))
    })
}

fn camera() -> CameraIntrinsics {
    CameraIntrinsics::new(721.5, 721.5, 609.6, 172.9, 1242, 375).unwrap()
}

proptest! {
    #[test]
    fn inverse_roundtrip(t in transform(), p in vec3(100.0)) {
        let p = Point3::from(p);
        let back = t.inverse().apply(&t.apply(&p));
        prop_assert!((back - p).norm() < 1e-9);
        prop_assert!(t.compose(&t.inverse()).max_abs_diff(&RigidTransform::identity()) < 1e-12);
    }

    #[test]
    fn transforms_preserve_distances(t in transform(), a in vec3(100.0), b in vec3(100.0)) {
        let (a, b) = (Point3::from(a), Point3::from(b));
        let before = (a - b).norm();
        let after = (t.apply(&a) - t.apply(&b)).norm();
        prop_assert!((before - after).abs() < 1e-9 * (1.0 + before));
    }

    #[test]
    fn composition_is_associative(a in transform(), b in transform(), c in transform(), p in vec3(10.0)) {
        let left = a.compose(&b).compose(&c);
        let right = a.compose(&b.compose(&c));
        prop_assert!(left.max_abs_diff(&right) < 1e-9);
        let p = Point3::from(p);
        prop_assert!((a.compose(&b).apply(&p) - a.apply(&b.apply(&p))).norm() < 1e-9);
    }

    #[test]
    fn row_major_roundtrip(t in transform()) {
        let back = RigidTransform::from_row_major_3x4(&t.to_row_major_3x4()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn projection_roundtrip(u in 0.0..1242.0f64, v in 0.0..375.0f64, depth in 0.5..120.0f64) {
        let cam = camera();
        let p = backproject(u, v, depth, &cam).unwrap();
        prop_assert!((p.z - depth).abs() < 1e-12);
        let (pu, pv) = cam.project_continuous(&p).unwrap();
        prop_assert!((pu - u).abs() < 1e-9 && (pv - v).abs() < 1e-9);
        let px = project_point(&p, &cam).unwrap();
        prop_assert_eq!((px.u, px.v), (u.floor() as usize, v.floor() as usize));
    }

    #[test]
    fn render_is_order_independent(pts in prop::collection::vec(vec3(20.0), 0..60), seed in any::<u64>()) {
        let cam = CameraIntrinsics::new(20.0, 20.0, 8.0, 6.0, 16, 12).unwrap();
        // lift points in front of the camera and force collisions on a coarse grid
        let pts: Vec<Point3<f64>> = pts.iter().map(|v| Point3::new(v.x.round() / 4.0, v.y.round() / 4.0, v.z.abs() + 1.0)).collect();
        let mut shuffled = pts.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            let j = (seed.wrapping_mul(i as u64 + 7) >> 17) as usize % (i + 1);
            shuffled.swap(i, j);
        }
        let a = render_sparse_depth(&PointCloud::from_points("c", pts), &cam);
        let b = render_sparse_depth(&PointCloud::from_points("c", shuffled), &cam);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn points_behind_the_camera_are_dropped() {
    let cam = camera();
    assert!(project_point(&Point3::new(0.0, 0.0, -5.0), &cam).is_none());
    assert!(project_point(&Point3::new(0.0, 0.0, 0.0), &cam).is_none());
    assert!(backproject(10.0, 10.0, 0.0, &cam).is_err());
}
