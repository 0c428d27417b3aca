use nalgebra::{Point3, Vector3};
use radar_depth::geometry::{backproject, project_point};
use radar_depth::radar::{intrinsic_error, render_sparse_depth, run_pipeline, PipelineConfig};
use radar_depth::synth::{default_camera, generate_frame, render_gt_depth, sample_lidar, sample_radar, RadarModel, Scene, SequenceConfig};
use radar_depth::RigidTransform;

fn ideal() -> RadarModel {
    RadarModel::default().ideal()
}

#[test]
fn noise_free_radar_lies_on_visible_surfaces() {
    let scene = Scene::default_street();
    let intr = default_camera();
    let frame = sample_radar(&scene, &intr, &ideal()).unwrap();
    assert!(frame.points.len() > 20);
    let gt = render_gt_depth(&scene, &intr);
    let cfg = PipelineConfig {
        window: 1,
        extension: None,
        ground_y: scene.ground_height,
        filter: None,
    };
    let out = run_pipeline(std::slice::from_ref(&frame), 0, &RigidTransform::identity(), &intr, &cfg, None).unwrap();
    let origin = Point3::origin();
    for p in frame.points.points() {
        let cam = frame.sensor_to_ego.apply(p);
        // the camera ray through the point reaches the same surface
        let dir: Vector3<f64> = cam.coords.normalize();
        let (t, _) = scene.cast(&origin, &dir).expect("camera sees the radar hit");
        assert!((t * dir.z - cam.z).abs() < 1e-6, "camera sees {} but radar hit is at {}", t * dir.z, cam.z);
        let px = project_point(&cam, &intr).unwrap();
        assert!(out.depth.get(px.u, px.v) <= cam.z + 1e-12);
        // some pixel-center ray within one pixel sees the same surface
        let surface = scene.cast(&origin, &dir).map(|(_, s)| s);
        let seen = (px.v.saturating_sub(1)..=(px.v + 1).min(intr.height - 1)).any(|v| {
            (px.u.saturating_sub(1)..=(px.u + 1).min(intr.width - 1)).any(|u| {
                let ray = backproject(u as f64 + 0.5, v as f64 + 0.5, 1.0, &intr).unwrap().coords.normalize();
                scene.cast(&origin, &ray).map(|(_, s)| s) == surface && gt.get(u, v) > 0.0
            })
        });
        assert!(seen, "no ground-truth pixel near ({}, {}) shows the radar surface", px.u, px.v);
    }
}

#[test]
fn frames_are_deterministic_and_order_free() {
    let scene = Scene::default_street();
    let intr = default_camera();
    let model = RadarModel::default();
    let seq = SequenceConfig::default();
    let a = generate_frame(&scene, &intr, &model, &seq, 7).unwrap();
    let _ = generate_frame(&scene, &intr, &model, &seq, 3).unwrap();
    let b = generate_frame(&scene, &intr, &model, &seq, 7).unwrap();
    assert_eq!(a, b);
    let other = generate_frame(&scene, &intr, &RadarModel { seed: 1, ..model }, &seq, 7).unwrap();
    assert_ne!(a.radar.points, other.radar.points);
    assert_eq!(a.gt, other.gt);
}

#[test]
fn lidar_is_a_subset_of_ground_truth() {
    let intr = default_camera();
    let gt = render_gt_depth(&Scene::default_street(), &intr);
    let lidar = sample_lidar(&gt, 0.05, 17).unwrap();
    assert!(lidar.count_valid() > 0);
    for (l, g) in lidar.data().iter().zip(gt.data()) {
        assert!(*l == 0.0 || l == g);
    }
    let frac = lidar.count_valid() as f64 / gt.count_valid() as f64;
    assert!((0.02..0.1).contains(&frac), "lidar fraction {frac}");
}

#[test]
fn gaussian_range_noise_shows_up_as_rmse() {
    // Monte Carlo: σ = 2 m range noise gives about 2 m intrinsic RMSE
    let scene = Scene::default_street();
    let intr = default_camera();
    let model = RadarModel {
        depth_noise_sigma: 2.0,
        ..ideal()
    };
    let gt = render_gt_depth(&scene, &intr);
    let (mut sq, mut n) = (0.0, 0usize);
    for seed in 0..100 {
        let f = sample_radar(&scene, &intr, &RadarModel { seed, ..model }).unwrap();
        let cloud = f.points.map_points("camera", |p| f.sensor_to_ego.apply(p));
        let sparse = render_sparse_depth(&cloud, &intr);
        let r = intrinsic_error(&sparse, &gt, None).unwrap();
        sq += r.rmse * r.rmse * r.point_count as f64;
        n += r.point_count;
    }
    let rmse = (sq / n as f64).sqrt();
    assert!((rmse - 2.0).abs() < 0.4, "rmse {rmse}");
}
