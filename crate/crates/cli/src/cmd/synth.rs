use std::fs;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde_json::json;

use radar_depth::synth::{default_camera, generate_frame, RadarModel, Scene, SequenceConfig};
use radar_depth::RigidTransform;

use super::dataset::{frame_path, CALIB, MANIFEST, POSES, SCENE, TIMESTAMPS};
use super::Settings;
use crate::error::{CliError, CliResult};
use crate::io::{format_point_cloud, format_poses, format_timestamps, read_text, write_bytes, write_depth, write_guidance_png, Calibration};
use crate::manifest::ManifestBuilder;
use crate::SynthArgs;

const KEYS: &[&str] = &[
    "frames",
    "seed",
    "sigma",
    "range_noise_ratio",
    "dropout",
    "ghost_prob",
    "plane_height",
    "azimuth_step",
    "ideal",
    "speed",
    "frame_interval",
    "lidar_density",
];

pub fn run(args: &SynthArgs) -> CliResult<()> {
    let s = Settings::load(args.config.as_deref(), KEYS)?;
    let scene = match &args.scene {
        Some(p) => Scene::parse(&read_text(p)?).map_err(|e| CliError::from(e).in_file(p))?,
        None => Scene::default_street(),
    };
    let d = RadarModel::default();
    let mut model = RadarModel {
        plane_height: s.f64(args.plane_height, "plane_height")?.unwrap_or(d.plane_height),
        depth_noise_sigma: s.f64(args.sigma, "sigma")?.unwrap_or(d.depth_noise_sigma),
        range_noise_ratio: s.f64(args.range_noise_ratio, "range_noise_ratio")?.unwrap_or(d.range_noise_ratio),
        azimuth_step: s.f64(args.azimuth_step, "azimuth_step")?.unwrap_or(d.azimuth_step),
        dropout_prob: s.f64(args.dropout, "dropout")?.unwrap_or(d.dropout_prob),
        ghost_prob: s.f64(args.ghost_prob, "ghost_prob")?.unwrap_or(d.ghost_prob),
        seed: s.u64(args.seed, "seed")?.unwrap_or(d.seed),
    };
    let ideal = args.ideal || s.bool(None, "ideal")?.unwrap_or(false);
    if ideal {
        model = model.ideal();
    }
    model.validate()?;
    let sd = SequenceConfig::default();
    let seq = SequenceConfig {
        frames: s.usize(args.frames, "frames")?.unwrap_or(sd.frames),
        speed: s.f64(args.speed, "speed")?.unwrap_or(sd.speed),
        frame_interval: s.f64(args.frame_interval, "frame_interval")?.unwrap_or(sd.frame_interval),
        lidar_density: s.f64(args.lidar_density, "lidar_density")?.unwrap_or(sd.lidar_density),
    };
    if !(seq.frame_interval > 0.0 && seq.speed.is_finite()) {
        return Err(CliError::input("frame interval must be positive and speed finite"));
    }

    let intr = default_camera();
    let calib = Calibration {
        intrinsics: intr,
        extrinsic: RigidTransform::identity(),
        radar_extrinsic: RigidTransform::from_translation(Vector3::new(
            0.0,
            scene.ground_height - model.plane_height,
            0.0,
        )),
        ground_height: Some(scene.ground_height),
    };
    let out = &args.out;
    for kind in ["radar", "gt", "lidar", "guide"] {
        let dir = out.join(kind);
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    }
    write_bytes(&out.join(CALIB), calib.to_text().as_bytes())?;
    write_bytes(&out.join(SCENE), scene.to_text().as_bytes())?;

    let poses = (0..seq.frames)
        .into_par_iter()
        .map(|i| {
            let f = generate_frame(&scene, &intr, &model, &seq, i)?;
            write_bytes(&frame_path(out, "radar", i, "csv"), format_point_cloud(&f.radar.points).as_bytes())?;
            write_depth(&frame_path(out, "gt", i, "pfm"), &f.gt)?;
            write_depth(&frame_path(out, "lidar", i, "pfm"), &f.lidar)?;
            write_guidance_png(&frame_path(out, "guide", i, "png"), &f.guide)?;
            Ok((f.radar.ego_to_global, f.radar.timestamp))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let (poses, stamps): (Vec<_>, Vec<_>) = poses.into_iter().unzip();
    write_bytes(&out.join(POSES), format_poses(&poses).as_bytes())?;
    write_bytes(&out.join(TIMESTAMPS), format_timestamps(&stamps).as_bytes())?;

    let mut m = ManifestBuilder::new(
        "synth",
        json!({
            "frames": seq.frames,
            "seed": model.seed,
            "ideal": ideal,
            "radar": {
                "plane_height": model.plane_height,
                "sigma": model.depth_noise_sigma,
                "range_noise_ratio": model.range_noise_ratio,
                "azimuth_step": model.azimuth_step,
                "dropout": model.dropout_prob,
                "ghost_prob": model.ghost_prob,
            },
            "sequence": {
                "speed": seq.speed,
                "frame_interval": seq.frame_interval,
                "lidar_density": seq.lidar_density,
            },
        }),
    );
    if let Some(p) = &args.scene {
        m.input(p);
    }
    for name in [CALIB, SCENE, POSES, TIMESTAMPS, "radar", "gt", "lidar", "guide"] {
        m.output(&out.join(name));
    }
    m.write(&out.join(MANIFEST))?;
    println!("{} frames written to {}", seq.frames, out.display());
    Ok(())
}
