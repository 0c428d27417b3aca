//! Dataset directory layout shared by `synth`, `pipeline` and `table1`.
//!
//! ```text
//! calib.txt  scene.txt  poses.txt  timestamps.txt  manifest.json
//! radar/000000.csv  gt/000000.pfm  lidar/000000.pfm  guide/000000.png
//! ```

use std::path::{Path, PathBuf};

use radar_depth::radar::RadarFrame;

use crate::error::{CliError, CliResult};
use crate::io::{parse_poses, parse_timestamps, read_point_cloud, read_text, Calibration};

pub const CALIB: &str = "calib.txt";
pub const SCENE: &str = "scene.txt";
pub const POSES: &str = "poses.txt";
pub const TIMESTAMPS: &str = "timestamps.txt";
pub const MANIFEST: &str = "manifest.json";

pub fn frame_path(root: &Path, kind: &str, index: usize, ext: &str) -> PathBuf {
    root.join(kind).join(format!("{index:06}.{ext}"))
}

pub struct Dataset {
    pub root: PathBuf,
    pub calib_path: PathBuf,
    pub calib: Calibration,
    pub frames: Vec<RadarFrame>,
}

impl Dataset {
    pub fn load(root: &Path, calib: Option<&Path>) -> CliResult<Self> {
        let calib_path = calib.map_or_else(|| root.join(CALIB), Path::to_path_buf);
        let calib = Calibration::read(&calib_path)?;
        let poses_path = root.join(POSES);
        let poses = parse_poses(&read_text(&poses_path)?).map_err(|e| e.in_file(&poses_path))?;
        let ts_path = root.join(TIMESTAMPS);
        let stamps = parse_timestamps(&read_text(&ts_path)?).map_err(|e| e.in_file(&ts_path))?;
        if poses.len() != stamps.len() {
            return Err(CliError::input(format!(
                "{} poses but {} timestamps in {}",
                poses.len(),
                stamps.len(),
                root.display()
            )));
        }
        let frames = poses
            .into_iter()
            .zip(stamps)
            .enumerate()
            .map(|(i, (pose, timestamp))| {
                Ok(RadarFrame {
                    points: read_point_cloud(&frame_path(root, "radar", i, "csv"), "radar")?,
                    timestamp,
                    sensor_to_ego: calib.radar_extrinsic,
                    ego_to_global: pose,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Self {
            root: root.to_path_buf(),
            calib_path,
            calib,
            frames,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn path(&self, kind: &str, index: usize) -> PathBuf {
        let ext = match kind {
            "radar" => "csv",
            "guide" => "png",
            _ => "pfm",
        };
        frame_path(&self.root, kind, index, ext)
    }
}
