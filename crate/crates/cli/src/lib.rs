//! Command-line front end: file formats, run manifests, reports and the
//! experiment commands built on the `radar_depth` library.

pub mod cmd;
pub mod error;
pub mod io;
pub mod manifest;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, CliResult};

/// Environment variable that caps the worker thread count.
pub const THREADS_ENV: &str = "RADAR_DEPTH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "radar-depth", version, about = "Radar depth preprocessing, interpolation and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Project a point cloud into a sparse depth map.
    Project(ProjectArgs),
    /// Accumulate, height-extend and filter radar frames of a dataset.
    Pipeline(PipelineArgs),
    /// Densify sparse depth guided by an image.
    Interpolate(InterpolateArgs),
    /// Compare a predicted depth map with ground truth.
    Evaluate(EvaluateArgs),
    /// Intrinsic error of raw, extended and filtered radar over a dataset.
    Table1(Table1Args),
    /// Generate a synthetic driving dataset.
    Synth(SynthArgs),
    /// Export a depth map as 16-bit PNG (1/256 m per count).
    ToPng(ToPngArgs),
    /// Downsample (min pooling) and crop a depth map.
    Crop(CropArgs),
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// CSV point cloud.
    pub cloud: PathBuf,
    /// Calibration file.
    pub calib: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Points are in the radar sensor frame: apply `radar_extrinsic` first.
    #[arg(long)]
    pub sensor_frame: bool,
}

/// Height extension and filter settings shared by `pipeline` and `table1`.
#[derive(Debug, Args, Clone, Default)]
pub struct RadarArgs {
    /// Frames accumulated, counting the target.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub h_min: Option<f64>,
    #[arg(long)]
    pub h_max: Option<f64>,
    #[arg(long)]
    pub base_height: Option<f64>,
    /// Camera height above ground; defaults to the calibration value.
    #[arg(long)]
    pub ground_height: Option<f64>,
    #[arg(long)]
    pub ratio_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Dataset directory (calib.txt, poses.txt, timestamps.txt, radar/).
    pub dataset: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Key-value configuration; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Calibration file; defaults to `<dataset>/calib.txt`.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    /// Target frame index; defaults to the last frame.
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long, value_parser = clap::builder::BoolishValueParser::new())]
    pub extend: Option<bool>,
    #[arg(long, value_parser = clap::builder::BoolishValueParser::new())]
    pub filter: Option<bool>,
    /// Reference depth map for filtering and error reporting.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Intrinsic error report (CSV); needs a reference.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub radar: RadarArgs,
}

#[derive(Debug, Args, Clone, Default)]
pub struct SolverArgs {
    /// Neighborhood size, 4 or 8.
    #[arg(long)]
    pub neighborhood: Option<usize>,
    #[arg(long)]
    pub epsilon_var: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InterpolateArgs {
    /// Sparse depth (PFM).
    pub sparse: PathBuf,
    /// Guidance image (PNG or PFM luminance).
    pub guide: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted depth (PFM or 16-bit PNG).
    pub pred: PathBuf,
    /// Ground-truth depth (PFM or 16-bit PNG).
    pub gt: PathBuf,
    /// Smallest ground-truth depth evaluated, meters.
    #[arg(long, default_value_t = 1.0)]
    pub min: f64,
    /// Largest ground-truth depth evaluated, meters.
    #[arg(long, default_value_t = 80.0)]
    pub max: f64,
    /// Row label.
    #[arg(long, default_value = "prediction")]
    pub name: String,
    /// Machine-readable CSV output.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    /// Dataset directory written by `synth`.
    pub dataset: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Reference depth: `gt` (exact) or `lidar` (interpolated lidar).
    #[arg(long)]
    pub reference: Option<String>,
    /// CSV output.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub radar: RadarArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scene description; defaults to the built-in street.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Constant range noise, meters.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub range_noise_ratio: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub ghost_prob: Option<f64>,
    #[arg(long)]
    pub plane_height: Option<f64>,
    #[arg(long)]
    pub azimuth_step: Option<f64>,
    /// Noise-free radar (overrides the noise settings).
    #[arg(long)]
    pub ideal: bool,
    /// Ego speed, m/s.
    #[arg(long)]
    pub speed: Option<f64>,
    /// Seconds between frames.
    #[arg(long)]
    pub frame_interval: Option<f64>,
    #[arg(long)]
    pub lidar_density: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ToPngArgs {
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CropArgs {
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Min-pooling factor applied before cropping.
    #[arg(long, default_value_t = 1)]
    pub downsample: usize,
    #[arg(long, default_value_t = 0)]
    pub left: usize,
    #[arg(long, default_value_t = 0)]
    pub top: usize,
    /// Crop width; defaults to the remaining width.
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Project(a) => cmd::project::run(&a),
        Command::Pipeline(a) => cmd::pipeline::run(&a),
        Command::Interpolate(a) => cmd::interpolate::run(&a),
        Command::Evaluate(a) => cmd::evaluate::run(&a),
        Command::Table1(a) => cmd::table1::run(&a),
        Command::Synth(a) => cmd::synth::run(&a),
        Command::ToPng(a) => cmd::convert::to_png(&a),
        Command::Crop(a) => cmd::convert::crop(&a),
    }
}

/// Worker count from the environment, if set.
pub fn threads_from_env() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::input(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}
