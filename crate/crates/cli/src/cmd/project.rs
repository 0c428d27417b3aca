use serde_json::json;

use radar_depth::radar::render_sparse_depth;

use crate::error::CliResult;
use crate::io::{read_point_cloud, write_depth, Calibration};
use crate::manifest::{sidecar_path, ManifestBuilder};
use crate::ProjectArgs;

pub fn run(args: &ProjectArgs) -> CliResult<()> {
    let calib = Calibration::read(&args.calib)?;
    let cloud = read_point_cloud(&args.cloud, "input")?;
    let camera_from_cloud = if args.sensor_frame {
        calib.extrinsic.compose(&calib.radar_extrinsic)
    } else {
        calib.extrinsic
    };
    let camera = cloud.map_points("camera", |p| camera_from_cloud.apply(p));
    let depth = render_sparse_depth(&camera, &calib.intrinsics);
    write_depth(&args.out, &depth)?;

    let mut m = ManifestBuilder::new("project", json!({ "sensor_frame": args.sensor_frame }));
    m.input(&args.cloud);
    m.input(&args.calib);
    m.output(&args.out);
    m.write(&sidecar_path(&args.out))?;
    println!("{} points, {} pixels", cloud.len(), depth.count_valid());
    Ok(())
}
