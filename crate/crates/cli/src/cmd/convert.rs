use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::io::{read_depth, write_depth, write_depth_png16};
use crate::manifest::{sidecar_path, ManifestBuilder};
use crate::{CropArgs, ToPngArgs};

pub fn to_png(args: &ToPngArgs) -> CliResult<()> {
    let depth = read_depth(&args.input)?;
    write_depth_png16(&args.output, &depth)?;
    let mut m = ManifestBuilder::new("to-png", json!({ "scale": 256 }));
    m.input(&args.input);
    m.output(&args.output);
    m.write(&sidecar_path(&args.output))
}

pub fn crop(args: &CropArgs) -> CliResult<()> {
    let depth = read_depth(&args.input)?;
    let small = depth.downsample_min(args.downsample)?;
    let width = match args.width {
        Some(w) => w,
        None => small
            .width()
            .checked_sub(args.left)
            .ok_or_else(|| CliError::input("crop origin outside the image"))?,
    };
    let height = match args.height {
        Some(h) => h,
        None => small
            .height()
            .checked_sub(args.top)
            .ok_or_else(|| CliError::input("crop origin outside the image"))?,
    };
    let out = small.crop(args.left, args.top, width, height)?;
    write_depth(&args.out, &out)?;
    let mut m = ManifestBuilder::new(
        "crop",
        json!({
            "downsample": args.downsample,
            "left": args.left,
            "top": args.top,
            "width": width,
            "height": height,
        }),
    );
    m.input(&args.input);
    m.output(&args.out);
    m.write(&sidecar_path(&args.out))
}
