use serde_json::json;

use radar_depth::metrics::{evaluate, DepthRange};

use crate::error::CliResult;
use crate::io::{read_depth_any, write_bytes};
use crate::manifest::{sidecar_path, ManifestBuilder};
use crate::report::{MethodRow, ReportTable};
use crate::EvaluateArgs;

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    let range = DepthRange::new(args.min, args.max)?;
    let pred = read_depth_any(&args.pred)?;
    let gt = read_depth_any(&args.gt)?;
    let r = evaluate(&pred, &gt, range)?;
    let table = ReportTable {
        intrinsic: Vec::new(),
        methods: vec![MethodRow::from_report(&args.name, &r)],
    };
    print!("{table}");
    println!(
        "d2 {:.3}  d3 {:.3}  valid pixels {}",
        r.delta2, r.delta3, r.valid_pixel_count
    );
    if let Some(out) = &args.out {
        write_bytes(out, table.method_csv().as_bytes())?;
        let mut m = ManifestBuilder::new(
            "evaluate",
            json!({
                "min": range.min,
                "max": range.max,
                "report": {
                    "delta1": r.delta1,
                    "delta2": r.delta2,
                    "delta3": r.delta3,
                    "rmse": r.rmse,
                    "abs_rel": r.abs_rel,
                    "valid_pixel_count": r.valid_pixel_count,
                },
            }),
        );
        m.input(&args.pred);
        m.input(&args.gt);
        m.output(out);
        m.write(&sidecar_path(out))?;
    }
    Ok(())
}
