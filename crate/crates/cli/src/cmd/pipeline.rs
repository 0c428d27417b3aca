use serde_json::json;

use radar_depth::radar::{run_pipeline, PipelineConfig};

use super::dataset::Dataset;
use super::{concat_keys, RadarSettings, Settings, RADAR_KEYS};
use crate::error::{CliError, CliResult};
use crate::io::{read_depth, write_bytes, write_depth};
use crate::manifest::{sidecar_path, ManifestBuilder};
use crate::report::{IntrinsicRow, ReportTable};
use crate::PipelineArgs;

pub fn run(args: &PipelineArgs) -> CliResult<()> {
    let allowed = concat_keys(&[RADAR_KEYS, &["target", "extend", "filter"]]);
    let settings = Settings::load(args.config.as_deref(), &allowed)?;
    let data = Dataset::load(&args.dataset, args.calib.as_deref())?;
    if data.is_empty() {
        return Err(CliError::input(format!("{}: dataset has no frames", args.dataset.display())));
    }
    let radar = RadarSettings::resolve(&args.radar, &settings, data.calib.ground_height)?;
    let extend = settings.bool(args.extend, "extend")?.unwrap_or(true);
    let filter = settings.bool(args.filter, "filter")?.unwrap_or(false);
    let target = settings.usize(args.target, "target")?.unwrap_or(data.len() - 1);
    if filter && args.reference.is_none() {
        return Err(CliError::input("filtering requested but no --reference depth map given"));
    }
    if args.report.is_some() && args.reference.is_none() {
        return Err(CliError::input("--report needs a --reference depth map"));
    }
    let reference = args.reference.as_deref().map(read_depth).transpose()?;

    let cfg = |extend: bool, filter: bool| PipelineConfig {
        window: radar.window,
        extension: extend.then_some(radar.extension),
        ground_y: radar.ground_height,
        filter: filter.then_some(radar.filter),
    };
    let intr = &data.calib.intrinsics;
    let cam = &data.calib.extrinsic;
    let out = run_pipeline(&data.frames, target, cam, intr, &cfg(extend, filter), reference.as_ref())?;
    write_depth(&args.out, &out.depth)?;

    let mut m = ManifestBuilder::new(
        "pipeline",
        json!({
            "target": target,
            "extend": extend,
            "filter": filter,
            "radar": radar.to_json(),
        }),
    );
    m.input(&args.dataset);
    m.input(&data.calib_path);
    if let Some(p) = &args.config {
        m.input(p);
    }
    if let Some(p) = &args.reference {
        m.input(p);
    }
    m.output(&args.out);

    println!("frame {target}: {} points ({} before filtering)", out.depth.count_valid(), out.unfiltered_count);
    if let Some(reference) = &reference {
        // baseline rows put the final map in context: raw, then each enabled stage
        let mut stages = vec![(false, false)];
        if extend {
            stages.push((true, false));
        }
        if filter {
            stages.push((extend, true));
        }
        let mut table = ReportTable::default();
        for (ext, filt) in stages {
            let o = run_pipeline(&data.frames, target, cam, intr, &cfg(ext, filt), Some(reference))?;
            let r = o.report.expect("reference supplied");
            table.intrinsic.push(IntrinsicRow {
                modality: modality_label(ext).into(),
                threshold: if filt { radar.threshold_label() } else { "none".into() },
                delta1: r.delta1,
                rmse: r.rmse,
                points: r.point_count as f64,
                retained_pct: 100.0 * r.retained_fraction,
            });
        }
        print!("{table}");
        if let Some(path) = &args.report {
            write_bytes(path, table.intrinsic_csv().as_bytes())?;
            m.output(path);
        }
    }
    m.write(&sidecar_path(&args.out))
}

pub(crate) fn modality_label(extended: bool) -> &'static str {
    if extended {
        "radar_ext"
    } else {
        "radar"
    }
}
