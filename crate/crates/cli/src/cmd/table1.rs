use rayon::prelude::*;
use serde_json::json;

use radar_depth::interp::{interpolate_dense, InterpolationConfig};
use radar_depth::radar::{accumulate_frames, extend_height, filter_by_ratio, intrinsic_error, render_sparse_depth};
use radar_depth::{DepthMap, Error};

use super::dataset::Dataset;
use super::pipeline::modality_label;
use super::{concat_keys, resolve_solver, solver_json, RadarSettings, Settings, RADAR_KEYS, SOLVER_KEYS};
use crate::error::{CliError, CliResult};
use crate::io::{read_depth, read_guidance, write_bytes};
use crate::manifest::{sidecar_path, ManifestBuilder};
use crate::report::{IntrinsicRow, ReportTable};
use crate::Table1Args;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ReferenceKind {
    /// Exact rendered ground truth.
    Gt,
    /// Sparse lidar densified by guided interpolation.
    Lidar,
}

/// Row order: raw, raw filtered, extended, extended filtered.
const ROWS: [(bool, bool); 4] = [(false, false), (false, true), (true, false), (true, true)];

#[derive(Debug, Clone, Copy)]
struct Cell {
    points: usize,
    /// (δ₁, RMSE) when the map overlaps the reference.
    error: Option<(f64, f64)>,
}

pub fn run(args: &Table1Args) -> CliResult<()> {
    let allowed = concat_keys(&[RADAR_KEYS, SOLVER_KEYS, &["reference"]]);
    let settings = Settings::load(args.config.as_deref(), &allowed)?;
    let data = Dataset::load(&args.dataset, None)?;
    if data.is_empty() {
        return Err(CliError::input(format!("{}: dataset has no frames", args.dataset.display())));
    }
    let radar = RadarSettings::resolve(&args.radar, &settings, data.calib.ground_height)?;
    let kind = match settings.string(args.reference.clone(), "reference")?.as_deref() {
        None | Some("gt") => ReferenceKind::Gt,
        Some("lidar") => ReferenceKind::Lidar,
        Some(other) => return Err(CliError::input(format!("reference must be 'gt' or 'lidar', got '{other}'"))),
    };
    let solver = resolve_solver(&args.solver, &settings)?;

    let cells = (0..data.len())
        .into_par_iter()
        .map(|t| frame_cells(&data, t, &radar, kind, &solver))
        .collect::<CliResult<Vec<_>>>()?;
    let table = aggregate(&cells, &radar)?;
    print!("{table}");

    if let Some(out) = &args.out {
        write_bytes(out, table.intrinsic_csv().as_bytes())?;
        let mut m = ManifestBuilder::new(
            "table1",
            json!({
                "frames": data.len(),
                "reference": match kind { ReferenceKind::Gt => "gt", ReferenceKind::Lidar => "lidar" },
                "radar": radar.to_json(),
                "solver": solver_json(&solver),
            }),
        );
        m.input(&args.dataset);
        if let Some(p) = &args.config {
            m.input(p);
        }
        m.output(out);
        m.write(&sidecar_path(out))?;
    }
    Ok(())
}

fn reference_map(data: &Dataset, t: usize, kind: ReferenceKind, solver: &InterpolationConfig) -> CliResult<DepthMap> {
    match kind {
        ReferenceKind::Gt => read_depth(&data.path("gt", t)),
        ReferenceKind::Lidar => {
            let lidar = read_depth(&data.path("lidar", t))?;
            let guide = read_guidance(&data.path("guide", t))?;
            let dense = interpolate_dense(&lidar, &guide, solver).map_err(|e| CliError::from(e).in_file(&data.path("lidar", t)))?;
            Ok(dense.depth)
        }
    }
}

fn frame_cells(
    data: &Dataset,
    t: usize,
    radar: &RadarSettings,
    kind: ReferenceKind,
    solver: &InterpolationConfig,
) -> CliResult<[Cell; 4]> {
    let reference = reference_map(data, t, kind, solver)?;
    let first = (t + 1).saturating_sub(radar.window);
    let window = &data.frames[first..=t];
    let cloud = accumulate_frames(window, window.len() - 1, &data.calib.extrinsic)?;
    let intr = &data.calib.intrinsics;
    let raw = render_sparse_depth(&cloud, intr);
    let ext = extend_height(&cloud, intr, &radar.extension, radar.ground_height)?;
    let mut cells = [Cell { points: 0, error: None }; 4];
    for (cell, (extended, filtered)) in cells.iter_mut().zip(ROWS) {
        let base = if extended { &ext } else { &raw };
        let map = if filtered {
            filter_by_ratio(base, &reference, &radar.filter)?
        } else {
            base.clone()
        };
        let error = match intrinsic_error(&map, &reference, None) {
            Ok(r) => Some((r.delta1, r.rmse)),
            Err(Error::EmptyOverlap) => None,
            Err(e) => return Err(e.into()),
        };
        *cell = Cell {
            points: map.count_valid(),
            error,
        };
    }
    Ok(cells)
}

/// Averages per-frame results in frame order, so the output does not depend
/// on how frames were scheduled.
fn aggregate(cells: &[[Cell; 4]], radar: &RadarSettings) -> CliResult<ReportTable> {
    let frames = cells.len() as f64;
    let mut table = ReportTable::default();
    for (row, (extended, filtered)) in ROWS.iter().copied().enumerate() {
        let total: usize = cells.iter().map(|c| c[row].points).sum();
        // filtered rows are relative to the unfiltered row just above
        let baseline: usize = cells.iter().map(|c| c[row - usize::from(filtered)].points).sum();
        let (mut d1, mut rmse, mut n) = (0.0, 0.0, 0usize);
        for (d, r) in cells.iter().filter_map(|c| c[row].error) {
            d1 += d;
            rmse += r;
            n += 1;
        }
        let threshold = if filtered { radar.threshold_label() } else { "none".to_string() };
        if n == 0 {
            return Err(CliError::Numerical(format!(
                "{} / {threshold}: no frame overlaps the reference",
                modality_label(extended)
            )));
        }
        table.intrinsic.push(IntrinsicRow {
            modality: modality_label(extended).to_string(),
            threshold,
            delta1: d1 / n as f64,
            rmse: rmse / n as f64,
            points: total as f64 / frames,
            retained_pct: if baseline == 0 { 100.0 } else { 100.0 * total as f64 / baseline as f64 },
        });
    }
    Ok(table)
}
