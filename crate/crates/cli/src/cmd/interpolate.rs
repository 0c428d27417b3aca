use serde_json::json;

use radar_depth::interp::interpolate_dense;

use super::{resolve_solver, solver_json, Settings, SOLVER_KEYS};
use crate::error::CliResult;
use crate::io::{read_depth, read_guidance, write_depth};
use crate::manifest::{sidecar_path, ManifestBuilder};
use crate::InterpolateArgs;

pub fn run(args: &InterpolateArgs) -> CliResult<()> {
    let settings = Settings::load(args.config.as_deref(), SOLVER_KEYS)?;
    let cfg = resolve_solver(&args.solver, &settings)?;
    let sparse = read_depth(&args.sparse)?;
    let guide = read_guidance(&args.guide)?;
    let result = interpolate_dense(&sparse, &guide, &cfg)?;
    write_depth(&args.out, &result.depth)?;
    println!(
        "iterations {} relative_residual {:.3e}",
        result.iterations, result.relative_residual
    );

    let mut m = ManifestBuilder::new(
        "interpolate",
        json!({
            "solver": solver_json(&cfg),
            "iterations": result.iterations,
            "relative_residual": result.relative_residual,
        }),
    );
    m.input(&args.sparse);
    m.input(&args.guide);
    if let Some(p) = &args.config {
        m.input(p);
    }
    m.output(&args.out);
    m.write(&sidecar_path(&args.out))
}
