//! Command implementations.

pub mod convert;
pub mod dataset;
pub mod evaluate;
pub mod interpolate;
pub mod pipeline;
pub mod project;
pub mod synth;
pub mod table1;

use std::path::Path;

use radar_depth::interp::{InterpolationConfig, Neighborhood};
use radar_depth::radar::{FilterConfig, HeightExtensionConfig, DEFAULT_WINDOW};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::io::KeyValues;
use crate::{RadarArgs, SolverArgs};

/// Merges command-line flags over an optional key-value config file.
pub(crate) struct Settings {
    kv: KeyValues,
}

impl Settings {
    pub fn load(path: Option<&Path>, allowed: &[&str]) -> CliResult<Self> {
        let kv = match path {
            Some(p) => {
                let kv = KeyValues::read(p)?;
                kv.reject_unknown(allowed).map_err(|e| e.in_file(p))?;
                kv
            }
            None => KeyValues::default(),
        };
        Ok(Self { kv })
    }

    pub fn f64(&self, flag: Option<f64>, key: &str) -> CliResult<Option<f64>> {
        flag.map_or_else(|| self.kv.f64(key), |v| Ok(Some(v)))
    }

    pub fn usize(&self, flag: Option<usize>, key: &str) -> CliResult<Option<usize>> {
        flag.map_or_else(|| self.kv.usize(key), |v| Ok(Some(v)))
    }

    pub fn u64(&self, flag: Option<u64>, key: &str) -> CliResult<Option<u64>> {
        flag.map_or_else(|| self.kv.u64(key), |v| Ok(Some(v)))
    }

    pub fn bool(&self, flag: Option<bool>, key: &str) -> CliResult<Option<bool>> {
        flag.map_or_else(|| self.kv.bool(key), |v| Ok(Some(v)))
    }

    pub fn string(&self, flag: Option<String>, key: &str) -> CliResult<Option<String>> {
        flag.map_or_else(|| self.kv.string(key), |v| Ok(Some(v)))
    }
}

pub(crate) const RADAR_KEYS: &[&str] = &["window", "h_min", "h_max", "base_height", "ground_height", "ratio_threshold"];
pub(crate) const SOLVER_KEYS: &[&str] = &["neighborhood", "epsilon_var", "tolerance", "max_iterations"];

/// Resolved radar preprocessing settings.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RadarSettings {
    pub window: usize,
    pub extension: HeightExtensionConfig,
    pub ground_height: f64,
    pub filter: FilterConfig,
}

impl RadarSettings {
    pub fn resolve(args: &RadarArgs, s: &Settings, calib_ground: Option<f64>) -> CliResult<Self> {
        let d = HeightExtensionConfig::default();
        let extension = HeightExtensionConfig {
            h_min: s.f64(args.h_min, "h_min")?.unwrap_or(d.h_min),
            h_max: s.f64(args.h_max, "h_max")?.unwrap_or(d.h_max),
            base_height: s.f64(args.base_height, "base_height")?.unwrap_or(d.base_height),
        };
        extension.validate()?;
        let filter = FilterConfig {
            ratio_threshold: s
                .f64(args.ratio_threshold, "ratio_threshold")?
                .unwrap_or(FilterConfig::default().ratio_threshold),
        };
        filter.validate()?;
        let ground_height = s
            .f64(args.ground_height, "ground_height")?
            .or(calib_ground)
            .ok_or_else(|| CliError::input("ground height unknown: set 'ground_height' in the calibration or pass --ground-height"))?;
        let window = s.usize(args.window, "window")?.unwrap_or(DEFAULT_WINDOW);
        if window == 0 {
            return Err(CliError::input("window must be >= 1"));
        }
        Ok(Self {
            window,
            extension,
            ground_height,
            filter,
        })
    }

    pub fn to_json(self) -> Value {
        json!({
            "window": self.window,
            "h_min": self.extension.h_min,
            "h_max": self.extension.h_max,
            "base_height": self.extension.base_height,
            "ground_height": self.ground_height,
            "ratio_threshold": self.filter.ratio_threshold,
        })
    }

    /// Row label for a filter setting, `delta2` for the default threshold.
    pub fn threshold_label(&self) -> String {
        if self.filter.ratio_threshold == FilterConfig::default().ratio_threshold {
            "delta2".to_string()
        } else {
            format!("ratio<{}", self.filter.ratio_threshold)
        }
    }
}

pub(crate) fn resolve_solver(args: &SolverArgs, s: &Settings) -> CliResult<InterpolationConfig> {
    let d = InterpolationConfig::default();
    let neighborhood = match s.usize(args.neighborhood, "neighborhood")? {
        None | Some(8) => Neighborhood::Eight,
        Some(4) => Neighborhood::Four,
        Some(n) => return Err(CliError::input(format!("neighborhood must be 4 or 8, got {n}"))),
    };
    let cfg = InterpolationConfig {
        neighborhood,
        epsilon_var: s.f64(args.epsilon_var, "epsilon_var")?.unwrap_or(d.epsilon_var),
        solver_tolerance: s.f64(args.tolerance, "tolerance")?.unwrap_or(d.solver_tolerance),
        max_iterations: s.usize(args.max_iterations, "max_iterations")?.or(d.max_iterations),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub(crate) fn solver_json(cfg: &InterpolationConfig) -> Value {
    json!({
        "neighborhood": match cfg.neighborhood { Neighborhood::Four => 4, Neighborhood::Eight => 8 },
        "epsilon_var": cfg.epsilon_var,
        "tolerance": cfg.solver_tolerance,
        "max_iterations": cfg.max_iterations,
    })
}

pub(crate) fn concat_keys(parts: &[&[&'static str]]) -> Vec<&'static str> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}
