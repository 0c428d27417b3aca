#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use radar_depth::DepthMap;
use radar_depth_cli::io::write_depth;

pub fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

pub fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_radar-depth"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

pub fn save(path: &Path, map: &DepthMap) {
    write_depth(path, map).unwrap();
}

pub const CALIB_100: &str = "fx 100\nfy 100\ncx 50\ncy 50\nwidth 100\nheight 100\n";

/// A wall wider than the field of view, 40 m ahead and 10 m tall.
pub const WALL_SCENE: &str = "ground 1.5\nfar 80\nbox 0 -3.5 40 200 10 1\n";
