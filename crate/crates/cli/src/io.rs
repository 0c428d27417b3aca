//! On-disk formats: PFM depth maps, 16-bit PNG export, CSV point clouds,
//! key-value calibration and configuration files, pose and timestamp lists.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Point3;
use radar_depth::interp::GuidanceImage;
use radar_depth::{CameraIntrinsics, DepthMap, PointAttributes, PointCloud, RigidTransform};

use crate::error::{CliError, CliResult};

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

// ---------------------------------------------------------------------------
// PFM

/// Grayscale PFM ("Pf"), little-endian, scanlines bottom to top.
pub fn encode_pfm(map: &DepthMap) -> Vec<u8> {
    let (w, h) = (map.width(), map.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(4 * w * h);
    for v in (0..h).rev() {
        for u in 0..w {
            out.extend_from_slice(&(map.get(u, v) as f32).to_le_bytes());
        }
    }
    out
}

/// Decodes a grayscale PFM of either byte order. Non-finite and
/// non-positive samples become 0 (no measurement).
pub fn decode_pfm(bytes: &[u8]) -> CliResult<DepthMap> {
    let (raw, w, h) = decode_pfm_raw(bytes)?;
    let data = raw
        .into_iter()
        .map(|x| if x.is_finite() && x > 0.0 { x as f64 } else { 0.0 })
        .collect();
    Ok(DepthMap::from_vec(w, h, data)?)
}

fn decode_pfm_raw(bytes: &[u8]) -> CliResult<(Vec<f32>, usize, usize)> {
    let mut pos = 0;
    let mut token = || -> CliResult<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(CliError::input("truncated PFM header"));
        }
        let t = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
        Ok(t)
    };
    let magic = token()?;
    match magic.as_str() {
        "Pf" => {}
        "PF" => return Err(CliError::input("color PFM is not supported; expected grayscale 'Pf'")),
        other => return Err(CliError::input(format!("not a PFM file (magic '{other}')"))),
    }
    let dim = |t: String, what: &str| {
        t.parse::<usize>()
            .map_err(|_| CliError::input(format!("bad PFM {what} '{t}'")))
    };
    let w = dim(token()?, "width")?;
    let h = dim(token()?, "height")?;
    let scale_tok = token()?;
    let scale: f64 = scale_tok
        .parse()
        .map_err(|_| CliError::input(format!("bad PFM scale '{scale_tok}'")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(CliError::input("PFM scale must be non-zero"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let need = 4 * w * h;
    let body = bytes
        .get(pos..)
        .filter(|b| b.len() >= need)
        .ok_or_else(|| CliError::input(format!("PFM raster truncated: need {need} bytes")))?;
    let little = scale < 0.0;
    let mut data = vec![0f32; w * h];
    for (i, chunk) in body[..need].chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let x = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let (u, row_from_bottom) = (i % w, i / w);
        data[(h - 1 - row_from_bottom) * w + u] = x;
    }
    Ok((data, w, h))
}

pub fn read_depth(path: &Path) -> CliResult<DepthMap> {
    decode_pfm(&read_bytes(path)?).map_err(|e| e.in_file(path))
}

pub fn write_depth(path: &Path, map: &DepthMap) -> CliResult<()> {
    write_bytes(path, &encode_pfm(map))
}

/// 16-bit PNG at 1/256 m per count; 0 stays "no measurement".
pub fn write_depth_png16(path: &Path, map: &DepthMap) -> CliResult<()> {
    let data: Vec<u16> = map
        .data()
        .iter()
        .map(|d| (d * 256.0).round().clamp(0.0, u16::MAX as f64) as u16)
        .collect();
    let img = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(map.width() as u32, map.height() as u32, data)
        .ok_or_else(|| CliError::input("depth map too large for PNG"))?;
    img.save(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn read_depth_png16(path: &Path) -> CliResult<DepthMap> {
    let img = image::open(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        .into_luma16();
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(|x| x as f64 / 256.0).collect();
    Ok(DepthMap::from_vec(w as usize, h as usize, data)?)
}

/// PNG files are read as 16-bit depth, anything else as PFM.
pub fn read_depth_any(path: &Path) -> CliResult<DepthMap> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
        read_depth_png16(path)
    } else {
        read_depth(path)
    }
}

// ---------------------------------------------------------------------------
// Guidance images

/// Reads guidance from a PFM (values must lie in [0, 1]) or any 8/16-bit
/// image, converted to luminance.
pub fn read_guidance(path: &Path) -> CliResult<GuidanceImage> {
    let is_pfm = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pfm"));
    if is_pfm {
        let (raw, w, h) = decode_pfm_raw(&read_bytes(path)?).map_err(|e| e.in_file(path))?;
        let lum = raw.into_iter().map(|x| x as f64).collect();
        return GuidanceImage::new(w, h, lum).map_err(|e| CliError::from(e).in_file(path));
    }
    let img = image::open(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        .into_rgb8();
    let (w, h) = img.dimensions();
    Ok(GuidanceImage::from_rgb8(w as usize, h as usize, img.as_raw())?)
}

pub fn write_guidance_png(path: &Path, guide: &GuidanceImage) -> CliResult<()> {
    let data: Vec<u8> = guide
        .luminance()
        .iter()
        .map(|y| (y * 255.0).round() as u8)
        .collect();
    let img = image::GrayImage::from_raw(guide.width() as u32, guide.height() as u32, data)
        .ok_or_else(|| CliError::input("guidance image too large for PNG"))?;
    img.save(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// Point clouds

const XYZ_HEADER: &str = "x,y,z";
const FULL_HEADER: &str = "x,y,z,rcs,vx,vy";

/// Parses `x,y,z[,rcs,vx,vy]` CSV. An empty file is an empty cloud.
pub fn parse_point_cloud(text: &str, frame: &str) -> CliResult<PointCloud> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut cloud = PointCloud::new(frame);
    let Some((lineno, header)) = lines.next() else {
        return Ok(cloud);
    };
    let cols: Vec<String> = header.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
    let with_attrs = match cols.join(",").as_str() {
        XYZ_HEADER => false,
        FULL_HEADER => true,
        _ => {
            return Err(CliError::input(format!(
                "line {lineno}: expected header '{XYZ_HEADER}' or '{FULL_HEADER}', got '{header}'"
            )))
        }
    };
    for (lineno, line) in lines {
        let vals = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::input(format!("line {lineno}: '{}' is not a finite number", f.trim())))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        if vals.len() != cols.len() {
            return Err(CliError::input(format!(
                "line {lineno}: expected {} columns, got {}",
                cols.len(),
                vals.len()
            )));
        }
        let p = Point3::new(vals[0], vals[1], vals[2]);
        if with_attrs {
            cloud.push_with_attributes(
                p,
                PointAttributes {
                    rcs: vals[3],
                    vx: vals[4],
                    vy: vals[5],
                },
            );
        } else {
            cloud.push(p);
        }
    }
    Ok(cloud)
}

pub fn format_point_cloud(cloud: &PointCloud) -> String {
    let mut s = String::new();
    match cloud.attributes() {
        Some(attrs) => {
            let _ = writeln!(s, "{FULL_HEADER}");
            for (p, a) in cloud.points().iter().zip(attrs) {
                let _ = writeln!(s, "{},{},{},{},{},{}", p.x, p.y, p.z, a.rcs, a.vx, a.vy);
            }
        }
        None => {
            let _ = writeln!(s, "{XYZ_HEADER}");
            for p in cloud.points() {
                let _ = writeln!(s, "{},{},{}", p.x, p.y, p.z);
            }
        }
    }
    s
}

pub fn read_point_cloud(path: &Path, frame: &str) -> CliResult<PointCloud> {
    parse_point_cloud(&read_text(path)?, frame).map_err(|e| e.in_file(path))
}

// ---------------------------------------------------------------------------
// Key-value files

/// `key value...` lines with `#` comments; later keys override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, Vec<String>)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace().map(str::to_string);
            let key = fields.next().unwrap_or_default();
            let key = key.trim_end_matches([':', '=']).to_string();
            let vals: Vec<String> = fields.filter(|f| f != "=" && f != ":").collect();
            if vals.is_empty() {
                return Err(CliError::input(format!("line {}: key '{key}' has no value", i + 1)));
            }
            entries.insert(key, (i + 1, vals));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        Self::parse(&read_text(path)?).map_err(|e| e.in_file(path))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<&(usize, Vec<String>)> {
        self.entries.get(key)
    }

    pub fn f64(&self, key: &str) -> CliResult<Option<f64>> {
        let Some((line, vals)) = self.raw(key) else { return Ok(None) };
        match vals.as_slice() {
            [v] => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| CliError::input(format!("line {line}: key '{key}' needs a number, got '{v}'"))),
            _ => Err(CliError::input(format!("line {line}: key '{key}' takes one value, got {}", vals.len()))),
        }
    }

    pub fn usize(&self, key: &str) -> CliResult<Option<usize>> {
        let Some((line, vals)) = self.raw(key) else { return Ok(None) };
        match vals.as_slice() {
            [v] => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| CliError::input(format!("line {line}: key '{key}' needs a non-negative integer, got '{v}'"))),
            _ => Err(CliError::input(format!("line {line}: key '{key}' takes one value, got {}", vals.len()))),
        }
    }

    pub fn u64(&self, key: &str) -> CliResult<Option<u64>> {
        Ok(self.usize(key)?.map(|v| v as u64))
    }

    pub fn bool(&self, key: &str) -> CliResult<Option<bool>> {
        let Some((line, vals)) = self.raw(key) else { return Ok(None) };
        match vals.as_slice() {
            [v] => match v.to_ascii_lowercase().as_str() {
                "true" | "on" | "yes" | "1" => Ok(Some(true)),
                "false" | "off" | "no" | "0" => Ok(Some(false)),
                _ => Err(CliError::input(format!("line {line}: key '{key}' needs true/false, got '{v}'"))),
            },
            _ => Err(CliError::input(format!("line {line}: key '{key}' takes one value"))),
        }
    }

    pub fn string(&self, key: &str) -> CliResult<Option<String>> {
        let Some((line, vals)) = self.raw(key) else { return Ok(None) };
        match vals.as_slice() {
            [v] => Ok(Some(v.clone())),
            _ => Err(CliError::input(format!("line {line}: key '{key}' takes one value"))),
        }
    }

    pub fn transform(&self, key: &str) -> CliResult<Option<RigidTransform>> {
        let Some((line, vals)) = self.raw(key) else { return Ok(None) };
        let nums = parse_numbers(vals)
            .ok_or_else(|| CliError::input(format!("line {line}: key '{key}' needs 12 numbers")))?;
        let arr: [f64; 12] = nums
            .try_into()
            .map_err(|v: Vec<f64>| CliError::input(format!("line {line}: key '{key}' needs 12 numbers, got {}", v.len())))?;
        RigidTransform::from_row_major_3x4(&arr)
            .map(Some)
            .map_err(|e| CliError::input(format!("line {line}: key '{key}': {e}")))
    }

    /// Fails on any key outside `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> CliResult<()> {
        match self.entries.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            Some((k, (line, _))) => Err(CliError::input(format!("line {line}: unknown key '{k}'"))),
            None => Ok(()),
        }
    }
}

fn parse_numbers(vals: &[String]) -> Option<Vec<f64>> {
    vals.iter()
        .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
        .collect()
}

// ---------------------------------------------------------------------------
// Calibration

/// Camera calibration plus the mounting information a dataset needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub intrinsics: CameraIntrinsics,
    /// Camera-from-input-frame transform (the point-cloud or ego frame).
    pub extrinsic: RigidTransform,
    /// Radar sensor to ego frame.
    pub radar_extrinsic: RigidTransform,
    /// Camera height above the ground plane, meters.
    pub ground_height: Option<f64>,
}

const CALIB_KEYS: &[&str] = &[
    "fx",
    "fy",
    "cx",
    "cy",
    "width",
    "height",
    "extrinsic",
    "radar_extrinsic",
    "ground_height",
];

impl Calibration {
    pub fn parse(text: &str) -> CliResult<Self> {
        let kv = KeyValues::parse(text)?;
        kv.reject_unknown(CALIB_KEYS)?;
        let req_f = |k: &str| kv.f64(k)?.ok_or_else(|| CliError::input(format!("missing key '{k}'")));
        let req_u = |k: &str| kv.usize(k)?.ok_or_else(|| CliError::input(format!("missing key '{k}'")));
        let (fx, fy, cx, cy) = (req_f("fx")?, req_f("fy")?, req_f("cx")?, req_f("cy")?);
        let (width, height) = (req_u("width")?, req_u("height")?);
        let intrinsics = CameraIntrinsics::new(fx, fy, cx, cy, width, height)
            .map_err(|e| CliError::input(format!("intrinsics (keys fx/fy/cx/cy/width/height): {e}")))?;
        Ok(Self {
            intrinsics,
            extrinsic: kv.transform("extrinsic")?.unwrap_or_default(),
            radar_extrinsic: kv.transform("radar_extrinsic")?.unwrap_or_default(),
            ground_height: kv.f64("ground_height")?,
        })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        Self::parse(&read_text(path)?).map_err(|e| e.in_file(path))
    }

    pub fn to_text(&self) -> String {
        let i = &self.intrinsics;
        let mut s = String::new();
        let _ = writeln!(s, "fx {}\nfy {}\ncx {}\ncy {}\nwidth {}\nheight {}", i.fx, i.fy, i.cx, i.cy, i.width, i.height);
        let _ = writeln!(s, "extrinsic {}", join_numbers(&self.extrinsic.to_row_major_3x4()));
        let _ = writeln!(s, "radar_extrinsic {}", join_numbers(&self.radar_extrinsic.to_row_major_3x4()));
        if let Some(g) = self.ground_height {
            let _ = writeln!(s, "ground_height {g}");
        }
        s
    }
}

fn join_numbers(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

// ---------------------------------------------------------------------------
// Poses and timestamps

/// One ego-to-global pose per line, 12 row-major numbers.
pub fn parse_poses(text: &str) -> CliResult<Vec<RigidTransform>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            let vals: Vec<String> = l.split_whitespace().map(str::to_string).collect();
            let nums = parse_numbers(&vals).ok_or_else(|| CliError::input(format!("line {}: non-numeric pose value", i + 1)))?;
            let arr: [f64; 12] = nums
                .try_into()
                .map_err(|v: Vec<f64>| CliError::input(format!("line {}: pose needs 12 numbers, got {}", i + 1, v.len())))?;
            RigidTransform::from_row_major_3x4(&arr).map_err(|e| CliError::input(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn format_poses(poses: &[RigidTransform]) -> String {
    poses
        .iter()
        .map(|p| join_numbers(&p.to_row_major_3x4()) + "\n")
        .collect()
}

pub fn parse_timestamps(text: &str) -> CliResult<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .ok()
                .filter(|t| t.is_finite())
                .ok_or_else(|| CliError::input(format!("line {}: bad timestamp '{}'", i + 1, l.trim())))
        })
        .collect()
}

pub fn format_timestamps(ts: &[f64]) -> String {
    ts.iter().map(|t| format!("{t}\n")).collect()
}
