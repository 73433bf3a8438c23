//! Text records for sampled skeletons.
//!
//! ```text
//! # skeleton v1
//! case_id=normal-0001
//! fingerprint=3f2a...
//! category=Normal
//! points=128
//! x y z r w
//! ...
//! ```
//!
//! Floats are written in shortest round-trip form, so records reload
//! bit-identically.

use std::fmt::Write as _;
use std::path::Path;

use super::sampling::{SamplePoint, SampledSkeleton};
use crate::error::{Error, Result};
use crate::volume::io::write_atomic;

const MAGIC: &str = "# skeleton v1";

pub fn render_record(s: &SampledSkeleton, category: Option<&str>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "case_id={}", s.case_id);
    let _ = writeln!(out, "fingerprint={}", s.fingerprint);
    if let Some(c) = category {
        let _ = writeln!(out, "category={c}");
    }
    let _ = writeln!(out, "points={}", s.points.len());
    for p in &s.points {
        let _ = writeln!(out, "{} {} {} {} {}", p.pos[0], p.pos[1], p.pos[2], p.r, p.w);
    }
    out
}

pub fn parse_record(text: &str, path: &Path) -> Result<(SampledSkeleton, Option<String>)> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(Error::format(path, "not a skeleton record"));
    }
    let (mut case_id, mut fingerprint, mut category, mut expected) = (None, None, None, None);
    let mut points = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            match k {
                "case_id" => case_id = Some(v.to_string()),
                "fingerprint" => fingerprint = Some(v.to_string()),
                "category" => category = Some(v.to_string()),
                "points" => {
                    expected = Some(
                        v.parse::<usize>()
                            .map_err(|e| Error::format(path, format!("points: {e}")))?,
                    )
                }
                _ => return Err(Error::format(path, format!("unknown key {k}"))),
            }
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format(path, format!("line {}: {e}", n + 2)))?;
        let [x, y, z, r, w] = <[f64; 5]>::try_from(vals)
            .map_err(|_| Error::format(path, format!("line {}: expected x y z r w", n + 2)))?;
        points.push(SamplePoint { pos: [x, y, z], r, w });
    }
    if expected.is_some_and(|e| e != points.len()) {
        return Err(Error::format(path, "point count does not match header"));
    }
    let skel = SampledSkeleton {
        case_id: case_id.ok_or_else(|| Error::format(path, "missing case_id"))?,
        fingerprint: fingerprint.ok_or_else(|| Error::format(path, "missing fingerprint"))?,
        points,
    };
    Ok((skel, category))
}

pub fn write_record(path: &Path, s: &SampledSkeleton, category: Option<&str>) -> Result<()> {
    write_atomic(path, render_record(s, category).as_bytes())
}

pub fn read_record(path: &Path) -> Result<(SampledSkeleton, Option<String>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_record(&text, path)
}
