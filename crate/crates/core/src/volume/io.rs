//! CVOL volume files: a UTF-8 `key=value` header plus a sibling raw voxel
//! file (u8, x-fastest).
//!
//! ```text
//! format=CVOL
//! version=1
//! kind=labels
//! dims=128 128 128
//! spacing=1 1 1
//! dtype=u8
//! order=xyz
//! data=substructures.raw
//! label.1=LV
//! ...
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{BinaryMask, Dims, Label, LabelVolume, Spacing};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeKind {
    Labels,
    Mask,
}

impl VolumeKind {
    fn as_str(self) -> &'static str {
        match self {
            VolumeKind::Labels => "labels",
            VolumeKind::Mask => "mask",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvolHeader {
    pub kind: VolumeKind,
    pub dims: Dims,
    pub spacing: Spacing,
    pub data: PathBuf,
}

fn raw_sibling(header: &Path) -> PathBuf {
    header.with_extension("raw")
}

fn render_header(h: &CvolHeader) -> String {
    let mut out = String::new();
    out.push_str("format=CVOL\nversion=1\n");
    out.push_str(&format!("kind={}\n", h.kind.as_str()));
    out.push_str(&format!("dims={} {} {}\n", h.dims[0], h.dims[1], h.dims[2]));
    out.push_str(&format!(
        "spacing={} {} {}\n",
        h.spacing[0], h.spacing[1], h.spacing[2]
    ));
    out.push_str("dtype=u8\norder=xyz\n");
    out.push_str(&format!("data={}\n", h.data.display()));
    match h.kind {
        VolumeKind::Labels => {
            for l in Label::ALL {
                out.push_str(&format!("label.{}={}\n", l.id(), l.name()));
            }
        }
        VolumeKind::Mask => out.push_str("label.0=background\nlabel.1=foreground\n"),
    }
    out
}

pub fn read_header(path: &Path) -> Result<CvolHeader> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut kv = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::format(path, format!("line {}: expected key=value", n + 1)))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    if kv.get("format").map(String::as_str) != Some("CVOL") {
        return Err(Error::format(path, "missing format=CVOL"));
    }
    if let Some(dt) = kv.get("dtype") {
        if dt != "u8" {
            return Err(Error::format(path, format!("unsupported dtype {dt}")));
        }
    }
    if let Some(order) = kv.get("order") {
        if order != "xyz" {
            return Err(Error::format(path, format!("unsupported order {order}")));
        }
    }
    let triple = |key: &str| -> Result<[f64; 3]> {
        let v = kv
            .get(key)
            .ok_or_else(|| Error::format(path, format!("missing {key}")))?;
        let parts: Vec<f64> = v
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format(path, format!("{key}: {e}")))?;
        <[f64; 3]>::try_from(parts)
            .map_err(|_| Error::format(path, format!("{key} needs three values")))
    };
    let dims_f = triple("dims")?;
    if dims_f.iter().any(|d| d.fract() != 0.0 || *d < 1.0) {
        return Err(Error::format(path, "dims must be positive integers"));
    }
    let kind = match kv.get("kind").map(String::as_str) {
        None | Some("labels") => VolumeKind::Labels,
        Some("mask") => VolumeKind::Mask,
        Some(other) => return Err(Error::format(path, format!("unknown kind {other}"))),
    };
    let data = kv
        .get("data")
        .map(PathBuf::from)
        .unwrap_or_else(|| raw_sibling(Path::new(path.file_name().unwrap_or_default())));
    Ok(CvolHeader {
        kind,
        dims: dims_f.map(|d| d as usize),
        spacing: triple("spacing")?,
        data,
    })
}

fn read_payload(path: &Path) -> Result<(CvolHeader, Vec<u8>)> {
    let header = read_header(path)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let raw_path = dir.join(&header.data);
    let bytes = fs::read(&raw_path).map_err(|e| Error::io(&raw_path, e))?;
    let expected: usize = header.dims.iter().product();
    if bytes.len() != expected {
        return Err(Error::format(
            &raw_path,
            format!("expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    Ok((header, bytes))
}

pub fn read_label_volume(path: &Path) -> Result<LabelVolume> {
    let (h, bytes) = read_payload(path)?;
    LabelVolume::new(h.dims, h.spacing, bytes).map_err(|e| Error::format(path, e.to_string()))
}

/// Reads a mask; any nonzero voxel is foreground. Label files are accepted.
pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    let (h, bytes) = read_payload(path)?;
    BinaryMask::new(h.dims, h.spacing, bytes.into_iter().map(|b| b != 0).collect())
        .map_err(|e| Error::format(path, e.to_string()))
}

fn write_payload(path: &Path, kind: VolumeKind, dims: Dims, spacing: Spacing, bytes: &[u8]) -> Result<()> {
    let raw = raw_sibling(path);
    let header = CvolHeader {
        kind,
        dims,
        spacing,
        data: PathBuf::from(raw.file_name().unwrap_or_default()),
    };
    write_atomic(&raw, bytes)?;
    write_atomic(path, render_header(&header).as_bytes())
}

pub fn write_label_volume(path: &Path, vol: &LabelVolume) -> Result<()> {
    write_payload(path, VolumeKind::Labels, vol.dims(), vol.spacing(), vol.as_slice())
}

pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    let bytes: Vec<u8> = mask.as_slice().iter().map(|&b| b as u8).collect();
    write_payload(path, VolumeKind::Mask, mask.dims(), mask.spacing(), &bytes)
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_volume_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub.cvol");
        let v = LabelVolume::new([3, 2, 1], [0.5, 1.0, 2.0], vec![0, 1, 2, 3, 6, 7]).unwrap();
        write_label_volume(&p, &v).unwrap();
        assert!(dir.path().join("sub.raw").exists());
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.contains("label.6=AO"));
        assert_eq!(read_label_volume(&p).unwrap(), v);
    }

    #[test]
    fn mask_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pool.cvol");
        let m = BinaryMask::new([2, 2, 1], [1.0; 3], vec![true, false, false, true]).unwrap();
        write_mask(&p, &m).unwrap();
        assert_eq!(read_mask(&p).unwrap(), m);
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.cvol");
        let v = LabelVolume::new([2, 2, 2], [1.0; 3], vec![0; 8]).unwrap();
        write_label_volume(&p, &v).unwrap();
        fs::write(dir.path().join("v.raw"), [0u8; 7]).unwrap();
        assert!(read_label_volume(&p).is_err());
    }

    #[test]
    fn rejects_foreign_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.cvol");
        fs::write(&p, "dims=1 1 1\nspacing=1 1 1\n").unwrap();
        assert!(read_header(&p).is_err());
    }
}
