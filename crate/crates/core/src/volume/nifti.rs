//! Minimal NIfTI-1 single-file (`n+1`) support for label volumes, plain or
//! gzipped.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::LabelVolume;
use crate::error::{Error, Result};

const HEADER_SIZE: usize = 348;
const MAGIC: &[u8; 4] = b"n+1\0";

#[derive(Clone, Copy)]
enum Endian {
    Little,
    Big,
}

struct Reader<'a> {
    buf: &'a [u8],
    endian: Endian,
}

impl Reader<'_> {
    fn bytes<const N: usize>(&self, at: usize) -> [u8; N] {
        let mut b = [0u8; N];
        b.copy_from_slice(&self.buf[at..at + N]);
        b
    }

    fn i16(&self, at: usize) -> i16 {
        match self.endian {
            Endian::Little => i16::from_le_bytes(self.bytes(at)),
            Endian::Big => i16::from_be_bytes(self.bytes(at)),
        }
    }

    fn i32(&self, at: usize) -> i32 {
        match self.endian {
            Endian::Little => i32::from_le_bytes(self.bytes(at)),
            Endian::Big => i32::from_be_bytes(self.bytes(at)),
        }
    }

    fn f32(&self, at: usize) -> f32 {
        match self.endian {
            Endian::Little => f32::from_le_bytes(self.bytes(at)),
            Endian::Big => f32::from_be_bytes(self.bytes(at)),
        }
    }

    fn f64(&self, at: usize) -> f64 {
        match self.endian {
            Endian::Little => f64::from_le_bytes(self.bytes(at)),
            Endian::Big => f64::from_be_bytes(self.bytes(at)),
        }
    }
}

fn load_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Reads a 3D NIfTI-1 label volume. Integer and float voxel types are
/// accepted as long as every (scaled) value is an integer label in 0..=7.
pub fn read_nifti_labels(path: &Path) -> Result<LabelVolume> {
    let buf = load_bytes(path)?;
    if buf.len() < HEADER_SIZE + 4 {
        return Err(Error::format(path, "file shorter than a NIfTI-1 header"));
    }
    let endian = if i32::from_le_bytes(buf[0..4].try_into().unwrap()) == HEADER_SIZE as i32 {
        Endian::Little
    } else if i32::from_be_bytes(buf[0..4].try_into().unwrap()) == HEADER_SIZE as i32 {
        Endian::Big
    } else {
        return Err(Error::format(path, "sizeof_hdr is not 348"));
    };
    let r = Reader { buf: &buf, endian };
    if &buf[344..348] != MAGIC {
        return Err(Error::format(path, "magic is not n+1 (single-file NIfTI-1)"));
    }
    let ndim = r.i16(40);
    if !(1..=7).contains(&ndim) {
        return Err(Error::format(path, format!("dim[0] = {ndim}")));
    }
    let mut dims = [1usize; 3];
    for (a, d) in dims.iter_mut().enumerate() {
        if (a as i16) < ndim {
            let v = r.i16(42 + 2 * a);
            if v < 1 {
                return Err(Error::format(path, format!("dim[{}] = {v}", a + 1)));
            }
            *d = v as usize;
        }
    }
    for a in 3..ndim as usize {
        if r.i16(42 + 2 * a) > 1 {
            return Err(Error::format(path, "only 3D volumes are supported"));
        }
    }
    let mut spacing = [1.0f64; 3];
    for (a, s) in spacing.iter_mut().enumerate() {
        let v = r.f32(80 + 4 * a).abs() as f64;
        if v > 0.0 && v.is_finite() {
            *s = v;
        }
    }
    let datatype = r.i16(70);
    let vox_offset = r.f32(108).max(HEADER_SIZE as f32) as usize;
    let slope = r.f32(112);
    let inter = r.f32(116);
    let (slope, inter) = if slope == 0.0 || !slope.is_finite() {
        (1.0, 0.0)
    } else {
        (slope as f64, inter as f64)
    };

    let n: usize = dims.iter().product();
    let width = match datatype {
        2 | 256 => 1,
        4 | 512 => 2,
        8 | 16 | 768 => 4,
        64 => 8,
        other => return Err(Error::format(path, format!("unsupported datatype {other}"))),
    };
    let need = vox_offset + n * width;
    if buf.len() < need {
        return Err(Error::format(
            path,
            format!("payload truncated: need {need} bytes, have {}", buf.len()),
        ));
    }
    let mut labels = Vec::with_capacity(n);
    for k in 0..n {
        let at = vox_offset + k * width;
        let raw = match datatype {
            2 => buf[at] as f64,
            256 => buf[at] as i8 as f64,
            4 => r.i16(at) as f64,
            512 => r.i16(at) as u16 as f64,
            8 => r.i32(at) as f64,
            768 => r.i32(at) as u32 as f64,
            16 => r.f32(at) as f64,
            _ => r.f64(at),
        };
        let v = raw * slope + inter;
        let rounded = v.round();
        if (v - rounded).abs() > 1e-3 || !(0.0..=7.0).contains(&rounded) {
            return Err(Error::format(path, format!("voxel {k} value {v} is not a label")));
        }
        labels.push(rounded as u8);
    }
    LabelVolume::new(dims, spacing, labels).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes a little-endian uint8 NIfTI-1 file; gzipped when the path ends in
/// `.gz`.
pub fn write_nifti_labels(path: &Path, vol: &LabelVolume) -> Result<()> {
    let mut hdr = vec![0u8; HEADER_SIZE];
    hdr[0..4].copy_from_slice(&(HEADER_SIZE as i32).to_le_bytes());
    let dims = vol.dims();
    let dim: [i16; 8] = [3, dims[0] as i16, dims[1] as i16, dims[2] as i16, 1, 1, 1, 1];
    for (k, d) in dim.iter().enumerate() {
        hdr[40 + 2 * k..42 + 2 * k].copy_from_slice(&d.to_le_bytes());
    }
    hdr[70..72].copy_from_slice(&2i16.to_le_bytes());
    hdr[72..74].copy_from_slice(&8i16.to_le_bytes());
    let sp = vol.spacing();
    let pixdim: [f32; 8] = [1.0, sp[0] as f32, sp[1] as f32, sp[2] as f32, 0.0, 0.0, 0.0, 0.0];
    for (k, p) in pixdim.iter().enumerate() {
        hdr[76 + 4 * k..80 + 4 * k].copy_from_slice(&p.to_le_bytes());
    }
    hdr[108..112].copy_from_slice(&352f32.to_le_bytes());
    hdr[112..116].copy_from_slice(&1f32.to_le_bytes());
    hdr[123] = 10; // xyzt_units: mm, s
    hdr[344..348].copy_from_slice(MAGIC);

    let mut out = hdr;
    out.extend_from_slice(&[0u8; 4]);
    out.extend_from_slice(vol.as_slice());

    let gz = path.extension().is_some_and(|e| e == "gz");
    if gz {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&out).map_err(|e| Error::io(path, e))?;
        out = enc.finish().map_err(|e| Error::io(path, e))?;
    }
    super::io::write_atomic(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LabelVolume {
        let labels = (0..24).map(|i| (i % 8) as u8).collect();
        LabelVolume::new([4, 3, 2], [0.25, 0.25, 0.5], labels).unwrap()
    }

    #[test]
    fn gz_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("case.nii.gz");
        write_nifti_labels(&p, &sample()).unwrap();
        assert_eq!(read_nifti_labels(&p).unwrap(), sample());
    }

    #[test]
    fn plain_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("case.nii");
        write_nifti_labels(&p, &sample()).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[344..348], b"n+1\0");
        assert_eq!(read_nifti_labels(&p).unwrap(), sample());
    }

    #[test]
    fn int16_big_endian_is_decoded() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("be.nii");
        let mut hdr = vec![0u8; 352];
        hdr[0..4].copy_from_slice(&348i32.to_be_bytes());
        for (k, d) in [3i16, 2, 1, 1, 1, 1, 1, 1].iter().enumerate() {
            hdr[40 + 2 * k..42 + 2 * k].copy_from_slice(&d.to_be_bytes());
        }
        hdr[70..72].copy_from_slice(&4i16.to_be_bytes());
        for (k, v) in [1f32, 2.0, 2.0, 2.0].iter().enumerate() {
            hdr[76 + 4 * k..80 + 4 * k].copy_from_slice(&v.to_be_bytes());
        }
        hdr[108..112].copy_from_slice(&352f32.to_be_bytes());
        hdr[344..348].copy_from_slice(b"n+1\0");
        hdr.extend_from_slice(&5i16.to_be_bytes());
        hdr.extend_from_slice(&7i16.to_be_bytes());
        fs::write(&p, hdr).unwrap();
        let v = read_nifti_labels(&p).unwrap();
        assert_eq!(v.as_slice(), &[5, 7]);
        assert_eq!(v.spacing(), [2.0, 2.0, 2.0]);
    }

    #[test]
    fn rejects_pair_files_and_bad_labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.nii");
        write_nifti_labels(&p, &sample()).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[344..348].copy_from_slice(b"ni1\0");
        fs::write(&p, &bytes).unwrap();
        assert!(read_nifti_labels(&p).is_err());

        bytes[344..348].copy_from_slice(b"n+1\0");
        bytes[352] = 9;
        fs::write(&p, &bytes).unwrap();
        assert!(read_nifti_labels(&p).is_err());
    }
}
