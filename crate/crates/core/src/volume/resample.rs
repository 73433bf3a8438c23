use super::{Dims, Grid, LabelVolume, Spacing};
use crate::error::{Error, Result};

/// Errors unless the two grids cover the same physical extent within half of
/// the coarser voxel on every axis.
pub fn check_extent(src: &Grid, target: &Grid) -> Result<()> {
    let src_ext = src.extent_mm();
    let dst_ext = target.extent_mm();
    for a in 0..3 {
        let tol = 0.5 * src.spacing[a].max(target.spacing[a]);
        if (src_ext[a] - dst_ext[a]).abs() > tol + 1e-9 {
            return Err(Error::ExtentMismatch {
                source_mm: src_ext,
                target_mm: dst_ext,
            });
        }
    }
    Ok(())
}

/// Nearest-neighbor resampling onto a grid covering the same physical extent.
///
/// Each output voxel takes the label of the input voxel whose cell contains
/// the output voxel centre. Extents must agree within half of the coarser
/// voxel on every axis.
pub fn upsample_nearest(
    vol: &LabelVolume,
    target_dims: Dims,
    target_spacing: Spacing,
) -> Result<LabelVolume> {
    let target = Grid::new(target_dims, target_spacing)?;
    let src = *vol.grid();
    check_extent(&src, &target)?;
    if src.dims == target.dims {
        return LabelVolume::new(target_dims, target_spacing, vol.as_slice().to_vec());
    }

    let axis_map = |a: usize| -> Vec<usize> {
        (0..target.dims[a])
            .map(|i| {
                let centre = (i as f64 + 0.5) * target.spacing[a];
                let j = (centre / src.spacing[a]).floor() as isize;
                j.clamp(0, src.dims[a] as isize - 1) as usize
            })
            .collect()
    };
    let mx = axis_map(0);
    let my = axis_map(1);
    let mz = axis_map(2);

    let mut out = Vec::with_capacity(target.len());
    for &sz in &mz {
        for &sy in &my {
            for &sx in &mx {
                out.push(vol.get(sx, sy, sz));
            }
        }
    }
    LabelVolume::new(target_dims, target_spacing, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_dims() {
        let v = LabelVolume::new([2, 2, 1], [1.0; 3], vec![1, 2, 3, 4]).unwrap();
        assert_eq!(upsample_nearest(&v, [2, 2, 1], [1.0; 3]).unwrap(), v);
    }

    #[test]
    fn single_voxel_fills_everything() {
        let v = LabelVolume::new([1, 1, 1], [4.0; 3], vec![6]).unwrap();
        let up = upsample_nearest(&v, [4, 4, 4], [1.0; 3]).unwrap();
        assert!(up.as_slice().iter().all(|&l| l == 6));
    }

    #[test]
    fn nearest_centre_doubling() {
        let v = LabelVolume::new([2, 1, 1], [2.0, 1.0, 1.0], vec![1, 2]).unwrap();
        let up = upsample_nearest(&v, [4, 1, 1], [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(up.as_slice(), &[1, 1, 2, 2]);
    }

    #[test]
    fn extent_mismatch_is_rejected() {
        let v = LabelVolume::new([2, 1, 1], [2.0, 1.0, 1.0], vec![1, 2]).unwrap();
        assert!(matches!(
            upsample_nearest(&v, [8, 1, 1], [1.0, 1.0, 1.0]),
            Err(Error::ExtentMismatch { .. })
        ));
    }
}
