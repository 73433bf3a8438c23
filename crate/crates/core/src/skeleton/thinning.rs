//! Topology-preserving curve thinning.
//!
//! Each pass peels border voxels in six directional sub-iterations. A voxel is
//! a candidate when its neighbor in the current direction is background, it
//! is simple, and it is not a curve endpoint. Candidates are then re-checked
//! and deleted one at a time in voxel-index order, which keeps every single
//! deletion topology-preserving and the result deterministic.
//!
//! A candidate whose opposite neighbor is also background sits in a layer one
//! voxel thick along the current direction. Such a voxel is deleted only if
//! no 26-neighbor was deleted earlier in the same sub-iteration; otherwise a
//! two-voxel-thick strand would be eaten away from its end one voxel after
//! another.

use super::topology::is_simple;
use crate::volume::{BinaryMask, OFFSETS_26, OFFSETS_6};

fn deletable(mask: &BinaryMask, i: usize) -> bool {
    let bits = mask.neighborhood_bits(mask.grid().coords(i));
    bits.count_ones() != 1 && is_simple(bits)
}

pub fn skeletonize(mask: &BinaryMask) -> BinaryMask {
    let mut m = mask.clone();
    let grid = *m.grid();
    let mut fg: Vec<usize> = m.ones().collect();
    // sub-iteration in which each voxel was deleted
    let mut stamp = vec![0u32; grid.len()];
    let mut pass = 0u32;
    loop {
        let mut changed = false;
        for dir in OFFSETS_6 {
            pass += 1;
            let back = dir.map(|v| -v);
            let candidates: Vec<(usize, bool)> = fg
                .iter()
                .filter_map(|&i| {
                    let c = grid.coords(i);
                    let border = grid.offset(c, dir).is_none_or(|j| !m.at(j));
                    if !border || !deletable(&m, i) {
                        return None;
                    }
                    let backed = grid.offset(c, back).is_some_and(|j| m.at(j));
                    Some((i, backed))
                })
                .collect();
            let mut removed = false;
            for (i, backed) in candidates {
                if !backed {
                    let c = grid.coords(i);
                    let touched = OFFSETS_26
                        .iter()
                        .any(|&o| grid.offset(c, o).is_some_and(|j| stamp[j] == pass));
                    if touched {
                        continue;
                    }
                }
                if deletable(&m, i) {
                    m.set_index(i, false);
                    stamp[i] = pass;
                    removed = true;
                }
            }
            if removed {
                fg.retain(|&i| m.at(i));
                changed = true;
            }
        }
        if !changed {
            return m;
        }
    }
}

/// True when no foreground voxel has a fully foreground 3x3x3 neighborhood.
pub fn is_thin(mask: &BinaryMask) -> bool {
    let g = mask.grid();
    mask.ones()
        .all(|i| mask.neighborhood_bits(g.coords(i)) != (1 << 26) - 1)
}
