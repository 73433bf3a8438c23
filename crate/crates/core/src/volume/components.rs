use super::{BinaryMask, Connectivity, Grid};

/// Connected-component labeling of a mask.
///
/// Ids are contiguous from 1 and ordered by component size, largest first
/// (ties keep the order of each component's lowest voxel index). Background
/// voxels carry id 0.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentLabeling {
    grid: Grid,
    ids: Vec<u32>,
    sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    #[inline]
    pub fn id_at(&self, i: usize) -> u32 {
        self.ids[i]
    }

    /// Voxel count per component; `sizes()[k]` belongs to id `k + 1`.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Mask of a single component.
    pub fn component_mask(&self, id: u32) -> BinaryMask {
        BinaryMask::from_fn(self.grid, |c| {
            self.ids[self.grid.index(c[0], c[1], c[2])] == id
        })
    }
}

pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> ComponentLabeling {
    let grid = *mask.grid();
    let offsets = connectivity.offsets();
    let mut raw = vec![0u32; grid.len()];
    let mut raw_sizes: Vec<usize> = Vec::new();
    let mut stack = Vec::new();

    for seed in mask.ones() {
        if raw[seed] != 0 {
            continue;
        }
        let id = raw_sizes.len() as u32 + 1;
        raw[seed] = id;
        stack.push(seed);
        let mut size = 0usize;
        while let Some(i) = stack.pop() {
            size += 1;
            let c = grid.coords(i);
            for off in offsets {
                if let Some(j) = grid.offset(c, *off) {
                    if mask.at(j) && raw[j] == 0 {
                        raw[j] = id;
                        stack.push(j);
                    }
                }
            }
        }
        raw_sizes.push(size);
    }

    // Stable sort keeps discovery order (lowest seed index) among equal sizes.
    let mut order: Vec<usize> = (0..raw_sizes.len()).collect();
    order.sort_by(|&a, &b| raw_sizes[b].cmp(&raw_sizes[a]));
    let mut remap = vec![0u32; raw_sizes.len() + 1];
    for (new, &old) in order.iter().enumerate() {
        remap[old + 1] = new as u32 + 1;
    }
    let ids = raw.into_iter().map(|r| remap[r as usize]).collect();
    let sizes = order.iter().map(|&o| raw_sizes[o]).collect();

    ComponentLabeling { grid, ids, sizes }
}

pub fn count_islands(mask: &BinaryMask, connectivity: Connectivity) -> usize {
    connected_components(mask, connectivity).count()
}

/// Drops components with fewer than `min_voxels` voxels.
pub fn remove_small_components(
    mask: &BinaryMask,
    connectivity: Connectivity,
    min_voxels: usize,
) -> BinaryMask {
    let labeling = connected_components(mask, connectivity);
    let keep: Vec<bool> = std::iter::once(false)
        .chain(labeling.sizes().iter().map(|&s| s >= min_voxels))
        .collect();
    BinaryMask::from_fn(*mask.grid(), |c| {
        keep[labeling.id_at(mask.grid().index(c[0], c[1], c[2])) as usize]
    })
}
