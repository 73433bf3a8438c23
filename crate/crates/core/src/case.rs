//! A case: high-resolution blood pool plus low-resolution substructure labels.

use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::io::{read_label_volume, read_mask, write_label_volume, write_mask};
use crate::volume::{check_extent, upsample_nearest, BinaryMask, LabelVolume};

pub const BLOOD_POOL_FILE: &str = "blood_pool.cvol";
pub const SUBSTRUCTURES_FILE: &str = "substructures.cvol";

#[derive(Clone, Debug, PartialEq)]
pub struct CaseInput {
    pub id: String,
    blood_pool: BinaryMask,
    substructures: LabelVolume,
}

impl CaseInput {
    /// Checks that both volumes cover the same physical extent and the blood
    /// pool is non-empty.
    pub fn new(id: impl Into<String>, blood_pool: BinaryMask, substructures: LabelVolume) -> Result<Self> {
        if blood_pool.is_empty_mask() {
            return Err(Error::EmptyBloodPool);
        }
        check_extent(substructures.grid(), blood_pool.grid())?;
        Ok(CaseInput {
            id: id.into(),
            blood_pool,
            substructures,
        })
    }

    pub fn blood_pool(&self) -> &BinaryMask {
        &self.blood_pool
    }

    pub fn substructures(&self) -> &LabelVolume {
        &self.substructures
    }

    /// Substructure labels resampled onto the blood-pool grid.
    pub fn aligned_substructures(&self) -> Result<LabelVolume> {
        let g = self.blood_pool.grid();
        upsample_nearest(&self.substructures, g.dims, g.spacing)
    }

    /// Same case with every voxel spacing multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let s = |v: [f64; 3]| v.map(|x| x * factor);
        CaseInput::new(
            self.id.clone(),
            self.blood_pool.with_spacing(s(self.blood_pool.spacing()))?,
            self.substructures.with_spacing(s(self.substructures.spacing()))?,
        )
    }

    /// Reads `blood_pool.cvol` and `substructures.cvol` from a case directory;
    /// the id is the directory name.
    pub fn load(dir: &Path) -> Result<Self> {
        let id = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "case".to_string());
        let pool = read_mask(&dir.join(BLOOD_POOL_FILE))?;
        let sub = read_label_volume(&dir.join(SUBSTRUCTURES_FILE))?;
        CaseInput::new(id, pool, sub)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_mask(&dir.join(BLOOD_POOL_FILE), &self.blood_pool)?;
        write_label_volume(&dir.join(SUBSTRUCTURES_FILE), &self.substructures)
    }
}
