//! Connectivity between chambers and great-artery initial parts after
//! removing the high-resolution blood-pool boundary from the substructure map.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::case::CaseInput;
use crate::config::PipelineConfig;
use crate::error::Result;
use crate::volume::{boundary, connected_components, count_islands, BinaryMask, Label, LabelVolume};

/// Which ventricle(s) a great-artery initial part connects to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    LV,
    RV,
    Both,
    None,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::LV => "LV",
            Origin::RV => "RV",
            Origin::Both => "Both",
            Origin::None => "None",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionFeatures {
    pub la_ra_connected: bool,
    pub lv_rv_connected: bool,
    pub ao_origin: Origin,
    pub pa_origin: Origin,
    pub n_initial_parts: usize,
    pub missing_chambers: Vec<Label>,
}

/// Aligned substructure labels with the blood-pool boundary deleted and
/// everything outside the pool or labeled Myo set to background.
pub fn strip_boundary(pool: &BinaryMask, aligned: &LabelVolume) -> LabelVolume {
    let bnd = boundary(pool);
    let mut labels = vec![0u8; pool.grid().len()];
    for i in pool.ones() {
        let l = aligned.at(i);
        if !bnd.at(i) && l != Label::Myo.id() {
            labels[i] = l;
        }
    }
    let g = pool.grid();
    LabelVolume::new(g.dims, g.spacing, labels).expect("labels copied from a valid volume")
}

/// Whether some component of the union of the two label regions holds voxels
/// of both. Adjacent voxels of the two labels always share a component.
pub fn labels_connected(map: &LabelVolume, a: Label, b: Label, cfg: &PipelineConfig) -> bool {
    let union = map.mask_where(|l| l == a.id() || l == b.id());
    if union.is_empty_mask() {
        return false;
    }
    let cc = connected_components(&union, cfg.component_connectivity);
    let mut has_a = vec![false; cc.count() + 1];
    let mut has_b = vec![false; cc.count() + 1];
    for i in union.ones() {
        let id = cc.id_at(i) as usize;
        if map.at(i) == a.id() {
            has_a[id] = true;
        } else {
            has_b[id] = true;
        }
    }
    has_a.iter().zip(&has_b).any(|(x, y)| *x && *y)
}

fn origin(map: &LabelVolume, part: Label, cfg: &PipelineConfig) -> Origin {
    match (
        labels_connected(map, part, Label::LV, cfg),
        labels_connected(map, part, Label::RV, cfg),
    ) {
        (true, true) => Origin::Both,
        (true, false) => Origin::LV,
        (false, true) => Origin::RV,
        (false, false) => Origin::None,
    }
}

/// Components of the initial-part union large enough to be real, capped at 2.
fn initial_parts(map: &LabelVolume, cfg: &PipelineConfig) -> usize {
    let parts = map.mask_where(|l| l == Label::AO.id() || l == Label::PA.id());
    let cc = connected_components(&parts, cfg.component_connectivity);
    let n = cc.sizes().iter().filter(|&&s| s >= cfg.min_island_voxels).count();
    if n > 2 {
        log::warn!("{n} initial-part components; reporting 2");
    }
    n.min(2)
}

pub fn missing_chambers(substructures: &LabelVolume) -> Vec<Label> {
    Label::CHAMBERS
        .into_iter()
        .filter(|&l| substructures.count(l) == 0)
        .collect()
}

/// Islands of the low-resolution LA label.
pub fn la_islands(case: &CaseInput, cfg: &PipelineConfig) -> usize {
    count_islands(
        &case.substructures().mask_of(Label::LA),
        cfg.component_connectivity,
    )
}

/// Connection analysis on an already aligned substructure map.
pub fn analyze_aligned(
    pool: &BinaryMask,
    aligned: &LabelVolume,
    low_res: &LabelVolume,
    cfg: &PipelineConfig,
) -> ConnectionFeatures {
    let map = strip_boundary(pool, aligned);
    ConnectionFeatures {
        la_ra_connected: labels_connected(&map, Label::LA, Label::RA, cfg),
        lv_rv_connected: labels_connected(&map, Label::LV, Label::RV, cfg),
        ao_origin: origin(&map, Label::AO, cfg),
        pa_origin: origin(&map, Label::PA, cfg),
        n_initial_parts: initial_parts(&map, cfg),
        missing_chambers: missing_chambers(low_res),
    }
}

pub fn analyze_connections(case: &CaseInput, cfg: &PipelineConfig) -> Result<ConnectionFeatures> {
    let aligned = case.aligned_substructures()?;
    Ok(analyze_aligned(
        case.blood_pool(),
        &aligned,
        case.substructures(),
        cfg,
    ))
}
