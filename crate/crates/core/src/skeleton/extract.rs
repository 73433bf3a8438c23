//! Vessel and venous mask extraction, refinement and skeleton assembly.

use serde::{Deserialize, Serialize};

use super::graph::{build_graph, prune_spurs, SkeletonGraph};
use super::thinning::skeletonize;
use crate::case::CaseInput;
use crate::config::PipelineConfig;
use crate::error::Result;
use crate::volume::{
    connected_components, distance_transform, erode, remove_small_components, BinaryMask, Label,
    LabelVolume,
};

fn is_chamber_or_myo(l: u8) -> bool {
    matches!(
        Label::from_u8(l),
        Some(Label::LV | Label::RV | Label::LA | Label::RA | Label::Myo)
    )
}

/// Blood-pool voxels not claimed by a chamber or the myocardium in the aligned
/// substructure map.
pub fn vessel_mask(pool: &BinaryMask, aligned: &LabelVolume) -> BinaryMask {
    let g = *pool.grid();
    let mut out = BinaryMask::empty(g);
    for i in pool.ones() {
        if !is_chamber_or_myo(aligned.at(i)) {
            out.set_index(i, true);
        }
    }
    out
}

pub fn extract_vessels(case: &CaseInput) -> Result<BinaryMask> {
    let aligned = case.aligned_substructures()?;
    Ok(vessel_mask(case.blood_pool(), &aligned))
}

/// Drops small islands, erodes, then drops islands again.
pub fn refine_vessels(mask: &BinaryMask, cfg: &PipelineConfig) -> BinaryMask {
    let conn = cfg.component_connectivity;
    let cleaned = remove_small_components(mask, conn, cfg.min_island_voxels);
    let eroded = erode(&cleaned, cfg.erosion_iters);
    remove_small_components(&eroded, conn, cfg.min_island_voxels)
}

/// Thins a refined mask, prunes short spurs and annotates each skeleton voxel
/// with its inscribed radius and aligned label.
pub fn skeleton_graph(
    refined: &BinaryMask,
    aligned: &LabelVolume,
    cfg: &PipelineConfig,
) -> SkeletonGraph {
    let edt = distance_transform(refined);
    let skel = prune_spurs(&skeletonize(refined), &edt, cfg.spur_prune_factor);
    let mut g = build_graph(&skel, &edt);
    g.annotate_labels(aligned);
    g
}

/// Blood-pool voxels labeled RA: the atrium together with the caval inflows.
pub fn venous_mask(pool: &BinaryMask, aligned: &LabelVolume) -> BinaryMask {
    let g = *pool.grid();
    let mut out = BinaryMask::empty(g);
    for i in pool.ones() {
        if aligned.at(i) == Label::RA.id() {
            out.set_index(i, true);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflowCount {
    /// Height of the widest venous skeleton node, mm.
    pub reference_z: f64,
    pub threshold_z: f64,
    pub count: usize,
}

/// Counts superior inflow branches: connected pieces of the venous skeleton
/// lying more than `svc_min_rise` above its widest node.
pub fn superior_inflows(g: &SkeletonGraph, cfg: &PipelineConfig) -> InflowCount {
    let nodes = g.nodes();
    let Some(widest) = (0..nodes.len()).max_by(|&a, &b| nodes[a].r.total_cmp(&nodes[b].r).then(b.cmp(&a)))
    else {
        return InflowCount {
            reference_z: 0.0,
            threshold_z: 0.0,
            count: 0,
        };
    };
    let reference_z = nodes[widest].pos[2];
    let threshold_z = reference_z + cfg.svc_min_rise;
    let mut above = BinaryMask::empty(*g.grid());
    for n in nodes.iter().filter(|n| n.pos[2] > threshold_z) {
        above.set(n.voxel[0], n.voxel[1], n.voxel[2], true);
    }
    InflowCount {
        reference_z,
        threshold_z,
        count: connected_components(&above, crate::volume::Connectivity::TwentySix).count(),
    }
}
