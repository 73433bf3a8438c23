//! Per-case feature extraction: connections, vessel skeleton, venous inflows
//! and LA islands.

use serde::{Deserialize, Serialize};

use crate::case::CaseInput;
use crate::classify::{classify, Diagnosis, Evidence};
use crate::emd::{match_templates, TemplateLibrary};
use crate::config::PipelineConfig;
use crate::connection::{analyze_aligned, la_islands, ConnectionFeatures};
use crate::error::Result;
use crate::skeleton::{
    refine_vessels, sample_and_normalize, skeleton_features, skeleton_graph, superior_inflows,
    venous_mask, vessel_mask, InflowCount, SampledSkeleton, SkeletonFeatures, SkeletonGraph,
};

/// Everything the classifier needs from one case, before template matching.
#[derive(Clone, Debug)]
pub struct CaseAnalysis {
    pub case_id: String,
    pub connections: ConnectionFeatures,
    pub skeleton: SkeletonFeatures,
    pub vessel_graph: SkeletonGraph,
    pub venous_graph: SkeletonGraph,
    pub inflows: InflowCount,
    pub la_islands: usize,
    /// `None` when the vessel mask leaves no skeleton.
    pub sampled: Option<SampledSkeleton>,
}

/// Compact graph statistics for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub endpoints: usize,
    pub junctions: usize,
    pub components: usize,
    pub length_mm: f64,
}

impl GraphSummary {
    pub fn of(g: &SkeletonGraph) -> Self {
        GraphSummary {
            nodes: g.len(),
            edges: g.edge_count(),
            endpoints: g.endpoints().len(),
            junctions: g.junctions().len(),
            components: g.components().len(),
            length_mm: g.total_length(),
        }
    }
}

pub fn analyze_case(case: &CaseInput, cfg: &PipelineConfig) -> Result<CaseAnalysis> {
    let aligned = case.aligned_substructures()?;
    let pool = case.blood_pool();
    let connections = analyze_aligned(pool, &aligned, case.substructures(), cfg);

    let vessels = refine_vessels(&vessel_mask(pool, &aligned), cfg);
    let vessel_graph = skeleton_graph(&vessels, &aligned, cfg);
    let skeleton = skeleton_features(&vessel_graph, cfg);
    let sampled = if vessel_graph.is_empty() {
        None
    } else {
        Some(sample_and_normalize(&vessel_graph, &case.id, cfg)?)
    };

    let venous = refine_vessels(&venous_mask(pool, &aligned), cfg);
    let venous_graph = skeleton_graph(&venous, &aligned, cfg);
    let inflows = superior_inflows(&venous_graph, cfg);

    Ok(CaseAnalysis {
        case_id: case.id.clone(),
        connections,
        skeleton,
        vessel_graph,
        venous_graph,
        inflows,
        la_islands: la_islands(case, cfg),
        sampled,
    })
}

/// Template matching plus the rule classifier on an analysed case.
pub fn diagnose(a: &CaseAnalysis, lib: &TemplateLibrary, cfg: &PipelineConfig) -> Result<Diagnosis> {
    let shape = a.sampled.as_ref().map(|s| match_templates(s, lib)).transpose()?;
    let ev = Evidence {
        conn: &a.connections,
        skel: &a.skeleton,
        shape: shape.as_ref(),
        la_islands: a.la_islands,
        inflows: &a.inflows,
    };
    Ok(classify(&a.case_id, &ev, cfg))
}

pub fn diagnose_case(case: &CaseInput, lib: &TemplateLibrary, cfg: &PipelineConfig) -> Result<Diagnosis> {
    diagnose(&analyze_case(case, cfg)?, lib, cfg)
}
