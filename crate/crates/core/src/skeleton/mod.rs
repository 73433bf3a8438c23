//! Vessel skeletons: extraction, thinning, graph building, sampling and
//! shape features.

mod extract;
mod features;
mod graph;
pub mod record;
mod sampling;
mod thinning;
pub mod topology;

pub use extract::{
    extract_vessels, refine_vessels, skeleton_graph, superior_inflows, venous_mask, vessel_mask,
    InflowCount,
};
pub use features::{narrow_runs, skeleton_features, NarrowRun, SkeletonFeatures};
pub use graph::{build_graph, prune_spurs, Branch, SkeletonGraph, SkeletonNode};
pub use sampling::{
    allocate, normalize, resample, sample_and_normalize, RawSample, SamplePoint, SampledSkeleton,
};
pub use thinning::{is_thin, skeletonize};
