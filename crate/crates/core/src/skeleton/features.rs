//! Cycle, narrowing and great-artery bridge features of a vessel skeleton.

use serde::{Deserialize, Serialize};

use super::graph::SkeletonGraph;
use super::sampling::{resample, RawSample};
use crate::config::PipelineConfig;
use crate::volume::Label;

/// A maximal stretch of consecutive narrow samples on one branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NarrowRun {
    pub branch: usize,
    /// Arc-length interval along the branch, mm.
    pub start: f64,
    pub end: f64,
    pub length: f64,
    pub min_r: f64,
    /// `min_r` over the smaller flank radius.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonFeatures {
    pub has_cycle: bool,
    pub cycle_rank: usize,
    pub narrow_runs: Vec<NarrowRun>,
    pub max_narrow_run_length: f64,
    /// Some skeleton component runs from the aortic initial part to the
    /// pulmonary initial part.
    pub great_artery_bridge: bool,
    /// Median radius of PA-initial nodes over AO-initial nodes; 0 when no PA
    /// initial part is on the skeleton.
    pub pa_ao_radius_ratio: Option<f64>,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Narrow runs along one branch's samples (ordered by arc length).
///
/// Sample `k` is narrow when `r[k] < ratio * min(left, right)`, where `left`
/// is the largest median radius over any full window of `window` samples
/// entirely before `k` and `right` likewise after `k`. Samples lacking a full
/// window on either side are never narrow.
pub fn narrow_runs(samples: &[RawSample], step: f64, ratio: f64, window: usize) -> Vec<NarrowRun> {
    let n = samples.len();
    if n < 2 * window + 1 {
        return Vec::new();
    }
    let r: Vec<f64> = samples.iter().map(|s| s.r).collect();
    // medians of windows starting at each index
    let med: Vec<f64> = (0..=n - window)
        .map(|s| median(&mut r[s..s + window].to_vec()))
        .collect();
    let mut left_best = vec![f64::NAN; n];
    let mut best = f64::NEG_INFINITY;
    for k in window..n {
        best = best.max(med[k - window]);
        left_best[k] = best;
    }
    let mut right_best = vec![f64::NAN; n];
    best = f64::NEG_INFINITY;
    for k in (0..n - window).rev() {
        best = best.max(med[k + 1]);
        right_best[k] = best;
    }

    let mut runs = Vec::new();
    let mut k = 0;
    while k < n {
        let narrow = |k: usize| {
            let (l, rt) = (left_best[k], right_best[k]);
            l.is_finite() && rt.is_finite() && r[k] < ratio * l.min(rt)
        };
        if !narrow(k) {
            k += 1;
            continue;
        }
        let start = k;
        while k < n && narrow(k) {
            k += 1;
        }
        let run = &samples[start..k];
        let min_r = run.iter().map(|s| s.r).fold(f64::INFINITY, f64::min);
        let flank = (start..k)
            .map(|j| left_best[j].min(right_best[j]))
            .fold(f64::INFINITY, f64::min);
        runs.push(NarrowRun {
            branch: samples[start].branch,
            start: run[0].arc - 0.5 * step,
            end: run[run.len() - 1].arc + 0.5 * step,
            length: run.len() as f64 * step,
            min_r,
            ratio: min_r / flank,
        });
    }
    runs
}

pub fn skeleton_features(g: &SkeletonGraph, cfg: &PipelineConfig) -> SkeletonFeatures {
    let cycle_rank = g.cycle_rank();
    let mut runs = Vec::new();
    if let Ok((branches, samples)) = resample(g, cfg.sample_count) {
        let mut start = 0;
        while start < samples.len() {
            let b = samples[start].branch;
            let mut end = start;
            while end < samples.len() && samples[end].branch == b {
                end += 1;
            }
            let count = end - start;
            let step = branches.get(b).map_or(0.0, |br| br.length / count as f64);
            runs.extend(narrow_runs(
                &samples[start..end],
                step,
                cfg.narrow_ratio,
                cfg.flank_window,
            ));
            start = end;
        }
    }
    let max_len = runs.iter().map(|r| r.length).fold(0.0, f64::max);

    let has = |comp: &[usize], l: Label| comp.iter().any(|&n| g.nodes()[n].label == Some(l.id()));
    let bridge = g
        .components()
        .iter()
        .any(|c| has(c, Label::AO) && has(c, Label::PA));

    let radii = |l: Label| -> Vec<f64> {
        g.nodes()
            .iter()
            .filter(|n| n.label == Some(l.id()))
            .map(|n| n.r)
            .collect()
    };
    let (mut ao, mut pa) = (radii(Label::AO), radii(Label::PA));
    let pa_ao_radius_ratio = if ao.is_empty() {
        None
    } else if pa.is_empty() {
        Some(0.0)
    } else {
        Some(median(&mut pa) / median(&mut ao))
    };

    SkeletonFeatures {
        has_cycle: cycle_rank > 0,
        cycle_rank,
        narrow_runs: runs,
        max_narrow_run_length: max_len,
        great_artery_bridge: bridge,
        pa_ao_radius_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(r: &[f64]) -> Vec<RawSample> {
        r.iter()
            .enumerate()
            .map(|(k, &r)| RawSample {
                pos: [k as f64, 0.0, 0.0],
                r,
                branch: 0,
                arc: k as f64 + 0.5,
            })
            .collect()
    }

    #[test]
    fn constant_profile_has_no_runs() {
        assert!(narrow_runs(&profile(&[3.0; 30]), 1.0, 0.5, 5).is_empty());
    }

    #[test]
    fn middle_dip_is_one_run() {
        let mut r = vec![4.0; 30];
        for v in &mut r[10..20] {
            *v = 1.8;
        }
        let runs = narrow_runs(&profile(&r), 1.0, 0.5, 5);
        assert_eq!(runs.len(), 1);
        assert_eq!((runs[0].start, runs[0].end), (10.0, 20.0));
        assert_eq!(runs[0].length, 10.0);
        assert!((runs[0].ratio - 0.45).abs() < 1e-12);
    }

    #[test]
    fn tapering_end_is_not_narrow() {
        let mut r = vec![4.0; 20];
        r[19] = 0.5;
        r[18] = 1.0;
        assert!(narrow_runs(&profile(&r), 1.0, 0.5, 5).is_empty());
    }

    #[test]
    fn short_branches_are_skipped() {
        assert!(narrow_runs(&profile(&[4.0, 1.0, 4.0]), 1.0, 0.5, 5).is_empty());
    }
}
