//! Uniform arc-length resampling of a skeleton graph and shape normalization.

use serde::{Deserialize, Serialize};

use super::graph::{Branch, SkeletonGraph};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub pos: [f64; 3],
    pub r: f64,
    pub w: f64,
}

/// Normalized weighted point set describing a vessel tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledSkeleton {
    pub case_id: String,
    /// Shape fingerprint of the config that produced it.
    pub fingerprint: String,
    pub points: Vec<SamplePoint>,
}

impl SampledSkeleton {
    pub fn weights(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.w).collect()
    }

    pub fn positions(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(|p| p.pos).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.w).sum()
    }

    pub fn centroid(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for p in &self.points {
            for a in 0..3 {
                c[a] += p.w * p.pos[a];
            }
        }
        c
    }

    /// Weighted root-mean-square distance from the origin.
    pub fn rms(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.w * p.pos.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// A raw (unnormalized) sample in mm, tagged with the branch it came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawSample {
    pub pos: [f64; 3],
    pub r: f64,
    pub branch: usize,
    /// Arc length from the start of the branch, mm.
    pub arc: f64,
}

fn lerp3(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    ]
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Splits `total` samples across `lengths` proportionally, by largest
/// remainder; ties go to the earlier entry. Quotas are snapped to a 1e-9 grid
/// first, so equal lengths measured with rounding noise (say after a change
/// of voxel spacing) still tie.
pub fn allocate(total: usize, lengths: &[f64]) -> Vec<usize> {
    let sum: f64 = lengths.iter().sum();
    if sum <= 0.0 {
        return vec![0; lengths.len()];
    }
    let quotas: Vec<f64> = lengths
        .iter()
        .map(|l| (total as f64 * l / sum * 1e9).round() / 1e9)
        .collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - counts[a] as f64;
        let rb = quotas[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(total.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

/// Points at arc lengths `(k + 0.5) * L / n` along one branch.
fn sample_branch(g: &SkeletonGraph, b: &Branch, n: usize, branch: usize, out: &mut Vec<RawSample>) {
    if n == 0 {
        return;
    }
    let nodes = g.nodes();
    let pos = g.smoothed_path(&b.nodes);
    let step = b.length / n as f64;
    let mut seg = 0;
    let mut seg_start = 0.0;
    for k in 0..n {
        let s = (k as f64 + 0.5) * step;
        loop {
            let (a, c) = (&nodes[b.nodes[seg]], &nodes[b.nodes[seg + 1]]);
            let l = dist(pos[seg], pos[seg + 1]);
            if s <= seg_start + l || seg + 2 == b.nodes.len() {
                let t = if l > 0.0 { ((s - seg_start) / l).clamp(0.0, 1.0) } else { 0.0 };
                out.push(RawSample {
                    pos: lerp3(pos[seg], pos[seg + 1], t),
                    r: a.r + t * (c.r - a.r),
                    branch,
                    arc: s,
                });
                break;
            }
            seg_start += l;
            seg += 1;
        }
    }
}

/// Resamples every branch at uniform arc length, `count` points in total.
/// A graph without edges yields one sample per node.
pub fn resample(g: &SkeletonGraph, count: usize) -> Result<(Vec<Branch>, Vec<RawSample>)> {
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let branches = g.branches();
    let lengths: Vec<f64> = branches.iter().map(|b| b.length).collect();
    let mut out = Vec::with_capacity(count);
    if lengths.iter().sum::<f64>() <= 0.0 {
        for (k, n) in g.nodes().iter().enumerate() {
            out.push(RawSample {
                pos: n.pos,
                r: n.r,
                branch: k,
                arc: 0.0,
            });
        }
        return Ok((branches, out));
    }
    let counts = allocate(count, &lengths);
    for (k, (b, &n)) in branches.iter().zip(&counts).enumerate() {
        sample_branch(g, b, n, k, &mut out);
    }
    Ok((branches, out))
}

/// Weights `r^3`, weighted centroid moved to the origin, weighted RMS radius
/// scaled to 1 (radii too when `normalize_radii`), weights summing to 1.
pub fn normalize(raw: &[RawSample], normalize_radii: bool) -> Vec<SamplePoint> {
    let mut w: Vec<f64> = raw.iter().map(|s| s.r.max(0.0).powi(3)).collect();
    let mut total: f64 = w.iter().sum();
    if !(total > 0.0) {
        w.fill(1.0);
        total = w.len() as f64;
    }
    for x in &mut w {
        *x /= total;
    }
    let mut c = [0.0; 3];
    for (s, &wi) in raw.iter().zip(&w) {
        for a in 0..3 {
            c[a] += wi * s.pos[a];
        }
    }
    let ms: f64 = raw
        .iter()
        .zip(&w)
        .map(|(s, &wi)| wi * (0..3).map(|a| (s.pos[a] - c[a]).powi(2)).sum::<f64>())
        .sum();
    let scale = if ms > 0.0 { 1.0 / ms.sqrt() } else { 1.0 };
    raw.iter()
        .zip(&w)
        .map(|(s, &wi)| SamplePoint {
            pos: [
                (s.pos[0] - c[0]) * scale,
                (s.pos[1] - c[1]) * scale,
                (s.pos[2] - c[2]) * scale,
            ],
            r: if normalize_radii { s.r * scale } else { s.r },
            w: wi,
        })
        .collect()
}

pub fn sample_and_normalize(
    g: &SkeletonGraph,
    case_id: &str,
    cfg: &PipelineConfig,
) -> Result<SampledSkeleton> {
    let (_, raw) = resample(g, cfg.sample_count)?;
    Ok(SampledSkeleton {
        case_id: case_id.to_string(),
        fingerprint: cfg.shape_fingerprint(),
        points: normalize(&raw, cfg.normalize_radii),
    })
}

#[cfg(test)]
mod tests {
    use super::super::graph::build_graph;
    use super::*;
    use crate::volume::{distance_transform, BinaryMask, Grid};

    fn line_graph(len: usize, spacing: f64) -> SkeletonGraph {
        let g = Grid::new([len, 3, 3], [spacing; 3]).unwrap();
        let m = BinaryMask::from_fn(g, |c| c[1] == 1 && c[2] == 1);
        build_graph(&m, &distance_transform(&m))
    }

    #[test]
    fn allocation_sums_and_is_proportional() {
        assert_eq!(allocate(10, &[1.0, 1.0, 2.0]), vec![3, 2, 5]);
        assert_eq!(allocate(7, &[1.0; 7]).iter().sum::<usize>(), 7);
        assert_eq!(allocate(3, &[0.0, 0.0]), vec![0, 0]);
        let noisy = [2.0_f64.sqrt() * (1.0 + 3e-16), 2.0_f64.sqrt(), 2.0_f64.sqrt() * (1.0 - 3e-16)];
        assert_eq!(allocate(2, &noisy), vec![1, 1, 0]);
    }

    #[test]
    fn constant_radius_segment_is_uniform() {
        let g = line_graph(11, 1.0);
        let (_, raw) = resample(&g, 8).unwrap();
        assert_eq!(raw.len(), 8);
        for w in raw.windows(2) {
            assert!((dist(w[0].pos, w[1].pos) - 10.0 / 8.0).abs() < 1e-12);
        }
        let pts = normalize(&raw, true);
        for p in &pts {
            assert!((p.w - 1.0 / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn normalized_moments() {
        let g = line_graph(20, 0.7);
        let s = sample_and_normalize(&g, "x", &PipelineConfig::default()).unwrap();
        assert_eq!(s.points.len(), 128);
        assert!((s.total_weight() - 1.0).abs() < 1e-12);
        assert!(s.centroid().iter().all(|v| v.abs() < 1e-9));
        assert!((s.rms() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_graph_is_an_error() {
        let g = Grid::new([2, 2, 2], [1.0; 3]).unwrap();
        let m = BinaryMask::empty(g);
        let graph = build_graph(&m, &distance_transform(&m));
        assert!(matches!(
            sample_and_normalize(&graph, "e", &PipelineConfig::default()),
            Err(Error::EmptyGraph)
        ));
    }
}
