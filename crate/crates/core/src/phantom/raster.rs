//! Voxelization of a scene and majority-vote downsampling.

use super::scene::{arc_lengths, lerp, Scene, Tube};
use super::VesselRole;
use crate::error::Result;
use crate::volume::{BinaryMask, Grid, Label, LabelVolume};

/// Per-voxel vessel code; larger codes win where tubes overlap.
const PLAIN: u8 = 1;
const VEIN: u8 = 2;
const AO_INIT: u8 = 3;
const PA_INIT: u8 = 4;

fn code_label(code: u8) -> u8 {
    match code {
        VEIN => Label::RA.id(),
        AO_INIT => Label::AO.id(),
        PA_INIT => Label::PA.id(),
        _ => 0,
    }
}

fn index_range(lo: f64, hi: f64, s: f64, n: usize) -> std::ops::Range<usize> {
    let a = ((lo / s) - 0.5).floor().max(0.0) as usize;
    let b = (((hi / s) - 0.5).ceil() + 1.0).max(0.0) as usize;
    a.min(n)..b.min(n)
}

fn for_box(grid: &Grid, lo: [f64; 3], hi: [f64; 3], mut f: impl FnMut(usize, [f64; 3])) {
    let d = grid.dims;
    let s = grid.spacing;
    for z in index_range(lo[2], hi[2], s[2], d[2]) {
        for y in index_range(lo[1], hi[1], s[1], d[1]) {
            for x in index_range(lo[0], hi[0], s[0], d[0]) {
                let c = [x, y, z];
                f(grid.index(x, y, z), grid.center_mm(c));
            }
        }
    }
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum()
}

fn paint_tube(t: &Tube, init_length: f64, grid: &Grid, codes: &mut [u8]) {
    let arcs = arc_lengths(&t.points);
    let code = |s: f64| match t.role {
        VesselRole::Aorta if s <= init_length => AO_INIT,
        VesselRole::PulmonaryTrunk if s <= init_length => PA_INIT,
        VesselRole::Vein => VEIN,
        _ => PLAIN,
    };
    let n = t.points.len();
    for k in 0..n - 1 {
        let (a, b) = (t.points[k], t.points[k + 1]);
        let (ra, rb) = (t.radii[k], t.radii[k + 1]);
        let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let len2 = d.iter().map(|v| v * v).sum::<f64>();
        if len2 == 0.0 {
            continue;
        }
        let len = len2.sqrt();
        let rmax = ra.max(rb);
        let lo = [0, 1, 2].map(|j| a[j].min(b[j]) - rmax);
        let hi = [0, 1, 2].map(|j| a[j].max(b[j]) + rmax);
        for_box(grid, lo, hi, |i, p| {
            let tt = ((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1] + (p[2] - a[2]) * d[2]) / len2;
            if !(0.0..=1.0).contains(&tt) {
                return;
            }
            let s = arcs[k] + tt * len;
            if t.in_gap(s) {
                return;
            }
            let r = (ra + tt * (rb - ra)) * t.scale_at(s);
            if dist2(p, lerp(a, b, tt)) <= r * r {
                codes[i] = codes[i].max(code(s));
            }
        });
    }
    for k in 0..n {
        let s = arcs[k];
        if t.in_gap(s) {
            continue;
        }
        let c = t.points[k];
        let r = t.radii[k] * t.scale_at(s);
        let lo = c.map(|v| v - r);
        let hi = c.map(|v| v + r);
        for_box(grid, lo, hi, |i, p| {
            if dist2(p, c) <= r * r {
                codes[i] = codes[i].max(code(s));
            }
        });
    }
}

/// High-resolution blood pool and label map of a scene.
///
/// Precedence per voxel: clipped chamber, septal hole, vessel, blob, then the
/// myocardial shell around the LV. Hole and vessel voxels inside an unclipped
/// chamber envelope take the chamber label of their side of the septum.
pub(crate) fn rasterize(sc: &Scene, grid: Grid) -> (BinaryMask, LabelVolume) {
    let n = grid.len();
    let mut codes = vec![0u8; n];
    for t in &sc.tubes {
        paint_tube(t, sc.init_length, &grid, &mut codes);
    }
    let [lv, rv, la, ra] = &sc.chambers;
    let myo = lv.grown(sc.myo_thickness);
    let mid = sc.septum_mid();
    let mut pool = vec![false; n];
    let mut labels = vec![0u8; n];
    for (i, (p_out, l_out)) in pool.iter_mut().zip(labels.iter_mut()).enumerate() {
        let p = grid.center_mm(grid.coords(i));
        let left = p[0] >= sc.septum[1];
        let right = p[0] < sc.septum[0];
        let chamber = if left && lv.contains(p) {
            Label::LV.id()
        } else if right && rv.contains(p) {
            Label::RV.id()
        } else if left && la.contains(p) {
            Label::LA.id()
        } else if right && ra.contains(p) {
            Label::RA.id()
        } else {
            0
        };
        let ventricular = lv.contains(p) || rv.contains(p);
        let atrial = la.contains(p) || ra.contains(p);
        let side = match (ventricular, atrial, p[0] < mid) {
            (true, _, true) => Some(Label::RV.id()),
            (true, _, false) => Some(Label::LV.id()),
            (false, true, true) => Some(Label::RA.id()),
            (false, true, false) => Some(Label::LA.id()),
            _ => None,
        };
        let in_hole = p[0] >= sc.septum[0] - 2.0
            && p[0] < sc.septum[1] + 2.0
            && sc.holes.iter().any(|h| {
                (p[1] - h.yz[0]).powi(2) + (p[2] - h.yz[1]).powi(2) <= h.radius * h.radius
            });
        let (is_pool, label) = if chamber != 0 {
            (true, chamber)
        } else if in_hole && side.is_some() {
            (true, side.unwrap())
        } else if codes[i] != 0 {
            (true, side.unwrap_or_else(|| code_label(codes[i])))
        } else if let Some((_, l)) = sc.blobs.iter().find(|(e, _)| e.contains(p)) {
            (true, l.id())
        } else if p[0] >= sc.septum[1] && myo.contains(p) {
            (false, Label::Myo.id())
        } else {
            (false, 0)
        };
        *p_out = is_pool;
        *l_out = if sc.swap_ventricles && label == Label::LV.id() {
            Label::RV.id()
        } else if sc.swap_ventricles && label == Label::RV.id() {
            Label::LV.id()
        } else {
            label
        };
    }
    (
        BinaryMask::new(grid.dims, grid.spacing, pool).expect("grid-sized mask"),
        LabelVolume::new(grid.dims, grid.spacing, labels).expect("grid-sized labels"),
    )
}

/// Most frequent label in each `factor`-cube block; ties go to the smaller label.
pub(crate) fn downsample_majority(v: &LabelVolume, factor: usize) -> Result<LabelVolume> {
    let d = v.dims();
    let out_dims = d.map(|n| n / factor);
    let spacing = v.spacing().map(|s| s * factor as f64);
    let mut out = vec![0u8; out_dims.iter().product()];
    let g = *v.grid();
    for bz in 0..out_dims[2] {
        for by in 0..out_dims[1] {
            for bx in 0..out_dims[0] {
                let mut counts = [0u32; 256];
                for z in bz * factor..(bz + 1) * factor {
                    for y in by * factor..(by + 1) * factor {
                        for x in bx * factor..(bx + 1) * factor {
                            counts[v.at(g.index(x, y, z)) as usize] += 1;
                        }
                    }
                }
                let mut best = 0;
                for l in 1..256 {
                    if counts[l] > counts[best] {
                        best = l;
                    }
                }
                out[bx + out_dims[0] * (by + out_dims[1] * bz)] = best as u8;
            }
        }
    }
    LabelVolume::new(out_dims, spacing, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_ties_go_to_smaller_label() {
        let mut labels = vec![0u8; 8];
        labels[..4].fill(4);
        labels[4..].fill(2);
        let v = LabelVolume::new([2, 2, 2], [1.0; 3], labels).unwrap();
        let d = downsample_majority(&v, 2).unwrap();
        assert_eq!(d.as_slice(), &[2]);
        assert_eq!(d.spacing(), [2.0; 3]);
    }

    #[test]
    fn majority_picks_most_frequent() {
        let mut labels = vec![5u8; 8];
        labels[0] = 0;
        labels[1] = 0;
        labels[2] = 1;
        let v = LabelVolume::new([2, 2, 2], [1.0; 3], labels).unwrap();
        assert_eq!(downsample_majority(&v, 2).unwrap().as_slice(), &[5]);
    }
}
