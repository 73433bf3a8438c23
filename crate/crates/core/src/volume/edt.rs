//! Exact Euclidean distance transform via separable lower envelopes of
//! parabolas (Felzenszwalb & Huttenlocher), with anisotropic spacing.

use super::{BinaryMask, Grid};

/// Distance in millimetres from each foreground voxel centre to the nearest
/// background voxel centre. Background voxels hold 0.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    grid: Grid,
    values: Vec<f64>,
}

impl DistanceField {
    #[cfg(test)]
    pub(crate) fn new(grid: Grid, values: Vec<f64>) -> Self {
        DistanceField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.values[i]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[self.grid.index(x, y, z)]
    }
}

struct Envelope {
    v: Vec<usize>,
    z: Vec<f64>,
    f: Vec<f64>,
    d: Vec<f64>,
}

impl Envelope {
    fn new(n: usize) -> Self {
        Envelope {
            v: vec![0; n + 2],
            z: vec![0.0; n + 3],
            f: vec![0.0; n + 2],
            d: vec![0.0; n + 2],
        }
    }

    /// Squared-distance transform of `self.f` (length `m`) with parabola
    /// weight `w`; result lands in `self.d`.
    fn run(&mut self, m: usize, w: f64) {
        let f = &self.f;
        let v = &mut self.v;
        let z = &mut self.z;
        let mut k: usize = 0;
        let mut started = false;
        for q in 0..m {
            if !f[q].is_finite() {
                continue;
            }
            if !started {
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                started = true;
                continue;
            }
            let qf = q as f64;
            loop {
                let p = v[k];
                let pf = p as f64;
                let s = ((f[q] + w * qf * qf) - (f[p] + w * pf * pf)) / (2.0 * w * (qf - pf));
                if s <= z[k] {
                    // z[0] is -inf so this never underflows
                    k -= 1;
                    continue;
                }
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
        if !started {
            self.d[..m].fill(f64::INFINITY);
            return;
        }
        k = 0;
        for q in 0..m {
            let qf = q as f64;
            while z[k + 1] < qf {
                k += 1;
            }
            let p = v[k] as f64;
            self.d[q] = w * (qf - p) * (qf - p) + f[v[k]];
        }
    }
}

pub fn distance_transform(mask: &BinaryMask) -> DistanceField {
    let grid = *mask.grid();
    let [nx, ny, nz] = grid.dims;
    let mut sq: Vec<f64> = mask
        .as_slice()
        .iter()
        .map(|&b| if b { f64::INFINITY } else { 0.0 })
        .collect();

    // (line length, stride) per axis
    let axes = [(nx, 1), (ny, nx), (nz, nx * ny)];
    for (axis, &(len, stride)) in axes.iter().enumerate() {
        let w = grid.spacing[axis] * grid.spacing[axis];
        let mut env = Envelope::new(len);
        // Lines are padded with one background site on each end: the grid
        // exterior is background.
        let starts: Vec<usize> = match axis {
            0 => (0..nz)
                .flat_map(|z| (0..ny).map(move |y| nx * (y + ny * z)))
                .collect(),
            1 => (0..nz)
                .flat_map(|z| (0..nx).map(move |x| x + nx * ny * z))
                .collect(),
            _ => (0..ny)
                .flat_map(|y| (0..nx).map(move |x| x + nx * y))
                .collect(),
        };
        for start in starts {
            env.f[0] = 0.0;
            env.f[len + 1] = 0.0;
            for i in 0..len {
                env.f[i + 1] = sq[start + i * stride];
            }
            env.run(len + 2, w);
            for i in 0..len {
                sq[start + i * stride] = env.d[i + 1];
            }
        }
    }

    let values = sq.into_iter().map(f64::sqrt).collect();
    DistanceField { grid, values }
}
