//! Deterministic inputs shared by the benchmarks.

use chd_core::skeleton::{SamplePoint, SampledSkeleton};
use chd_core::volume::{BinaryMask, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solid torus of tube radius `r` lying in the z mid-plane of an `n`-cube.
pub fn torus(n: usize, r: f64) -> BinaryMask {
    let grid = Grid::new([n; 3], [1.0; 3]).expect("grid");
    let c = n as f64 / 2.0;
    let big = c - r - 2.0;
    BinaryMask::from_fn(grid, |[x, y, z]| {
        let (x, y, z) = (x as f64 + 0.5 - c, y as f64 + 0.5 - c, z as f64 + 0.5 - c);
        let q = (x * x + y * y).sqrt() - big;
        q * q + z * z <= r * r
    })
}

/// Random normalized point set with `n` samples.
pub fn random_skeleton(n: usize, seed: u64) -> SampledSkeleton {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<SamplePoint> = (0..n)
        .map(|_| SamplePoint {
            pos: [0; 3].map(|_| rng.gen_range(-1.5..1.5)),
            r: rng.gen_range(0.01..0.1),
            w: rng.gen_range(0.1..1.0),
        })
        .collect();
    let total: f64 = points.iter().map(|p| p.w).sum();
    for p in &mut points {
        p.w /= total;
    }
    SampledSkeleton {
        case_id: format!("bench-{seed}"),
        fingerprint: "bench".into(),
        points,
    }
}
