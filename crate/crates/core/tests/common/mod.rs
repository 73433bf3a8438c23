//! Brute-force oracles and random instance generators shared by the
//! integration tests.

#![allow(dead_code)]

use chd_core::skeleton::SamplePoint;
use chd_core::volume::{BinaryMask, Grid};
use rand::Rng;

/// Minimum transport cost by enumerating every basic solution of the
/// transportation polytope: each spanning tree of the complete bipartite
/// graph fixes one vertex, feasible when all its flows are nonnegative.
pub fn transport_oracle(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
    let (m, n) = (supply.len(), demand.len());
    let cells = m * n;
    let basis = m + n - 1;
    let mut best = f64::INFINITY;
    let mut pick: Vec<usize> = (0..basis).collect();
    loop {
        if let Some(c) = basic_cost(supply, demand, cost, n, &pick) {
            best = best.min(c);
        }
        // next combination in lexicographic order
        let mut k = basis;
        while k > 0 && pick[k - 1] == cells - basis + k - 1 {
            k -= 1;
        }
        if k == 0 {
            return best;
        }
        pick[k - 1] += 1;
        for j in k..basis {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

fn basic_cost(supply: &[f64], demand: &[f64], cost: &[f64], n: usize, pick: &[usize]) -> Option<f64> {
    let m = supply.len();
    // rows are nodes 0..m, columns m..m+n
    let mut parent: Vec<usize> = (0..m + n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &c in pick {
        let (a, b) = (root(&mut parent, c / n), root(&mut parent, m + c % n));
        if a == b {
            return None;
        }
        parent[a] = b;
    }
    let mut residual: Vec<f64> = supply.iter().chain(demand).copied().collect();
    let mut open: Vec<usize> = pick.to_vec();
    let mut total = 0.0;
    while !open.is_empty() {
        let ends = |c: usize| [c / n, m + c % n];
        let mut degree = vec![0usize; m + n];
        for &c in &open {
            for e in ends(c) {
                degree[e] += 1;
            }
        }
        let (k, leaf) = open
            .iter()
            .enumerate()
            .find_map(|(k, &c)| ends(c).into_iter().find(|&e| degree[e] == 1).map(|e| (k, e)))?;
        let c = open.swap_remove(k);
        let flow = residual[leaf];
        if flow < -1e-12 {
            return None;
        }
        let [r, s] = ends(c);
        residual[r] -= flow;
        residual[s] -= flow;
        total += flow * cost[c];
    }
    Some(total)
}

/// Nonnegative weights summing to one; some may be zero.
pub fn random_weights(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.01..1.0) })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

pub fn random_points(rng: &mut impl Rng, n: usize) -> Vec<SamplePoint> {
    random_weights(rng, n)
        .into_iter()
        .map(|w| SamplePoint {
            pos: [0; 3].map(|_| rng.gen_range(-1.5..1.5)),
            r: rng.gen_range(0.0..0.2),
            w,
        })
        .collect()
}

/// O(n^2) distance from each foreground centre to the nearest background
/// centre, the grid exterior counting as background.
pub fn brute_edt(mask: &BinaryMask) -> Vec<f64> {
    let g = *mask.grid();
    let [nx, ny, nz] = g.dims.map(|d| d as isize);
    let mut bg: Vec<[isize; 3]> = Vec::new();
    for z in -1..=nz {
        for y in -1..=ny {
            for x in -1..=nx {
                let inside = x >= 0 && y >= 0 && z >= 0 && x < nx && y < ny && z < nz;
                if !inside || !mask.get(x as usize, y as usize, z as usize) {
                    bg.push([x, y, z]);
                }
            }
        }
    }
    (0..g.len())
        .map(|i| {
            if !mask.at(i) {
                return 0.0;
            }
            let c = g.coords(i).map(|v| v as isize);
            bg.iter()
                .map(|b| {
                    (0..3)
                        .map(|a| {
                            let d = (c[a] - b[a]) as f64 * g.spacing[a];
                            d * d
                        })
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect()
}

/// Random mask on a grid of at most 16 voxels per side with spacings that
/// keep squared distances exact in binary floating point.
pub fn random_mask(rng: &mut impl Rng) -> BinaryMask {
    let dims = [0; 3].map(|_| rng.gen_range(1..=16usize));
    let spacing = [0; 3].map(|_| [0.5, 1.0, 1.5, 2.0][rng.gen_range(0..4)]);
    let fill = rng.gen_range(0.3..0.95);
    let grid = Grid::new(dims, spacing).unwrap();
    let bits: Vec<bool> = (0..grid.len()).map(|_| rng.gen_bool(fill)).collect();
    BinaryMask::new(dims, spacing, bits).unwrap()
}
