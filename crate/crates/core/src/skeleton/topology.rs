//! Digital topology in the (26, 6) setting: simple-point test and Betti
//! numbers via the cubical Euler characteristic.

use std::collections::HashSet;
use std::sync::OnceLock;

use crate::volume::{connected_components, BinaryMask, Connectivity, OFFSETS_26};

struct Tables {
    /// 26-neighbors of each cell of the 3x3x3 cube (centre excluded).
    adj26: [u32; 26],
    /// 6-neighbors of each cell, restricted to the 18-neighborhood.
    adj6: [u32; 26],
    /// Cells that are face neighbors of the centre.
    face: u32,
    /// Cells in the 18-neighborhood.
    n18: u32,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let l1 = |o: [isize; 3]| o.iter().map(|v| v.abs()).sum::<isize>();
        let mut t = Tables {
            adj26: [0; 26],
            adj6: [0; 26],
            face: 0,
            n18: 0,
        };
        for (a, oa) in OFFSETS_26.iter().enumerate() {
            if l1(*oa) == 1 {
                t.face |= 1 << a;
            }
            if l1(*oa) <= 2 {
                t.n18 |= 1 << a;
            }
            for (b, ob) in OFFSETS_26.iter().enumerate() {
                if a == b {
                    continue;
                }
                let d = [ob[0] - oa[0], ob[1] - oa[1], ob[2] - oa[2]];
                if d.iter().all(|v| v.abs() <= 1) {
                    t.adj26[a] |= 1 << b;
                    if l1(d) == 1 {
                        t.adj6[a] |= 1 << b;
                    }
                }
            }
        }
        for a in 0..26 {
            if t.n18 & (1 << a) == 0 {
                t.adj6[a] = 0;
            } else {
                t.adj6[a] &= t.n18;
            }
        }
        t
    })
}

/// Number of components of `set` under `adj`, and how many of them meet
/// `touch`.
fn components_in(set: u32, adj: &[u32; 26], touch: u32) -> (u32, u32) {
    let mut left = set;
    let (mut count, mut touching) = (0, 0);
    while left != 0 {
        let seed = left.trailing_zeros();
        let mut comp = 1u32 << seed;
        let mut frontier = comp;
        while frontier != 0 {
            let k = frontier.trailing_zeros();
            frontier &= frontier - 1;
            let grow = adj[k as usize] & set & !comp;
            comp |= grow;
            frontier |= grow;
        }
        left &= !comp;
        count += 1;
        if comp & touch != 0 {
            touching += 1;
        }
    }
    (count, touching)
}

/// A foreground voxel is simple when deleting it changes neither the
/// 26-connectivity of the foreground nor the 6-connectivity of the
/// background, judged on its 3x3x3 neighborhood (bit `k` = `OFFSETS_26[k]`).
pub fn is_simple(neighborhood: u32) -> bool {
    let t = tables();
    let fg = neighborhood & ((1 << 26) - 1);
    let (t26, _) = components_in(fg, &t.adj26, 0);
    if t26 != 1 {
        return false;
    }
    let bg = !fg & t.n18;
    let (_, t6) = components_in(bg, &t.adj6, t.face);
    t6 == 1
}

/// Euler characteristic of the union of closed unit cubes at the foreground
/// voxels.
pub fn euler_characteristic(mask: &BinaryMask) -> i64 {
    let g = mask.grid();
    let mut cells: HashSet<[usize; 3]> = HashSet::new();
    for i in mask.ones() {
        let c = g.coords(i);
        for dz in 0..3 {
            for dy in 0..3 {
                for dx in 0..3 {
                    cells.insert([2 * c[0] + dx, 2 * c[1] + dy, 2 * c[2] + dz]);
                }
            }
        }
    }
    cells
        .iter()
        .map(|c| {
            let odd = c.iter().filter(|v| *v % 2 == 1).count();
            if odd % 2 == 0 {
                1
            } else {
                -1
            }
        })
        .sum()
}

/// Betti numbers `[b0, b1, b2]` of the foreground: 26-components,
/// independent tunnels, and enclosed background cavities (6-connected
/// background components that do not reach the grid exterior).
pub fn betti_numbers(mask: &BinaryMask) -> [usize; 3] {
    let b0 = connected_components(mask, Connectivity::TwentySix).count();
    let b2 = cavity_count(mask);
    let chi = euler_characteristic(mask);
    let b1 = b0 as i64 + b2 as i64 - chi;
    debug_assert!(b1 >= 0, "negative first Betti number");
    [b0, b1.max(0) as usize, b2]
}

fn cavity_count(mask: &BinaryMask) -> usize {
    let g = *mask.grid();
    let bg = BinaryMask::from_fn(g, |c| !mask.get(c[0], c[1], c[2]));
    let cc = connected_components(&bg, Connectivity::Six);
    let mut outer = vec![false; cc.count() + 1];
    let [nx, ny, nz] = g.dims;
    for i in bg.ones() {
        let [x, y, z] = g.coords(i);
        if x == 0 || y == 0 || z == 0 || x + 1 == nx || y + 1 == ny || z + 1 == nz {
            outer[cc.id_at(i) as usize] = true;
        }
    }
    outer[1..].iter().filter(|o| !**o).count()
}
