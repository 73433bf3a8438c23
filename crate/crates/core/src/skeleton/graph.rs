//! Radius-annotated skeleton graph and its branch decomposition.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::thinning::skeletonize;
use super::topology::betti_numbers;
use crate::volume::{BinaryMask, DistanceField, Grid, LabelVolume, OFFSETS_26};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonNode {
    pub voxel: [usize; 3],
    /// Voxel centre in mm.
    pub pos: [f64; 3],
    /// Inscribed-sphere radius in mm.
    pub r: f64,
    /// Aligned substructure label at this voxel, when known.
    pub label: Option<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonGraph {
    grid: Grid,
    nodes: Vec<SkeletonNode>,
    adj: Vec<Vec<usize>>,
}

/// A maximal path between nodes of degree other than two, or a closed loop.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub nodes: Vec<usize>,
    /// First and last node coincide.
    pub closed: bool,
    pub length: f64,
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// One node per skeleton voxel in index order, radius read from `edt`, edges
/// by 26-adjacency.
pub fn build_graph(skel: &BinaryMask, edt: &DistanceField) -> SkeletonGraph {
    let grid = *skel.grid();
    let index: HashMap<usize, usize> = skel.ones().enumerate().map(|(n, i)| (i, n)).collect();
    let mut nodes = Vec::with_capacity(index.len());
    let mut adj = Vec::with_capacity(index.len());
    for i in skel.ones() {
        let c = grid.coords(i);
        nodes.push(SkeletonNode {
            voxel: c,
            pos: grid.center_mm(c),
            r: edt.at(i),
            label: None,
        });
        let mut nb: Vec<usize> = OFFSETS_26
            .iter()
            .filter_map(|off| grid.offset(c, *off))
            .filter_map(|j| index.get(&j).copied())
            .collect();
        nb.sort_unstable();
        adj.push(nb);
    }
    SkeletonGraph { grid, nodes, adj }
}

impl SkeletonGraph {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nodes(&self) -> &[SkeletonNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn neighbors(&self, n: usize) -> &[usize] {
        &self.adj[n]
    }

    pub fn degree(&self, n: usize) -> usize {
        self.adj[n].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn endpoints(&self) -> Vec<usize> {
        (0..self.len()).filter(|&n| self.degree(n) == 1).collect()
    }

    pub fn junctions(&self) -> Vec<usize> {
        (0..self.len()).filter(|&n| self.degree(n) >= 3).collect()
    }

    /// Attaches the aligned substructure label to every node.
    pub fn annotate_labels(&mut self, labels: &LabelVolume) {
        for n in &mut self.nodes {
            let [x, y, z] = n.voxel;
            n.label = Some(labels.get(x, y, z));
        }
    }

    pub fn to_mask(&self) -> BinaryMask {
        let mut m = BinaryMask::empty(self.grid);
        for n in &self.nodes {
            let [x, y, z] = n.voxel;
            m.set(x, y, z, true);
        }
        m
    }

    /// Connected components as sorted node lists, ordered by first node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for s in 0..self.len() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![s];
            let mut comp = Vec::new();
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Independent cycles of the skeleton voxel set. Triangles formed by
    /// 26-adjacent voxels around a junction are not counted.
    pub fn cycle_rank(&self) -> usize {
        if self.is_empty() {
            return 0;
        }
        betti_numbers(&self.to_mask())[1]
    }

    /// Node positions along `path` after one `[1, 2, 1] / 4` smoothing pass,
    /// which cancels the one-voxel staircase that thinning leaves inside
    /// even-width vessels. End nodes stay fixed.
    pub fn smoothed_path(&self, path: &[usize]) -> Vec<[f64; 3]> {
        let p: Vec<[f64; 3]> = path.iter().map(|&n| self.nodes[n].pos).collect();
        let n = p.len();
        (0..n)
            .map(|k| {
                if k == 0 || k + 1 == n {
                    p[k]
                } else {
                    [0, 1, 2].map(|a| 0.25 * (p[k - 1][a] + 2.0 * p[k][a] + p[k + 1][a]))
                }
            })
            .collect()
    }

    fn path_length(&self, path: &[usize]) -> f64 {
        self.smoothed_path(path)
            .windows(2)
            .map(|w| dist(w[0], w[1]))
            .sum()
    }

    /// Decomposes the graph into branches so every edge lies on exactly one
    /// branch. Isolated nodes become single-node branches.
    pub fn branches(&self) -> Vec<Branch> {
        let key = |a: usize, b: usize| (a.min(b), a.max(b));
        let mut used: HashSet<(usize, usize)> = HashSet::new();
        let critical: Vec<bool> = (0..self.len()).map(|n| self.degree(n) != 2).collect();
        let mut out = Vec::new();

        let walk = |start: usize, first: usize, used: &mut HashSet<(usize, usize)>| {
            used.insert(key(start, first));
            let mut path = vec![start, first];
            let (mut prev, mut cur) = (start, first);
            while !critical[cur] && cur != start {
                let next = self.adj[cur]
                    .iter()
                    .copied()
                    .find(|&v| v != prev && !used.contains(&key(cur, v)));
                let Some(next) = next else { break };
                used.insert(key(cur, next));
                path.push(next);
                prev = cur;
                cur = next;
            }
            path
        };

        for u in 0..self.len() {
            if self.degree(u) == 0 {
                out.push(Branch {
                    nodes: vec![u],
                    closed: false,
                    length: 0.0,
                });
                continue;
            }
            if !critical[u] {
                continue;
            }
            for &v in &self.adj[u] {
                if used.contains(&key(u, v)) {
                    continue;
                }
                let path = walk(u, v, &mut used);
                let length = self.path_length(&path);
                out.push(Branch {
                    nodes: path,
                    closed: false,
                    length,
                });
            }
        }
        // What is left are loops made only of degree-2 nodes.
        for u in 0..self.len() {
            if critical[u] {
                continue;
            }
            if let Some(&v) = self.adj[u].iter().find(|&&v| !used.contains(&key(u, v))) {
                let path = walk(u, v, &mut used);
                let closed = path.last() == Some(&u);
                let length = self.path_length(&path);
                out.push(Branch {
                    nodes: path,
                    closed,
                    length,
                });
            }
        }
        out
    }

    pub fn total_length(&self) -> f64 {
        self.branches().iter().map(|b| b.length).sum()
    }
}

/// Removes terminal branches (endpoint to junction) shorter than `factor`
/// times the junction radius, repeating until none is left. A junction keeps
/// at least two branches, so the longest arms survive. Each round is re-thinned
/// so the voxel left at a cut junction merges into the curve. `factor <= 0`
/// returns the skeleton unchanged.
pub fn prune_spurs(skel: &BinaryMask, edt: &DistanceField, factor: f64) -> BinaryMask {
    let mut m = skel.clone();
    if factor <= 0.0 {
        return m;
    }
    loop {
        let g = build_graph(&m, edt);
        let mut spurs: Vec<(f64, usize, Vec<usize>)> = g
            .branches()
            .into_iter()
            .filter_map(|b| {
                let (&first, &last) = (b.nodes.first()?, b.nodes.last()?);
                let joint = match (g.degree(first), g.degree(last)) {
                    (1, d) if d >= 3 => last,
                    (d, 1) if d >= 3 => first,
                    _ => return None,
                };
                (b.length < factor * g.nodes[joint].r).then_some((b.length, joint, b.nodes))
            })
            .collect();
        spurs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut degree: Vec<usize> = (0..g.len()).map(|n| g.degree(n)).collect();
        let mut removed = false;
        for (_, joint, nodes) in spurs {
            let body: Vec<usize> = nodes.iter().copied().filter(|&n| n != joint).collect();
            let cut = body.iter().filter(|&&n| g.adj[joint].contains(&n)).count();
            if degree[joint] < 2 + cut {
                continue;
            }
            degree[joint] -= cut;
            for n in body {
                let [x, y, z] = g.nodes[n].voxel;
                m.set(x, y, z, false);
            }
            removed = true;
        }
        if !removed {
            return m;
        }
        m = skeletonize(&m);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::distance_transform;

    fn graph_of(dims: [usize; 3], voxels: &[[usize; 3]]) -> SkeletonGraph {
        let g = Grid::new(dims, [1.0; 3]).unwrap();
        let mut m = BinaryMask::empty(g);
        for v in voxels {
            m.set(v[0], v[1], v[2], true);
        }
        build_graph(&m, &distance_transform(&m))
    }

    #[test]
    fn single_voxel() {
        let g = graph_of([3, 3, 3], &[[1, 1, 1]]);
        assert_eq!((g.len(), g.edge_count()), (1, 0));
        assert_eq!(g.nodes()[0].r, 1.0);
        assert_eq!(g.branches().len(), 1);
    }

    #[test]
    fn line_is_a_path() {
        let g = graph_of([5, 1, 1], &[[1, 0, 0], [2, 0, 0], [3, 0, 0]]);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.endpoints(), vec![0, 2]);
        let b = g.branches();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].nodes, vec![0, 1, 2]);
        assert!((b[0].length - 2.0).abs() < 1e-12);
    }

    #[test]
    fn square_loop_is_one_closed_branch() {
        // octagon: no chords between non-consecutive voxels
        let ring = [
            [1, 0, 0],
            [2, 0, 0],
            [3, 1, 0],
            [3, 2, 0],
            [2, 3, 0],
            [1, 3, 0],
            [0, 2, 0],
            [0, 1, 0],
        ];
        let g = graph_of([4, 4, 1], &ring);
        assert_eq!(g.edge_count(), g.len());
        assert_eq!(g.cycle_rank(), 1);
        let b = g.branches();
        assert_eq!(b.len(), 1);
        assert!(b[0].closed);
        // smoothing cuts the corners of the voxel polygon
        assert!(b[0].length < 4.0 + 4.0 * 2f64.sqrt());
        assert!(b[0].length > 8.0);
    }

    #[test]
    fn staircase_length_is_straight_length() {
        // diagonal zigzag around the line y = 1.5 along z
        let v: Vec<[usize; 3]> = (0..11)
            .map(|z| if z % 2 == 0 { [1, 2, z] } else { [2, 1, z] })
            .collect();
        let g = graph_of([4, 4, 11], &v);
        let b = g.branches();
        assert_eq!(b.len(), 1);
        // ten diagonal steps of sqrt(3) before smoothing
        assert!((b[0].length - 10.0).abs() < 0.8, "{}", b[0].length);
    }

    #[test]
    fn branches_cover_every_edge_once() {
        // Y junction: stem along x, two arms diagonal in y
        let mut v = vec![];
        for x in 0..5 {
            v.push([x, 5, 0]);
        }
        for k in 1..5 {
            v.push([4 + k, 5 + k, 0]);
            v.push([4 + k, 5 - k, 0]);
        }
        let g = graph_of([10, 11, 1], &v);
        let b = g.branches();
        let covered: usize = b.iter().map(|br| br.nodes.len() - 1).sum();
        assert_eq!(covered, g.edge_count());
        assert_eq!(g.junctions().len(), 1);
        assert_eq!(g.endpoints().len(), 3);
        assert_eq!(g.cycle_rank(), 0);
    }

    #[test]
    fn prune_removes_short_spur_keeps_arms() {
        // long bar along x with a 2-voxel stub at its middle; radii set to 3
        let g = Grid::new([30, 8, 1], [1.0; 3]).unwrap();
        let mut m = BinaryMask::empty(g);
        for x in 2..28 {
            m.set(x, 3, 0, true);
        }
        m.set(15, 4, 0, true);
        m.set(15, 5, 0, true);
        let edt = DistanceField::new(g, vec![3.0; g.len()]);
        let p = prune_spurs(&m, &edt, 2.0);
        assert_eq!(p.count(), 26);
        assert!(!p.get(15, 5, 0));
        assert_eq!(prune_spurs(&m, &edt, 0.0), m);
        let tiny = DistanceField::new(g, vec![0.5; g.len()]);
        assert_eq!(prune_spurs(&m, &tiny, 2.0), m);
    }

    #[test]
    fn prune_keeps_two_arms_of_short_star() {
        let g = Grid::new([9, 9, 1], [1.0; 3]).unwrap();
        let mut m = BinaryMask::empty(g);
        for k in 2..7 {
            m.set(k, 4, 0, true);
        }
        m.set(4, 5, 0, true);
        m.set(4, 6, 0, true);
        let edt = DistanceField::new(g, vec![5.0; g.len()]);
        let p = prune_spurs(&m, &edt, 2.0);
        let pg = build_graph(&p, &edt);
        assert_eq!(pg.endpoints().len(), 2);
        assert_eq!(pg.components().len(), 1);
    }
}
