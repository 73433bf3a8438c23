//! Exact balanced transportation solver (primal network simplex).

use crate::error::{Error, Result};

/// Residual masses below this are treated as exhausted.
const MASS_EPS: f64 = 1e-14;
/// Maximum allowed difference between total supply and total demand.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Optimal flow with the dual potentials that certify it.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    flow: Vec<f64>,
    cost: f64,
    /// Dual certificate: `cost[i][j] + row_potential[i] - col_potential[j] >= 0`
    /// everywhere, with equality wherever flow is positive.
    pub row_potential: Vec<f64>,
    pub col_potential: Vec<f64>,
}

impl TransportPlan {
    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn flow(&self, i: usize, j: usize) -> f64 {
        self.flow[i * self.cols + j]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.flow[i * self.cols..(i + 1) * self.cols].iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.flow(i, j)).sum())
            .collect()
    }

    /// Largest violation of dual feasibility or complementary slackness.
    pub fn optimality_gap(&self, cost: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let rc = cost[i * self.cols + j] + self.row_potential[i] - self.col_potential[j];
                worst = worst.max(-rc);
                if self.flow(i, j) > MASS_EPS {
                    worst = worst.max(rc.abs());
                }
            }
        }
        worst
    }

    /// Dual objective; equals the primal cost at optimality.
    pub fn dual_objective(&self, supply: &[f64], demand: &[f64]) -> f64 {
        let s: f64 = demand
            .iter()
            .zip(&self.col_potential)
            .map(|(b, p)| b * p)
            .sum();
        let t: f64 = supply
            .iter()
            .zip(&self.row_potential)
            .map(|(a, p)| a * p)
            .sum();
        s - t
    }
}

/// Solves `min sum f[i][j] * cost[i][j]` subject to row sums `supply`,
/// column sums `demand` and `f >= 0`. `cost` is row-major `supply.len() x
/// demand.len()` and must be nonnegative.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportPlan> {
    let m = supply.len();
    let n = demand.len();
    assert_eq!(cost.len(), m * n, "cost matrix shape");
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    if (total_s - total_d).abs() > MASS_TOLERANCE
        || supply.iter().chain(demand).any(|&w| !(w >= 0.0 && w.is_finite()))
    {
        return Err(Error::MassMismatch(total_s, total_d));
    }
    if m == 0 || n == 0 {
        return Ok(TransportPlan {
            rows: m,
            cols: n,
            flow: Vec::new(),
            cost: 0.0,
            row_potential: vec![0.0; m],
            col_potential: vec![0.0; n],
        });
    }

    let mut ns = Simplex::new(supply, demand, cost);
    ns.run();
    let flow = ns.flow[..m * n].to_vec();
    let total: f64 = flow.iter().zip(cost).map(|(f, c)| f * c).sum();
    let shift = ns.pot[0];
    Ok(TransportPlan {
        rows: m,
        cols: n,
        flow,
        cost: total,
        row_potential: ns.pot[..m].iter().map(|p| p - shift).collect(),
        col_potential: ns.pot[m..m + n].iter().map(|p| p - shift).collect(),
    })
}

/// Primal network simplex on sources `0..m`, sinks `m..m + n` and an
/// artificial root. Arc `i * n + j` runs from source `i` to sink `j`; arc
/// `m * n + v` joins node `v` to the root at a prohibitive cost. The basis is
/// kept strongly feasible (zero-flow tree arcs point away from the root) and
/// the leaving arc is chosen by Cunningham's last-blocking-arc rule, which
/// rules out cycling on the heavily degenerate bases transport problems have.
struct Simplex<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    art_cost: f64,
    /// Sources whose artificial arc points to the root.
    art_up: Vec<bool>,
    flow: Vec<f64>,
    in_tree: Vec<bool>,
    /// Tree neighbours of each node as `(node, arc)`.
    adj: Vec<Vec<(usize, usize)>>,
    parent: Vec<usize>,
    parent_arc: Vec<usize>,
    depth: Vec<usize>,
    pot: Vec<f64>,
    queue: Vec<usize>,
    next_arc: usize,
}

impl<'a> Simplex<'a> {
    fn new(supply: &[f64], demand: &[f64], cost: &'a [f64]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let nodes = m + n + 1;
        let root = m + n;
        let arcs = m * n + m + n;
        let max_cost = cost.iter().copied().fold(0.0, f64::max);
        let mut s = Simplex {
            m,
            n,
            cost,
            art_cost: (max_cost + 1.0) * nodes as f64,
            art_up: supply.iter().map(|&w| w > 0.0).collect(),
            flow: vec![0.0; arcs],
            in_tree: vec![false; arcs],
            adj: vec![Vec::new(); nodes],
            parent: vec![usize::MAX; nodes],
            parent_arc: vec![usize::MAX; nodes],
            depth: vec![0; nodes],
            pot: vec![0.0; nodes],
            queue: Vec::with_capacity(nodes),
            next_arc: 0,
        };
        for v in 0..m + n {
            let a = m * n + v;
            s.flow[a] = if v < m { supply[v] } else { demand[v - m] };
            s.in_tree[a] = true;
            s.adj[v].push((root, a));
            s.adj[root].push((v, a));
        }
        s.rebuild();
        s
    }

    /// Tail and head of an arc. A source with positive supply drains into the
    /// root; every other artificial arc leaves the root.
    fn ends(&self, a: usize) -> (usize, usize) {
        let (m, n) = (self.m, self.n);
        if a < m * n {
            (a / n, m + a % n)
        } else {
            let v = a - m * n;
            if v < m && self.art_up[v] {
                (v, m + n)
            } else {
                (m + n, v)
            }
        }
    }

    fn arc_cost(&self, a: usize) -> f64 {
        if a < self.m * self.n {
            self.cost[a]
        } else {
            self.art_cost
        }
    }

    /// Parents, depths and potentials by breadth-first search from the root;
    /// every tree arc has zero reduced cost `c + pot[tail] - pot[head]`.
    fn rebuild(&mut self) {
        let root = self.m + self.n;
        self.queue.clear();
        self.queue.push(root);
        self.parent[root] = usize::MAX;
        self.depth[root] = 0;
        self.pot[root] = 0.0;
        let mut k = 0;
        while k < self.queue.len() {
            let u = self.queue[k];
            k += 1;
            for idx in 0..self.adj[u].len() {
                let (v, a) = self.adj[u][idx];
                if v == self.parent[u] && a == self.parent_arc[u] {
                    continue;
                }
                let c = self.arc_cost(a);
                let (tail, _) = self.ends(a);
                self.parent[v] = u;
                self.parent_arc[v] = a;
                self.depth[v] = self.depth[u] + 1;
                self.pot[v] = if tail == u { self.pot[u] + c } else { self.pot[u] - c };
                self.queue.push(v);
            }
        }
    }

    /// Block search for a non-tree arc with negative reduced cost.
    fn entering(&mut self, eps: f64) -> Option<usize> {
        let arcs = self.m * self.n;
        let block = ((arcs as f64).sqrt().ceil() as usize).max(16);
        let mut best = None;
        let mut best_rc = -eps;
        let mut seen = 0;
        for _ in 0..arcs {
            let a = self.next_arc;
            self.next_arc = if a + 1 == arcs { 0 } else { a + 1 };
            if !self.in_tree[a] {
                let (i, j) = (a / self.n, self.m + a % self.n);
                let rc = self.cost[a] + self.pot[i] - self.pot[j];
                if rc < best_rc {
                    best_rc = rc;
                    best = Some(a);
                }
            }
            seen += 1;
            if seen == block {
                if best.is_some() {
                    return best;
                }
                seen = 0;
            }
        }
        best
    }

    fn run(&mut self) {
        let max_cost = self.cost.iter().copied().fold(0.0, f64::max);
        let eps = 1e-12 * max_cost.max(1.0);
        while let Some(e) = self.entering(eps) {
            let (u, v) = (e / self.n, self.m + e % self.n);
            let (mut a, mut b) = (u, v);
            while a != b {
                if self.depth[a] >= self.depth[b] {
                    a = self.parent[a];
                } else {
                    b = self.parent[b];
                }
            }
            let join = a;

            // Flow runs u -> v, up from v to the join, down from the join to
            // u. Ties go to the blocking arc met last from the join onwards.
            let mut delta = f64::INFINITY;
            let mut leave = usize::MAX;
            let mut x = u;
            while x != join {
                let a = self.parent_arc[x];
                if self.ends(a).0 == x && self.flow[a] < delta {
                    delta = self.flow[a];
                    leave = x;
                }
                x = self.parent[x];
            }
            let mut x = v;
            while x != join {
                let a = self.parent_arc[x];
                if self.ends(a).0 != x && self.flow[a] <= delta {
                    delta = self.flow[a];
                    leave = x;
                }
                x = self.parent[x];
            }
            debug_assert!(leave != usize::MAX, "transport problems have no unbounded cycles");

            self.flow[e] += delta;
            for (start, up_is_forward) in [(u, false), (v, true)] {
                let mut x = start;
                while x != join {
                    let a = self.parent_arc[x];
                    let up = self.ends(a).0 == x;
                    if up == up_is_forward {
                        self.flow[a] += delta;
                    } else {
                        self.flow[a] = (self.flow[a] - delta).max(0.0);
                    }
                    x = self.parent[x];
                }
            }
            let out_arc = self.parent_arc[leave];
            let out_parent = self.parent[leave];
            self.flow[out_arc] = 0.0;
            self.in_tree[out_arc] = false;
            self.adj[leave].retain(|&(_, a)| a != out_arc);
            self.adj[out_parent].retain(|&(_, a)| a != out_arc);
            self.in_tree[e] = true;
            self.adj[u].push((v, e));
            self.adj[v].push((u, e));
            self.rebuild();
        }
    }
}
