//! Primal network simplex for the balanced, uncapacitated transportation
//! problem.
//!
//! The basis is a strongly feasible spanning tree rooted at an artificial
//! node. Every supply node starts connected to the root by a big-M arc and
//! the root feeds every demand node the same way. Leaving arcs follow the
//! Cunningham rule, which rules out cycling on degenerate instances such as
//! uniform weights.

use crate::error::{Error, Result};

const REDUCED_COST_EPS: f64 = 1e-12;

struct Network<'a> {
    m: usize,
    n: usize,
    root: usize,
    real_arcs: usize,
    /// Costs rescaled so the largest real cost is 1.
    cost: &'a [f64],
    big_m: f64,
    flow: Vec<f64>,
    tree: Vec<usize>,
    tree_slot: Vec<usize>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    depth: Vec<usize>,
    pi: Vec<f64>,
    adj_start: Vec<usize>,
    adj: Vec<usize>,
    queue: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl<'a> Network<'a> {
    fn source(&self, e: usize) -> usize {
        if e < self.real_arcs {
            e / self.n
        } else {
            let v = e - self.real_arcs;
            if v < self.m {
                v
            } else {
                self.root
            }
        }
    }

    fn target(&self, e: usize) -> usize {
        if e < self.real_arcs {
            self.m + e % self.n
        } else {
            let v = e - self.real_arcs;
            if v < self.m {
                self.root
            } else {
                v
            }
        }
    }

    fn arc_cost(&self, e: usize) -> f64 {
        if e < self.real_arcs {
            self.cost[e]
        } else {
            self.big_m
        }
    }

    fn other(&self, e: usize, v: usize) -> usize {
        let s = self.source(e);
        if s == v {
            self.target(e)
        } else {
            s
        }
    }

    /// Recomputes parent pointers, depths and potentials from the tree arcs.
    fn rebuild(&mut self) {
        let nodes = self.root + 1;
        self.adj_start.iter_mut().for_each(|c| *c = 0);
        for k in 0..self.tree.len() {
            let e = self.tree[k];
            let (s, t) = (self.source(e), self.target(e));
            self.adj_start[s + 1] += 1;
            self.adj_start[t + 1] += 1;
        }
        for v in 0..nodes {
            self.adj_start[v + 1] += self.adj_start[v];
        }
        let mut fill = self.adj_start.clone();
        for k in 0..self.tree.len() {
            let e = self.tree[k];
            let (s, t) = (self.source(e), self.target(e));
            self.adj[fill[s]] = e;
            fill[s] += 1;
            self.adj[fill[t]] = e;
            fill[t] += 1;
        }

        self.parent[self.root] = NONE;
        self.pred[self.root] = NONE;
        self.depth[self.root] = 0;
        self.pi[self.root] = 0.0;
        self.queue.clear();
        self.queue.push(self.root);
        let mut head = 0;
        while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            for k in self.adj_start[u]..self.adj_start[u + 1] {
                let e = self.adj[k];
                if e == self.pred[u] {
                    continue;
                }
                let w = self.other(e, u);
                self.parent[w] = u;
                self.pred[w] = e;
                self.depth[w] = self.depth[u] + 1;
                let c = self.arc_cost(e);
                self.pi[w] = if self.source(e) == u { self.pi[u] + c } else { self.pi[u] - c };
                self.queue.push(w);
            }
        }
    }

    fn reduced_cost(&self, e: usize) -> f64 {
        self.cost[e] + self.pi[self.source(e)] - self.pi[self.target(e)]
    }

    fn join(&self, mut u: usize, mut v: usize) -> usize {
        while u != v {
            if self.depth[u] >= self.depth[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        u
    }

    fn pivot(&mut self, entering: usize) {
        let first = self.source(entering);
        let second = self.target(entering);
        let join = self.join(first, second);

        // Arcs whose flow decreases when pushing along the cycle bound the step.
        let mut delta = f64::INFINITY;
        let mut leaving = NONE;
        let mut w = first;
        while w != join {
            let e = self.pred[w];
            if self.source(e) == w && self.flow[e] < delta {
                delta = self.flow[e];
                leaving = e;
            }
            w = self.parent[w];
        }
        let mut w = second;
        while w != join {
            let e = self.pred[w];
            if self.source(e) != w && self.flow[e] <= delta {
                delta = self.flow[e];
                leaving = e;
            }
            w = self.parent[w];
        }
        debug_assert!(leaving != NONE, "uncapacitated cycle is unbounded");

        if delta > 0.0 {
            self.flow[entering] += delta;
            let mut w = first;
            while w != join {
                let e = self.pred[w];
                let up = self.source(e) == w;
                let f = &mut self.flow[e];
                if up {
                    *f = (*f - delta).max(0.0);
                } else {
                    *f += delta;
                }
                w = self.parent[w];
            }
            let mut w = second;
            while w != join {
                let e = self.pred[w];
                let up = self.source(e) == w;
                let f = &mut self.flow[e];
                if up {
                    *f += delta;
                } else {
                    *f = (*f - delta).max(0.0);
                }
                w = self.parent[w];
            }
        }
        self.flow[leaving] = 0.0;

        let slot = self.tree_slot[leaving];
        self.tree[slot] = entering;
        self.tree_slot[leaving] = NONE;
        self.tree_slot[entering] = slot;
        self.rebuild();
    }
}

/// Solves `min sum c_ij f_ij` subject to row sums `supply` and column sums
/// `demand`. `cost` is row-major `m x n`. Returns the optimal flow in the
/// same layout.
pub(crate) fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<Vec<f64>> {
    Ok(solve_with_reduced_costs(supply, demand, cost)?.0)
}

/// Like [`solve`], also returning `c_ij - u_i - v_j` for an optimal dual pair
/// `(u, v)`. These are nonnegative up to rounding, and a coupling is optimal
/// iff it only charges cells where they vanish.
pub(crate) fn solve_with_reduced_costs(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (m, n) = (supply.len(), demand.len());
    assert_eq!(cost.len(), m * n);
    if m == 1 || n == 1 {
        // the coupling is forced and every cell is tight
        let flow = (0..m * n).map(|e| if m == 1 { demand[e] } else { supply[e] }).collect();
        return Ok((flow, vec![0.0; m * n]));
    }

    let max_cost = cost.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
    let scale = if max_cost > 0.0 { max_cost } else { 1.0 };
    let scaled: Vec<f64> = cost.iter().map(|c| c / scale).collect();

    let real_arcs = m * n;
    let root = m + n;
    let nodes = root + 1;
    let total_arcs = real_arcs + m + n;
    let mut net = Network {
        m,
        n,
        root,
        real_arcs,
        cost: &scaled,
        big_m: 2.0 * nodes as f64,
        flow: vec![0.0; total_arcs],
        tree: (real_arcs..total_arcs).collect(),
        tree_slot: vec![NONE; total_arcs],
        parent: vec![NONE; nodes],
        pred: vec![NONE; nodes],
        depth: vec![0; nodes],
        pi: vec![0.0; nodes],
        adj_start: vec![0; nodes + 1],
        adj: vec![0; 2 * (m + n)],
        queue: Vec::with_capacity(nodes),
    };
    for (k, e) in (real_arcs..total_arcs).enumerate() {
        net.tree_slot[e] = k;
    }
    for (i, &a) in supply.iter().enumerate() {
        net.flow[real_arcs + i] = a;
    }
    for (j, &b) in demand.iter().enumerate() {
        net.flow[real_arcs + m + j] = b;
    }
    net.rebuild();

    let block = ((real_arcs as f64).sqrt().ceil() as usize).max(16).min(real_arcs);
    let max_pivots = 50 * real_arcs + 10_000;
    let mut next = 0usize;
    let mut pivots = 0usize;
    loop {
        let mut best = NONE;
        let mut best_rc = -REDUCED_COST_EPS;
        let mut scanned = 0usize;
        let mut in_block = 0usize;
        while scanned < real_arcs {
            let e = next;
            next += 1;
            if next == real_arcs {
                next = 0;
            }
            scanned += 1;
            in_block += 1;
            if net.tree_slot[e] == NONE {
                let rc = net.reduced_cost(e);
                if rc < best_rc {
                    best_rc = rc;
                    best = e;
                }
            }
            if in_block == block {
                if best != NONE {
                    break;
                }
                in_block = 0;
            }
        }
        if best == NONE {
            break;
        }
        net.pivot(best);
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Solver(format!("network simplex exceeded {max_pivots} pivots")));
        }
    }

    let mass: f64 = supply.iter().sum();
    let stranded: f64 = net.flow[real_arcs..].iter().sum();
    if stranded > 1e-9 * mass.max(1.0) {
        return Err(Error::Solver(format!("{stranded:e} mass left on artificial arcs")));
    }
    let reduced = (0..real_arcs).map(|e| net.reduced_cost(e).max(0.0) * scale).collect();
    net.flow.truncate(real_arcs);
    Ok((net.flow, reduced))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(flow: &[f64], cost: &[f64]) -> f64 {
        flow.iter().zip(cost).map(|(f, c)| f * c).sum()
    }

    #[test]
    fn assignment_three_by_three() {
        // Optimal assignment is the anti-diagonal with cost 3.
        let cost = [4.0, 2.0, 1.0, 2.0, 1.0, 3.0, 1.0, 3.0, 4.0];
        let w = [1.0 / 3.0; 3];
        let flow = solve(&w, &w, &cost).unwrap();
        assert!((total(&flow, &cost) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn margins_preserved() {
        let a = [0.1, 0.4, 0.5];
        let b = [0.3, 0.3, 0.2, 0.2];
        let cost: Vec<f64> = (0..12).map(|e| ((e * 7 % 5) as f64).powi(2)).collect();
        let flow = solve(&a, &b, &cost).unwrap();
        for i in 0..3 {
            let s: f64 = flow[i * 4..(i + 1) * 4].iter().sum();
            assert!((s - a[i]).abs() < 1e-14);
        }
        for j in 0..4 {
            let s: f64 = (0..3).map(|i| flow[i * 4 + j]).sum();
            assert!((s - b[j]).abs() < 1e-14);
        }
        assert!(flow.iter().all(|&f| f >= 0.0));
    }

    #[test]
    fn degenerate_uniform_permutation() {
        // Cyclic shift cost on 40 uniform atoms; optimum is the zero-cost shift.
        let n = 40;
        let w = vec![1.0 / n as f64; n];
        let cost: Vec<f64> = (0..n * n)
            .map(|e| {
                let (i, j) = (e / n, e % n);
                if j == (i + 3) % n { 0.0 } else { 1.0 + ((i * j) % 7) as f64 }
            })
            .collect();
        let flow = solve(&w, &w, &cost).unwrap();
        assert!(total(&flow, &cost).abs() < 1e-12);
    }

    #[test]
    fn zero_costs() {
        let flow = solve(&[0.5, 0.5], &[0.25, 0.75], &[0.0; 4]).unwrap();
        assert!((flow.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
