//! Transportation simplex on a dense `n x m` cost matrix.
//!
//! The basis is a spanning tree of the bipartite row/column graph, rooted at
//! row 0, with parent pointers, depths and node potentials kept up to date
//! after every pivot (only the re-hung subtree changes). The starting basis
//! comes from the least-cost rule. Entering cells are chosen by block
//! pricing; after a long run of degenerate pivots the solver falls back to
//! Bland's rule, which cannot cycle.

use crate::error::{Error, Result};

pub(crate) struct Problem<'a> {
    pub supply: &'a [f64],
    pub demand: &'a [f64],
    /// Row-major, `supply.len() * demand.len()` entries.
    pub cost: &'a [f64],
}

const NONE: usize = usize::MAX;

struct Tree {
    n: usize,
    m: usize,
    /// Basic cells by slot.
    cell: Vec<usize>,
    flow: Vec<f64>,
    /// Basis slots incident to each node (rows `0..n`, columns `n..n+m`).
    adj: Vec<Vec<usize>>,
    parent: Vec<usize>,
    /// Slot of the edge to the parent.
    up: Vec<usize>,
    depth: Vec<usize>,
    pot: Vec<f64>,
    in_basis: Vec<bool>,
    stack: Vec<usize>,
}

impl Tree {
    fn ends(&self, slot: usize) -> (usize, usize) {
        let c = self.cell[slot];
        (c / self.m, self.n + c % self.m)
    }

    fn other(&self, slot: usize, v: usize) -> usize {
        let (r, c) = self.ends(slot);
        if v == r {
            c
        } else {
            r
        }
    }

    /// Recompute parent, depth and potential for the subtree hanging from
    /// `start` through the edge `via` (or the whole tree when `via` is NONE).
    fn hang(&mut self, start: usize, from: usize, via: usize, cost: &[f64]) {
        self.parent[start] = from;
        self.up[start] = via;
        if via == NONE {
            self.depth[start] = 0;
            self.pot[start] = 0.0;
        } else {
            self.depth[start] = self.depth[from] + 1;
            self.pot[start] = self.edge_pot(via, from, cost);
        }
        self.stack.clear();
        self.stack.push(start);
        while let Some(v) = self.stack.pop() {
            for k in 0..self.adj[v].len() {
                let s = self.adj[v][k];
                if s == self.up[v] {
                    continue;
                }
                let w = self.other(s, v);
                self.parent[w] = v;
                self.up[w] = s;
                self.depth[w] = self.depth[v] + 1;
                self.pot[w] = self.edge_pot(s, v, cost);
                self.stack.push(w);
            }
        }
    }

    /// Potential of the far end of `slot` given the potential at `v`, from
    /// `u_i + v_j = c_ij` on basic cells.
    fn edge_pot(&self, slot: usize, v: usize, cost: &[f64]) -> f64 {
        cost[self.cell[slot]] - self.pot[v]
    }

    fn detach(&mut self, slot: usize) {
        let (a, b) = self.ends(slot);
        for v in [a, b] {
            let pos = self.adj[v].iter().position(|&s| s == slot).expect("slot is incident");
            self.adj[v].swap_remove(pos);
        }
    }

    fn attach(&mut self, slot: usize) {
        let (a, b) = self.ends(slot);
        self.adj[a].push(slot);
        self.adj[b].push(slot);
    }
}

/// Optimal transport cost. Supplies and demands must be non-negative with
/// (numerically) equal totals.
pub(crate) fn solve(p: &Problem) -> Result<f64> {
    let (n, m) = (p.supply.len(), p.demand.len());
    debug_assert_eq!(p.cost.len(), n * m);
    if n == 0 || m == 0 {
        return Ok(0.0);
    }
    if n == 1 {
        return Ok((0..m).map(|j| p.demand[j] * p.cost[j]).sum());
    }
    if m == 1 {
        return Ok((0..n).map(|i| p.supply[i] * p.cost[i]).sum());
    }
    let cost = p.cost;
    let nodes = n + m;
    let (cells, flows) = least_cost_start(p.supply, p.demand, cost);
    let mut t = Tree {
        n,
        m,
        cell: cells,
        flow: flows,
        adj: vec![Vec::new(); nodes],
        parent: vec![NONE; nodes],
        up: vec![NONE; nodes],
        depth: vec![0; nodes],
        pot: vec![0.0; nodes],
        in_basis: vec![false; n * m],
        stack: Vec::with_capacity(nodes),
    };
    for s in 0..t.cell.len() {
        t.in_basis[t.cell[s]] = true;
        t.attach(s);
    }
    t.hang(0, NONE, NONE, cost);

    let scale = cost.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
    let tol = 1e-12 * (1.0 + scale);
    let mass_tol = 1e-15 * p.supply.iter().sum::<f64>().max(1.0);
    let total = n * m;
    let block = (((total as f64).sqrt() as usize).max(n.max(m))).min(total);
    let mut cursor = 0usize;
    let mut degenerate_run = 0usize;
    let mut bland = false;
    let max_iter = 50 * nodes * nodes + 10_000;
    let mut minus: Vec<(usize, usize)> = Vec::new();
    let mut plus: Vec<usize> = Vec::new();

    for _ in 0..max_iter {
        let reduced = |k: usize, pot: &[f64]| cost[k] - pot[k / m] - pot[n + k % m];
        let entering = if bland {
            (0..total).find(|&k| !t.in_basis[k] && reduced(k, &t.pot) < -tol)
        } else {
            let mut best = NONE;
            let mut best_val = -tol;
            let mut scanned = 0;
            while scanned < total {
                let end = (scanned + block).min(total);
                for _ in scanned..end {
                    let k = cursor;
                    cursor = if k + 1 == total { 0 } else { k + 1 };
                    if t.in_basis[k] {
                        continue;
                    }
                    let r = reduced(k, &t.pot);
                    if r < best_val {
                        best_val = r;
                        best = k;
                    }
                }
                scanned = end;
                if best != NONE {
                    break;
                }
            }
            (best != NONE).then_some(best)
        };
        let Some(e) = entering else {
            return Ok((0..t.cell.len()).map(|s| t.flow[s] * cost[t.cell[s]]).sum());
        };
        let (ei, ej) = (e / m, n + e % m);

        // Cycle: entering edge row -> column, then back up from the column
        // side to the common ancestor and down to the row.
        minus.clear();
        plus.clear();
        let (mut a, mut b) = (ei, ej);
        while a != b {
            if t.depth[a] >= t.depth[b] {
                // Row side, traversed parent -> child.
                let s = t.up[a];
                if a < n {
                    minus.push((s, a));
                } else {
                    plus.push(s);
                }
                a = t.parent[a];
            } else {
                // Column side, traversed child -> parent.
                let s = t.up[b];
                if b < n {
                    plus.push(s);
                } else {
                    minus.push((s, b));
                }
                b = t.parent[b];
            }
        }
        let mut leave = NONE;
        let mut child = NONE;
        let mut theta = f64::INFINITY;
        for &(s, c) in &minus {
            let f = t.flow[s];
            let better = f < theta || (bland && f == theta && t.cell[s] < t.cell[leave]);
            if better {
                theta = f;
                leave = s;
                child = c;
            }
        }
        let theta = theta.max(0.0);
        for &(s, _) in &minus {
            t.flow[s] -= theta;
        }
        for &s in &plus {
            t.flow[s] += theta;
        }

        // Which end of the entering edge lies in the subtree cut off by the
        // leaving edge: walk up from `ei` and see whether `child` is passed.
        let mut v = ei;
        let mut ei_below = false;
        while t.depth[v] >= t.depth[child] {
            if v == child {
                ei_below = true;
                break;
            }
            v = t.parent[v];
        }
        let (inner, outer) = if ei_below { (ei, ej) } else { (ej, ei) };

        t.in_basis[t.cell[leave]] = false;
        t.detach(leave);
        t.cell[leave] = e;
        t.flow[leave] = theta;
        t.in_basis[e] = true;
        t.attach(leave);
        t.hang(inner, outer, leave, cost);

        if theta <= mass_tol {
            degenerate_run += 1;
            if degenerate_run > 2 * nodes {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }
    }
    Err(Error::InvalidMeasure(format!("transport simplex did not converge on a {n}x{m} instance")))
}

/// Least-cost rule: allocate greedily in order of increasing cost, retiring
/// exactly one line per allocation (except the last), which yields a
/// spanning tree with `n + m - 1` cells.
fn least_cost_start(supply: &[f64], demand: &[f64], cost: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let (n, m) = (supply.len(), demand.len());
    let mut order: Vec<usize> = (0..n * m).collect();
    order.sort_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)));
    let mut ra = supply.to_vec();
    let mut rb = demand.to_vec();
    let mut row_open = vec![true; n];
    let mut col_open = vec![true; m];
    let (mut rows_left, mut cols_left) = (n, m);
    let mut cells = Vec::with_capacity(n + m - 1);
    let mut flows = Vec::with_capacity(n + m - 1);
    for k in order {
        let (i, j) = (k / m, k % m);
        if !row_open[i] || !col_open[j] {
            continue;
        }
        let q = ra[i].min(rb[j]).max(0.0);
        cells.push(k);
        flows.push(q);
        ra[i] -= q;
        rb[j] -= q;
        if rows_left == 1 && cols_left == 1 {
            break;
        }
        // Retire the exhausted line; on a tie keep whichever kind has more lines open.
        let retire_row = if cols_left == 1 {
            true
        } else if rows_left == 1 {
            false
        } else {
            ra[i] <= rb[j]
        };
        if retire_row {
            row_open[i] = false;
            rows_left -= 1;
            rb[j] += ra[i];
        } else {
            col_open[j] = false;
            cols_left -= 1;
            ra[i] += rb[j];
        }
    }
    (cells, flows)
}
