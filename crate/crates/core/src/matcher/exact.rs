//! Exact graph distance by depth-first branch and bound over vertex
//! assignments.
//!
//! Vertices of `x` are assigned in decreasing order of row norm. A partial
//! assignment carries the exact squared cost of every cell whose row and
//! column are both decided; a branch is cut once that cost plus a lower
//! bound on the rest reaches the incumbent. The incumbent starts at the
//! identity permutation, so among equally good permutations the identity
//! wins, then the first one met in search order.

use serde::{Deserialize, Serialize};

use super::{padded_pair, Alignment};
use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, Permutation, Representation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LowerBound {
    /// Undecided cells cost nothing.
    #[default]
    Zero,
    /// Each undecided vertex costs at least its cheapest diagonal match
    /// among the free target vertices.
    NodeDiagonal,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExactParams {
    pub bound: LowerBound,
    /// Refuse pairs whose padded order exceeds this.
    pub max_order: Option<usize>,
}

#[inline]
fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

struct Search<'a> {
    x: &'a Representation,
    y: &'a Representation,
    n: usize,
    bound: LowerBound,
    /// pattern position -> vertex of x
    pattern: Vec<usize>,
    /// positions `0..active` hold vertices with a nonzero row
    active: usize,
    y_null: Vec<bool>,
    diag: Vec<f64>,
    /// pattern position -> assigned vertex of y
    assigned: Vec<usize>,
    used: Vec<bool>,
    best_cost: f64,
    best: Vec<usize>,
}

impl<'a> Search<'a> {
    fn new(x: &'a Representation, y: &'a Representation, bound: LowerBound) -> Self {
        let n = x.order();
        let norms: Vec<f64> = (0..n).map(|i| x.row_squared_norm(i)).collect();
        let mut pattern: Vec<usize> = (0..n).collect();
        pattern.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
        let active = pattern.iter().take_while(|&&v| norms[v] > 0.0).count();
        let mut diag = vec![0.0; n * n];
        for v in 0..n {
            for w in 0..n {
                diag[v * n + w] = sq(x.cell(v, v), y.cell(w, w));
            }
        }
        Self {
            x,
            y,
            n,
            bound,
            pattern,
            active,
            y_null: (0..n).map(|w| y.is_null_vertex(w)).collect(),
            diag,
            assigned: Vec::with_capacity(n),
            used: vec![false; n],
            best_cost: f64::INFINITY,
            best: Vec::new(),
        }
    }

    /// Cost added by mapping the pattern vertex at position `t` onto `w`,
    /// given positions `0..t` are decided.
    #[inline]
    fn step_cost(&self, t: usize, w: usize) -> f64 {
        let v = self.pattern[t];
        let mut c = self.diag[v * self.n + w];
        for s in 0..t {
            c += 2.0
                * sq(
                    self.x.cell(v, self.pattern[s]),
                    self.y.cell(w, self.assigned[s]),
                );
        }
        c
    }

    fn seed_identity(&mut self) {
        let mut cost = 0.0;
        for t in 0..self.n {
            let w = self.pattern[t];
            cost += self.step_cost(t, w);
            self.assigned.push(w);
        }
        self.best_cost = cost;
        self.best = self.assigned.clone();
        self.assigned.clear();
    }

    fn remaining_bound(&self, t: usize) -> f64 {
        match self.bound {
            LowerBound::Zero => 0.0,
            LowerBound::NodeDiagonal => (t..self.active)
                .map(|s| {
                    let v = self.pattern[s];
                    (0..self.n)
                        .filter(|&w| !self.used[w])
                        .map(|w| self.diag[v * self.n + w])
                        .fold(f64::INFINITY, f64::min)
                })
                .sum(),
        }
    }

    /// Null pattern vertices are interchangeable, so the completion cost
    /// does not depend on how they are placed.
    fn complete(&mut self, cost: f64) {
        let t0 = self.assigned.len();
        let mut total = cost;
        let mut free = (0..self.n).filter(|&w| !self.used[w]);
        for t in t0..self.n {
            let w = free.next().expect("free target for each null vertex");
            total += self.step_cost(t, w);
            self.assigned.push(w);
        }
        if total < self.best_cost {
            self.best_cost = total;
            self.best = self.assigned.clone();
        }
        self.assigned.truncate(t0);
    }

    fn dfs(&mut self, cost: f64) {
        let t = self.assigned.len();
        if t == self.active {
            self.complete(cost);
            return;
        }
        if cost + self.remaining_bound(t) >= self.best_cost {
            return;
        }
        let mut null_tried = false;
        for w in 0..self.n {
            if self.used[w] {
                continue;
            }
            // null targets are interchangeable as well
            if self.y_null[w] {
                if null_tried {
                    continue;
                }
                null_tried = true;
            }
            let c = cost + self.step_cost(t, w);
            if c >= self.best_cost {
                continue;
            }
            self.used[w] = true;
            self.assigned.push(w);
            self.dfs(c);
            self.assigned.pop();
            self.used[w] = false;
        }
    }

    fn permutation(&self) -> Permutation {
        let mut map = vec![0; self.n];
        for (t, &w) in self.best.iter().enumerate() {
            map[self.pattern[t]] = w;
        }
        Permutation::new(map).expect("search yields a bijection")
    }
}

/// Exact optimal alignment of `y` onto `x` at the larger of their orders.
pub fn align(x: &AttributedGraph, y: &AttributedGraph, params: &ExactParams) -> Result<Alignment> {
    align_padded(x, y, params, 0)
}

/// Exact optimal alignment at common order `max(padding, order(x), order(y))`.
pub fn align_padded(
    x: &AttributedGraph,
    y: &AttributedGraph,
    params: &ExactParams,
    padding: usize,
) -> Result<Alignment> {
    let (xr, yr) = padded_pair(x, y, padding)?;
    let n = xr.order();
    if let Some(limit) = params.max_order {
        if n > limit {
            return Err(Error::ScaleGuard { order: n, limit });
        }
    }
    let mut search = Search::new(&xr, &yr, params.bound);
    search.seed_identity();
    search.dfs(0.0);
    let permutation = search.permutation();
    let distance = xr.distance(&yr.permuted(&permutation)?)?;
    Ok(Alignment {
        permutation,
        distance,
        exact: true,
    })
}
