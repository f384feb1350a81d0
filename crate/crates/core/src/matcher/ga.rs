//! Graduated assignment (softassign) for approximate graph matching.
//!
//! Maximises the alignment similarity `sum_ij <x_ij, y_p(i)p(j)>` over
//! doubly stochastic relaxations of the permutation, annealing the inverse
//! temperature from `beta0` to `beta_max`. The final match matrix is
//! rounded to a permutation greedily and the induced Euclidean distance of
//! that permutation is returned, so the result never undercuts the exact
//! distance.

use serde::{Deserialize, Serialize};

use super::{padded_pair, Alignment};
use crate::error::{Error, Result};
use crate::graph::{Permutation, Representation};
use crate::AttributedGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub beta0: f64,
    pub beta_rate: f64,
    pub beta_max: f64,
    pub sinkhorn_iters: usize,
    pub sinkhorn_tol: f64,
    pub outer_iters: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            beta0: 0.5,
            beta_rate: 1.075,
            beta_max: 10.0,
            sinkhorn_iters: 30,
            sinkhorn_tol: 1e-6,
            outer_iters: 4,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.beta0 > 0.0
            && self.beta_rate > 1.0
            && self.beta_max > self.beta0
            && self.sinkhorn_iters >= 1
            && self.outer_iters >= 1
            && self.sinkhorn_tol > 0.0
            && self.beta_max.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid graduated assignment parameters {self:?}"
            )))
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Off-diagonal nonzero cells per row.
fn neighbours(r: &Representation) -> Vec<Vec<usize>> {
    let n = r.order();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && r.cell(i, j).iter().any(|&v| v != 0.0))
                .collect()
        })
        .collect()
}

fn sinkhorn(m: &mut [f64], n: usize, iters: usize, tol: f64) {
    for _ in 0..iters {
        for i in 0..n {
            let row = &mut m[i * n..(i + 1) * n];
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
        for a in 0..n {
            let s: f64 = (0..n).map(|i| m[i * n + a]).sum();
            (0..n).for_each(|i| m[i * n + a] /= s);
        }
        let dev = (0..n)
            .map(|i| (m[i * n..(i + 1) * n].iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        if dev < tol {
            break;
        }
    }
}

/// Repeatedly fixes the largest remaining entry; ties go to the lowest
/// `(row, column)`.
fn greedy_discretize(m: &[f64], n: usize) -> Permutation {
    let mut map = vec![usize::MAX; n];
    let mut col_used = vec![false; n];
    for _ in 0..n {
        let mut best = (f64::NEG_INFINITY, usize::MAX, usize::MAX);
        for i in (0..n).filter(|&i| map[i] == usize::MAX) {
            for a in (0..n).filter(|&a| !col_used[a]) {
                if m[i * n + a] > best.0 || best.1 == usize::MAX {
                    best = (m[i * n + a], i, a);
                }
            }
        }
        map[best.1] = best.2;
        col_used[best.2] = true;
    }
    Permutation::new(map).expect("greedy rounding yields a bijection")
}

fn soft_match(x: &Representation, y: &Representation, p: &GaParams) -> Result<Vec<f64>> {
    let n = x.order();
    let diag: Vec<f64> = (0..n * n)
        .map(|ia| dot(x.cell(ia / n, ia / n), y.cell(ia % n, ia % n)))
        .collect();
    let nx = neighbours(x);
    let ny = neighbours(y);

    let mut m = vec![1.0 / n as f64; n * n];
    let mut q = vec![0.0; n * n];
    let mut beta = p.beta0;
    while beta <= p.beta_max {
        for _ in 0..p.outer_iters {
            for i in 0..n {
                for a in 0..n {
                    let mut s = 0.0;
                    for &j in &nx[i] {
                        let xij = x.cell(i, j);
                        for &b in &ny[a] {
                            s += m[j * n + b] * dot(xij, y.cell(a, b));
                        }
                    }
                    q[i * n + a] = diag[i * n + a] + 2.0 * s;
                }
            }
            for i in 0..n {
                let row = &q[i * n..(i + 1) * n];
                let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                for a in 0..n {
                    m[i * n + a] = (beta * (row[a] - top)).exp();
                }
            }
            sinkhorn(&mut m, n, p.sinkhorn_iters, p.sinkhorn_tol);
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::AnnealingDiverged { beta });
            }
        }
        beta *= p.beta_rate;
    }
    Ok(m)
}

pub fn align(x: &AttributedGraph, y: &AttributedGraph, params: &GaParams) -> Result<Alignment> {
    align_padded(x, y, params, 0)
}

pub fn align_padded(
    x: &AttributedGraph,
    y: &AttributedGraph,
    params: &GaParams,
    padding: usize,
) -> Result<Alignment> {
    params.validate()?;
    let (xr, yr) = padded_pair(x, y, padding)?;
    let n = xr.order();
    let m = soft_match(&xr, &yr, params)?;
    let permutation = greedy_discretize(&m, n);
    let distance = xr.distance(&yr.permuted(&permutation)?)?;
    Ok(Alignment {
        permutation,
        distance,
        exact: false,
    })
}

/// Halves `beta0` up to three times when annealing diverges.
pub fn align_with_retry(
    x: &AttributedGraph,
    y: &AttributedGraph,
    params: &GaParams,
    padding: usize,
) -> Result<Alignment> {
    let mut p = params.clone();
    let mut attempt = 0;
    loop {
        match align_padded(x, y, &p, padding) {
            Err(Error::AnnealingDiverged { .. }) if attempt < 3 => {
                attempt += 1;
                p.beta0 /= 2.0;
            }
            other => return other,
        }
    }
}
