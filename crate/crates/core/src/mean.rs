//! Sample means of graphs.
//!
//! A sample mean minimises `F(Y) = 1/2 * sum_i D(Y, X_i)^2`. The
//! incremental arithmetic mean (IAM) approximates one in a single pass
//! with `N - 1` alignments; the set mean restricts the search to sample
//! members; the brute-force mean enumerates every multiple alignment of a
//! tiny sample and is exact.

use std::borrow::Borrow;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{embed, AttributedGraph, Permutation, Representation};
use crate::matcher::DistanceOracle;

/// Guards for [`brute_force_mean`].
pub const BRUTE_FORCE_MAX_SAMPLE: usize = 5;
pub const BRUTE_FORCE_MAX_ORDER: usize = 4;

#[derive(Debug, Clone)]
pub struct SampleMeanResult {
    /// Dense mean at the padding order used, before trimming.
    pub mean: AttributedGraph,
    /// `F` at the mean, filled in by [`SampleMeanResult::evaluate_ssd`].
    pub ssd: Option<f64>,
    pub alignments_used: u64,
    /// Sample indices in the order they were folded in.
    pub order_of_presentation: Vec<usize>,
    pub seed: u64,
}

impl SampleMeanResult {
    /// Evaluates `F` at the mean; costs one distance per sample graph.
    pub fn evaluate_ssd<G: Borrow<AttributedGraph> + Sync>(
        &mut self,
        sample: &[G],
        oracle: &DistanceOracle,
    ) -> Result<f64> {
        let v = ssd(&self.mean, sample, oracle)?;
        self.ssd = Some(v);
        Ok(v)
    }
}

/// One representation per sample graph, all of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipleAlignment {
    pub representations: Vec<Representation>,
}

impl MultipleAlignment {
    pub fn mean(&self) -> Representation {
        let first = &self.representations[0];
        let k = self.representations.len() as f64;
        let mut acc = vec![0.0; first.as_slice().len()];
        for r in &self.representations {
            for (a, v) in acc.iter_mut().zip(r.as_slice()) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= k);
        Representation::from_raw(first.order(), first.dim(), acc).expect("same shape")
    }

    /// Sum of pairwise inner products.
    pub fn sps(&self) -> f64 {
        let r = &self.representations;
        let mut s = 0.0;
        for i in 0..r.len() {
            for j in i + 1..r.len() {
                s += r[i].inner(&r[j]).expect("same shape");
            }
        }
        s
    }
}

/// `F(candidate) = 1/2 * sum_i D(candidate, X_i)^2`; one distance per
/// sample graph.
pub fn ssd<G: Borrow<AttributedGraph> + Sync>(
    candidate: &AttributedGraph,
    sample: &[G],
    oracle: &DistanceOracle,
) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let d = sample
        .par_iter()
        .map(|g| oracle.distance(candidate, g.borrow()))
        .collect::<Result<Vec<_>>>()?;
    Ok(0.5 * d.iter().map(|v| v * v).sum::<f64>())
}

/// Incremental arithmetic mean.
///
/// The sample is shuffled with `seed`; the running estimate starts at the
/// first graph and folds in graph `i` with weights `(i-1)/i` and `1/i`
/// after aligning it optimally to the estimate.
pub fn iam_mean<G: Borrow<AttributedGraph>>(
    sample: &[G],
    seed: u64,
    oracle: &DistanceOracle,
) -> Result<SampleMeanResult> {
    let first = sample.first().ok_or(Error::EmptySample)?.borrow();
    let space = first.space();
    let n = sample
        .iter()
        .map(|g| g.borrow().order())
        .max()
        .unwrap_or(1)
        .max(oracle.padding());

    let mut order: Vec<usize> = (0..sample.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut estimate = embed(sample[order[0]].borrow(), space, n)?;
    for (step, &idx) in order.iter().enumerate().skip(1) {
        let x = sample[idx].borrow();
        let current = AttributedGraph::from_representation(estimate.clone(), space, "iam")?;
        let alignment = oracle.align(&current, x)?;
        let aligned = embed(x, space, alignment.order())?.permuted(&alignment.permutation)?;
        if aligned.order() != estimate.order() {
            estimate = estimate.padded(aligned.order())?;
        }
        let i = (step + 1) as f64;
        estimate.blend((i - 1.0) / i, &aligned, 1.0 / i)?;
    }

    Ok(SampleMeanResult {
        mean: AttributedGraph::from_representation(estimate, space, "mean")?,
        ssd: None,
        alignments_used: sample.len() as u64 - 1,
        order_of_presentation: order,
        seed,
    })
}

#[derive(Debug, Clone)]
pub struct SetMean {
    pub index: usize,
    pub graph: AttributedGraph,
    /// `F` evaluated at every sample member.
    pub ssd: Vec<f64>,
}

/// The sample member minimising `F`; ties go to the lowest index. Uses
/// `N(N-1)/2` distances.
pub fn set_mean<G: Borrow<AttributedGraph> + Sync>(
    sample: &[G],
    oracle: &DistanceOracle,
) -> Result<SetMean> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = sample.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let d = pairs
        .par_iter()
        .map(|&(i, j)| oracle.distance(sample[i].borrow(), sample[j].borrow()))
        .collect::<Result<Vec<_>>>()?;
    let mut f = vec![0.0; n];
    for (&(i, j), v) in pairs.iter().zip(d) {
        f[i] += 0.5 * v * v;
        f[j] += 0.5 * v * v;
    }
    let index = (0..n)
        .min_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)))
        .expect("nonempty");
    Ok(SetMean {
        index,
        graph: sample[index].borrow().clone(),
        ssd: f,
    })
}

#[derive(Debug, Clone)]
pub struct BruteForceMean {
    pub mean: AttributedGraph,
    pub alignment: MultipleAlignment,
    /// Minimum of `F`, equal to `1/2 * sum_i |x_i - mean|^2` over the
    /// winning alignment.
    pub ssd: f64,
    pub sps: f64,
    pub combinations: usize,
}

/// Exact sample mean of a tiny sample by enumerating every multiple
/// alignment. The first graph is held fixed; ties go to the first
/// combination in enumeration order.
pub fn brute_force_mean<G: Borrow<AttributedGraph>>(sample: &[G]) -> Result<BruteForceMean> {
    let first = sample.first().ok_or(Error::EmptySample)?.borrow();
    let space = first.space();
    let n = sample.iter().map(|g| g.borrow().order()).max().unwrap_or(1);
    if sample.len() > BRUTE_FORCE_MAX_SAMPLE || n > BRUTE_FORCE_MAX_ORDER {
        return Err(Error::OracleScale(format!(
            "{} graphs of order up to {n} (limits {BRUTE_FORCE_MAX_SAMPLE} and {BRUTE_FORCE_MAX_ORDER})",
            sample.len()
        )));
    }

    let perms = all_permutations(n);
    let base: Vec<Representation> = sample
        .iter()
        .map(|g| embed(g.borrow(), space, n))
        .collect::<Result<_>>()?;
    let variants: Vec<Vec<Representation>> = base
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if i == 0 {
                vec![r.clone()]
            } else {
                perms
                    .iter()
                    .map(|p| r.permuted(p).expect("same order"))
                    .collect()
            }
        })
        .collect();
    let radix: Vec<usize> = variants.iter().map(Vec::len).collect();
    let total: usize = radix.iter().product();

    let decode = |mut code: usize| -> Vec<usize> {
        let mut digits = vec![0; radix.len()];
        for i in (0..radix.len()).rev() {
            digits[i] = code % radix[i];
            code /= radix[i];
        }
        digits
    };
    let combo = |digits: &[usize]| MultipleAlignment {
        representations: digits
            .iter()
            .enumerate()
            .map(|(i, &d)| variants[i][d].clone())
            .collect(),
    };
    let cost = |m: &MultipleAlignment| -> f64 {
        let mean = m.mean();
        0.5 * m
            .representations
            .iter()
            .map(|r| r.squared_distance(&mean).expect("same shape"))
            .sum::<f64>()
    };

    let (ssd, code) = (0..total)
        .into_par_iter()
        .map(|code| (cost(&combo(&decode(code))), code))
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| match a.0.total_cmp(&b.0) {
                std::cmp::Ordering::Less => a,
                std::cmp::Ordering::Greater => b,
                std::cmp::Ordering::Equal => {
                    if a.1 <= b.1 {
                        a
                    } else {
                        b
                    }
                }
            },
        );

    let alignment = combo(&decode(code));
    let mean = AttributedGraph::from_representation(alignment.mean(), space, "mean")?;
    Ok(BruteForceMean {
        sps: alignment.sps(),
        mean,
        alignment,
        ssd,
        combinations: total,
    })
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Permutation>) {
        let n = used.len();
        if prefix.len() == n {
            out.push(Permutation::new(prefix.clone()).expect("bijection"));
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}
