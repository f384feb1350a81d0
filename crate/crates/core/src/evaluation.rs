//! Clustering quality: objective, classification accuracy, silhouette.

use std::borrow::Borrow;
use std::collections::BTreeMap;

use pathfinding::prelude::{kuhn_munkres, Matrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{ClusteringResult, MembershipMatrix};
use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::matcher::DistanceOracle;

/// Symmetric matrix of pairwise pattern distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// `N(N-1)/2` distance calls.
    pub fn compute<G: Borrow<AttributedGraph> + Sync>(
        sample: &[G],
        oracle: &DistanceOracle,
    ) -> Result<Self> {
        let n = sample.len();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let values = pairs
            .par_iter()
            .map(|&(i, j)| oracle.distance(sample[i].borrow(), sample[j].borrow()))
            .collect::<Result<Vec<_>>>()?;
        let mut data = vec![0.0; n * n];
        for (&(i, j), d) in pairs.iter().zip(values) {
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Silhouette {
    /// Mean of the cluster silhouettes.
    pub index: f64,
    pub per_cluster: Vec<f64>,
    pub per_pattern: Vec<f64>,
}

/// Silhouette widths `s_i = (b_i - a_i) / max(a_i, b_i)`, where `a_i` is
/// the mean distance to the rest of the own cluster and `b_i` the smallest
/// mean distance to another cluster. A pattern alone in its cluster gets
/// `s_i = 0`, as does `0 / 0`.
pub fn silhouette_index(
    membership: &MembershipMatrix,
    distances: &DistanceMatrix,
) -> Result<Silhouette> {
    let k = membership.k();
    let n = membership.len();
    if distances.len() != n {
        return Err(Error::Dimension(format!(
            "{} patterns but a {}x{} distance matrix",
            n,
            distances.len(),
            distances.len()
        )));
    }
    if k < 2 {
        return Err(Error::SilhouetteUndefined(
            "needs at least two clusters".into(),
        ));
    }
    let sizes = membership.sizes();
    if let Some(j) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::SilhouetteUndefined(format!("cluster {j} is empty")));
    }

    let per_pattern: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = membership.cluster_of(i);
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for j in 0..n {
                sums[membership.cluster_of(j)] += distances.get(i, j);
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect();

    let mut per_cluster = vec![0.0; k];
    for (i, s) in per_pattern.iter().enumerate() {
        per_cluster[membership.cluster_of(i)] += s;
    }
    for (c, s) in per_cluster.iter_mut().zip(&sizes) {
        *c /= *s as f64;
    }
    let index = per_cluster.iter().sum::<f64>() / k as f64;
    Ok(Silhouette {
        index,
        per_cluster,
        per_pattern,
    })
}

/// `J = sum_i D(X_i, Y_{m(i)})^2` from distances already known.
pub fn cluster_error(assigned_distances: &[f64]) -> f64 {
    assigned_distances.iter().fold(0.0, |acc, d| acc + d * d)
}

/// [`cluster_error`] recomputing each assigned distance; `N` calls.
pub fn cluster_error_recomputed<G: Borrow<AttributedGraph> + Sync>(
    sample: &[G],
    centroids: &[AttributedGraph],
    membership: &MembershipMatrix,
    oracle: &DistanceOracle,
) -> Result<f64> {
    if sample.len() != membership.len() || centroids.len() != membership.k() {
        return Err(Error::Dimension(format!(
            "{} patterns and {} centroids against an {}x{} membership",
            sample.len(),
            centroids.len(),
            membership.len(),
            membership.k()
        )));
    }
    let d = sample
        .par_iter()
        .enumerate()
        .map(|(i, x)| oracle.distance(x.borrow(), &centroids[membership.cluster_of(i)]))
        .collect::<Result<Vec<_>>>()?;
    Ok(cluster_error(&d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMapping {
    /// Every cluster predicts its most frequent label.
    #[default]
    Majority,
    /// One-to-one cluster/label matching maximising agreement.
    Optimal,
}

/// Fraction of patterns whose label equals the one predicted for their
/// cluster.
pub fn classification_accuracy<S: AsRef<str>>(
    membership: &MembershipMatrix,
    labels: &[Option<S>],
    mapping: LabelMapping,
) -> Result<f64> {
    if labels.len() != membership.len() {
        return Err(Error::Dimension(format!(
            "{} labels for {} patterns",
            labels.len(),
            membership.len()
        )));
    }
    let labels: Vec<&str> = labels
        .iter()
        .map(|l| l.as_ref().map(AsRef::as_ref).ok_or(Error::LabelsRequired))
        .collect::<Result<_>>()?;
    if labels.is_empty() {
        return Err(Error::EmptySample);
    }
    let classes: BTreeMap<&str, usize> = labels
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect();
    let k = membership.k();
    let mut counts = vec![vec![0i64; classes.len()]; k];
    for (i, l) in labels.iter().enumerate() {
        counts[membership.cluster_of(i)][classes[l]] += 1;
    }
    let correct: i64 = match mapping {
        LabelMapping::Majority => counts
            .iter()
            .map(|row| row.iter().copied().max().unwrap_or(0))
            .sum(),
        LabelMapping::Optimal => {
            let cols = classes.len().max(k);
            let mut m = Matrix::new(k, cols, 0i64);
            for (c, row) in counts.iter().enumerate() {
                for (l, &v) in row.iter().enumerate() {
                    m[(c, l)] = v;
                }
            }
            kuhn_munkres(&m).0
        }
    };
    Ok(correct as f64 / labels.len() as f64)
}

/// Minimum-linkage distance between two sets of graphs; `|U| |V|` calls.
pub fn set_distance(
    u: &[AttributedGraph],
    v: &[AttributedGraph],
    oracle: &DistanceOracle,
) -> Result<f64> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::EmptySample);
    }
    let pairs: Vec<(usize, usize)> = (0..u.len())
        .flat_map(|i| (0..v.len()).map(move |j| (i, j)))
        .collect();
    let d = pairs
        .par_iter()
        .map(|&(i, j)| oracle.distance(&u[i], &v[j]))
        .collect::<Result<Vec<_>>>()?;
    Ok(d.into_iter().fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Speedup {
    pub per_iteration: f64,
    pub total: f64,
}

impl Speedup {
    /// Baseline matchings divided by this run's.
    pub fn between(
        baseline: &crate::clustering::Matchings,
        run: &crate::clustering::Matchings,
    ) -> Self {
        Self {
            per_iteration: baseline.mean_per_iteration() / run.mean_per_iteration(),
            total: baseline.total() as f64 / run.total() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub error: f64,
    pub accuracy: Option<f64>,
    pub silhouette: Option<f64>,
    pub per_cluster_silhouettes: Vec<f64>,
    pub iterations: usize,
    pub matchings_total: u64,
    pub matchings_per_iteration: f64,
    /// Distance calls spent on the silhouette, not part of the run.
    pub evaluation_matchings: u64,
    pub speedup_vs_baseline: Option<Speedup>,
}

/// Where [`evaluate`] gets pairwise distances for the silhouette.
#[derive(Debug, Clone, Copy)]
pub enum PairwiseDistances<'a> {
    Skip,
    Compute,
    Given(&'a DistanceMatrix),
}

/// Report for a finished run. Accuracy needs a label on every pattern and
/// is omitted otherwise; the silhouette needs two or more clusters.
pub fn evaluate<G: Borrow<AttributedGraph> + Sync>(
    sample: &[G],
    result: &ClusteringResult,
    oracle: &DistanceOracle,
    mapping: LabelMapping,
    distances: PairwiseDistances<'_>,
) -> Result<EvalReport> {
    let labels: Vec<Option<&str>> = sample.iter().map(|g| g.borrow().label()).collect();
    let accuracy = if labels.iter().all(Option::is_some) {
        Some(classification_accuracy(
            &result.membership,
            &labels,
            mapping,
        )?)
    } else {
        None
    };
    let before = oracle.calls();
    let (silhouette, per_cluster) =
        if result.k() >= 2 && !matches!(distances, PairwiseDistances::Skip) {
            let owned;
            let matrix = match distances {
                PairwiseDistances::Given(m) => m,
                _ => {
                    owned = DistanceMatrix::compute(sample, oracle)?;
                    &owned
                }
            };
            let s = silhouette_index(&result.membership, matrix)?;
            (Some(s.index), s.per_cluster)
        } else {
            (None, Vec::new())
        };
    Ok(EvalReport {
        error: result.objective,
        accuracy,
        silhouette,
        per_cluster_silhouettes: per_cluster,
        iterations: result.iterations,
        matchings_total: result.matchings.total(),
        matchings_per_iteration: result.matchings.mean_per_iteration(),
        evaluation_matchings: oracle.calls() - before,
        speedup_vs_baseline: None,
    })
}
