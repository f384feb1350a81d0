//! k-means in the graph space.
//!
//! Both variants share furthest-first seeding, IAM centroid recomputation,
//! empty-cluster handling and the termination rule: stop after
//! `no_improve_limit` consecutive iterations whose objective does not
//! strictly improve on the best one seen, or after `max_iters`. The
//! returned state is the best one seen: the centroids of that iteration's
//! assignment step, the membership they produced and its objective.
//!
//! Matchings are attributed to phases by reading the oracle counter before
//! and after each phase, so one oracle must not serve two runs at once.

mod elkan;
mod standard;

use std::borrow::Borrow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::matcher::DistanceOracle;
use crate::mean::iam_mean;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Std,
    Elkan,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Std => "std",
            Algorithm::Elkan => "elkan",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyClusterPolicy {
    /// Re-seed the empty centroid with the pattern farthest from its own
    /// centroid, taken from a cluster with at least two members.
    #[default]
    RepairFarthest,
    /// Remove the empty cluster; `k` shrinks.
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub k: usize,
    pub algorithm: Algorithm,
    pub max_iters: usize,
    pub no_improve_limit: usize,
    pub seed: u64,
    pub empty_policy: EmptyClusterPolicy,
    /// Elkan only, exact matcher only: recompute true distances at every
    /// comparison and count bound violations.
    pub verify: bool,
}

impl ClusterConfig {
    pub fn new(k: usize, algorithm: Algorithm) -> Self {
        Self {
            k,
            algorithm,
            max_iters: 100,
            no_improve_limit: 3,
            seed: 0,
            empty_policy: EmptyClusterPolicy::default(),
            verify: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, n: usize, oracle: &DistanceOracle) -> Result<()> {
        if n == 0 {
            return Err(Error::EmptySample);
        }
        if self.k == 0 || self.k > n {
            return Err(Error::Config(format!("k = {} must lie in 1..={n}", self.k)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max iterations must be at least 1".into()));
        }
        if self.no_improve_limit == 0 {
            return Err(Error::Config("no-improve limit must be at least 1".into()));
        }
        if self.verify {
            if !oracle.is_exact() {
                return Err(Error::Config(
                    "bound verification requires the exact matcher".into(),
                ));
            }
            if self.algorithm != Algorithm::Elkan {
                return Err(Error::Config(
                    "bound verification applies to elkan only".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Hard partition of `N` patterns into `k` clusters, stored as one cluster
/// index per pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipMatrix {
    k: usize,
    assignment: Vec<usize>,
}

impl MembershipMatrix {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = assignment.iter().find(|&&c| c >= k) {
            return Err(Error::Dimension(format!(
                "cluster index {bad} with k = {k}"
            )));
        }
        Ok(Self { k, assignment })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    /// Entry `m_ij`.
    pub fn get(&self, i: usize, j: usize) -> u8 {
        u8::from(self.assignment[i] == j)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &c in &self.assignment {
            s[c] += 1;
        }
        s
    }

    /// Member indices of cluster `j`, ascending.
    pub fn members(&self, j: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.assignment[i] == j)
            .collect()
    }

    /// Dense `N x k` 0/1 rows.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.len())
            .map(|i| (0..self.k).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Matchings spent in one iteration, by phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseMatchings {
    pub inter_centroid: u64,
    pub assignment: u64,
    /// Refreshing out-of-date upper bounds so the objective is exact.
    pub objective: u64,
    pub means: u64,
    pub drift: u64,
}

impl PhaseMatchings {
    pub fn total(&self) -> u64 {
        self.inter_centroid + self.assignment + self.objective + self.means + self.drift
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matchings {
    pub init: u64,
    pub per_iteration: Vec<PhaseMatchings>,
}

impl Matchings {
    pub fn total(&self) -> u64 {
        self.init
            + self
                .per_iteration
                .iter()
                .map(PhaseMatchings::total)
                .sum::<u64>()
    }

    pub fn mean_per_iteration(&self) -> f64 {
        let n = self.per_iteration.len().max(1) as f64;
        self.per_iteration
            .iter()
            .map(PhaseMatchings::total)
            .sum::<u64>() as f64
            / n
    }
}

/// Outcome of bound verification. A comparison point is any place where a
/// bound decides whether a distance is skipped or a pattern moves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub comparisons: u64,
    pub lower_violations: u64,
    pub upper_violations: u64,
    /// Skipped pairs whose centroid turned out strictly closer than the
    /// current one.
    pub pruning_violations: u64,
}

impl VerificationReport {
    pub fn violations(&self) -> u64 {
        self.lower_violations + self.upper_violations + self.pruning_violations
    }
}

pub(crate) const VERIFY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Centroids of the best iteration, the ones its membership was
    /// assigned to.
    pub centroids: Vec<AttributedGraph>,
    pub membership: MembershipMatrix,
    /// `D(X_i, Y_{m(i)})` in the best state.
    pub distances: Vec<f64>,
    pub objective: f64,
    /// 1-based iteration that produced the best state.
    pub best_iteration: usize,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub membership_trace: Vec<Vec<usize>>,
    pub matchings: Matchings,
    pub verification: Option<VerificationReport>,
}

impl ClusteringResult {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}

/// Seed stream derivation (splitmix64 finaliser over the combined input).
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const INIT_STREAM: u64 = u64::MAX;
const ASSIGN_STREAM: u64 = u64::MAX - 1;

fn sum_of_squares(d: &[f64]) -> f64 {
    d.iter().fold(0.0, |acc, v| acc + v * v)
}

/// Furthest-first seeding: the first centroid is the sample member closest
/// to the IAM mean of the whole sample, each further one the member whose
/// distance to the nearest chosen centroid is largest. Ties go to the
/// lowest sample index and no member is chosen twice. Returns indices.
pub fn init_furthest_first<G: Borrow<AttributedGraph> + Sync>(
    sample: &[G],
    k: usize,
    oracle: &DistanceOracle,
    seed: u64,
) -> Result<Vec<usize>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if k == 0 || k > sample.len() {
        return Err(Error::Config(format!(
            "k = {k} must lie in 1..={}",
            sample.len()
        )));
    }
    let mean = iam_mean(sample, seed, oracle)?.mean;
    let to_mean = distances_to(sample, &mean, oracle)?;
    let first = argmin(&to_mean);

    let mut chosen = vec![first];
    let mut nearest = distances_to(sample, sample[first].borrow(), oracle)?;
    while chosen.len() < k {
        let mut best: Option<usize> = None;
        for i in (0..sample.len()).filter(|i| !chosen.contains(i)) {
            if best.is_none_or(|b| nearest[i] > nearest[b]) {
                best = Some(i);
            }
        }
        let next = best.expect("k <= N leaves a member to choose");
        chosen.push(next);
        if chosen.len() < k {
            let d = distances_to(sample, sample[next].borrow(), oracle)?;
            for (m, v) in nearest.iter_mut().zip(d) {
                *m = m.min(v);
            }
        }
    }
    Ok(chosen)
}

fn distances_to<G: Borrow<AttributedGraph> + Sync>(
    sample: &[G],
    y: &AttributedGraph,
    oracle: &DistanceOracle,
) -> Result<Vec<f64>> {
    sample
        .par_iter()
        .map(|x| oracle.distance(x.borrow(), y))
        .collect()
}

/// Lowest index of the minimum.
fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// IAM mean of each cluster, members taken in index order. Cluster `j`
/// always uses the same seed within a run, so an unchanged cluster keeps
/// an identical centroid.
fn recompute_means<G: Borrow<AttributedGraph> + Sync>(
    sample: &[G],
    assignment: &[usize],
    k: usize,
    seed: u64,
    oracle: &DistanceOracle,
) -> Result<Vec<AttributedGraph>> {
    (0..k)
        .into_par_iter()
        .map(|j| {
            let members: Vec<&AttributedGraph> = assignment
                .iter()
                .enumerate()
                .filter(|&(_, &c)| c == j)
                .map(|(i, _)| sample[i].borrow())
                .collect();
            let mean = iam_mean(&members, derive_seed(seed, j as u64), oracle)?.mean;
            Ok(mean.with_id(format!("centroid{j}")))
        })
        .collect()
}

/// One repair applied by [`repair_empty_clusters`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Repair {
    /// Pattern `pattern` became centroid `cluster` at distance zero.
    Reseeded { cluster: usize, pattern: usize },
    /// Cluster `cluster` was removed and later indices shifted down.
    Dropped { cluster: usize },
}

/// Fixes every empty cluster in ascending index order. `distance[i]` is
/// the exact distance of pattern `i` to its centroid.
pub(crate) fn repair_empty_clusters(
    assignment: &mut [usize],
    distance: &mut [f64],
    k: usize,
    policy: EmptyClusterPolicy,
    sample: &[impl Borrow<AttributedGraph>],
    centroids: &mut Vec<AttributedGraph>,
) -> Vec<Repair> {
    let mut repairs = Vec::new();
    let mut sizes = vec![0usize; k];
    for &c in assignment.iter() {
        sizes[c] += 1;
    }
    match policy {
        EmptyClusterPolicy::RepairFarthest => {
            for j in 0..k {
                if sizes[j] > 0 {
                    continue;
                }
                let mut best: Option<usize> = None;
                for i in 0..assignment.len() {
                    if sizes[assignment[i]] >= 2 && best.is_none_or(|b| distance[i] > distance[b]) {
                        best = Some(i);
                    }
                }
                let p = best.expect("an empty cluster implies one with two members");
                sizes[assignment[p]] -= 1;
                sizes[j] = 1;
                assignment[p] = j;
                distance[p] = 0.0;
                centroids[j] = sample[p].borrow().clone().with_id(format!("centroid{j}"));
                repairs.push(Repair::Reseeded {
                    cluster: j,
                    pattern: p,
                });
            }
        }
        EmptyClusterPolicy::Drop => {
            for j in (0..k).rev() {
                if sizes[j] > 0 {
                    continue;
                }
                centroids.remove(j);
                for c in assignment.iter_mut() {
                    if *c > j {
                        *c -= 1;
                    }
                }
                repairs.push(Repair::Dropped { cluster: j });
            }
        }
    }
    repairs
}

struct BestState {
    iteration: usize,
    objective: f64,
    centroids: Vec<AttributedGraph>,
    assignment: Vec<usize>,
    distances: Vec<f64>,
}

/// Tracks the best state and decides termination.
pub(crate) struct Progress {
    best: Option<BestState>,
    stale_iterations: usize,
    limit: usize,
    pub(crate) objective_trace: Vec<f64>,
    pub(crate) membership_trace: Vec<Vec<usize>>,
    pub(crate) per_iteration: Vec<PhaseMatchings>,
}

impl Progress {
    pub(crate) fn new(limit: usize) -> Self {
        Self {
            best: None,
            stale_iterations: 0,
            limit,
            objective_trace: Vec::new(),
            membership_trace: Vec::new(),
            per_iteration: Vec::new(),
        }
    }

    /// Records one iteration's assignment.
    pub(crate) fn record(
        &mut self,
        objective: f64,
        centroids: &[AttributedGraph],
        assignment: &[usize],
        distance: &[f64],
    ) {
        let iteration = self.objective_trace.len() + 1;
        self.objective_trace.push(objective);
        self.membership_trace.push(assignment.to_vec());
        let improved = self.best.as_ref().is_none_or(|b| objective < b.objective);
        if improved {
            self.best = Some(BestState {
                iteration,
                objective,
                centroids: centroids.to_vec(),
                assignment: assignment.to_vec(),
                distances: distance.to_vec(),
            });
            self.stale_iterations = 0;
        } else {
            self.stale_iterations += 1;
        }
    }

    pub(crate) fn should_stop(&self) -> bool {
        self.stale_iterations >= self.limit
    }

    pub(crate) fn finish(
        self,
        config: &ClusterConfig,
        init: u64,
        verification: Option<VerificationReport>,
    ) -> ClusteringResult {
        let BestState {
            iteration: best_iteration,
            objective,
            centroids,
            assignment,
            distances,
        } = self.best.expect("at least one iteration runs");
        let k = centroids.len();
        ClusteringResult {
            algorithm: config.algorithm,
            seed: config.seed,
            centroids,
            membership: MembershipMatrix::new(assignment, k).expect("indices below k"),
            distances,
            objective,
            best_iteration,
            iterations: self.objective_trace.len(),
            objective_trace: self.objective_trace,
            membership_trace: self.membership_trace,
            matchings: Matchings {
                init,
                per_iteration: self.per_iteration,
            },
            verification,
        }
    }
}

/// Runs the configured k-means variant.
pub fn kmeans<G: Borrow<AttributedGraph> + Sync>(
    sample: &[G],
    config: &ClusterConfig,
    oracle: &DistanceOracle,
) -> Result<ClusteringResult> {
    config.validate(sample.len(), oracle)?;
    let before = oracle.calls();
    let seeds = init_furthest_first(
        sample,
        config.k,
        oracle,
        derive_seed(config.seed, INIT_STREAM),
    )?;
    let init = oracle.calls() - before;
    let centroids: Vec<AttributedGraph> = seeds
        .iter()
        .enumerate()
        .map(|(j, &i)| sample[i].borrow().clone().with_id(format!("centroid{j}")))
        .collect();
    match config.algorithm {
        Algorithm::Std => standard::run(sample, config, oracle, centroids, init),
        Algorithm::Elkan => elkan::run(sample, config, oracle, centroids, init),
    }
}

/// Standard k-means under [`kmeans`].
pub fn kmeans_std<G: Borrow<AttributedGraph> + Sync>(
    sample: &[G],
    config: &ClusterConfig,
    oracle: &DistanceOracle,
) -> Result<ClusteringResult> {
    let config = ClusterConfig {
        algorithm: Algorithm::Std,
        ..config.clone()
    };
    kmeans(sample, &config, oracle)
}

/// Elkan's k-means under [`kmeans`].
pub fn kmeans_elkan<G: Borrow<AttributedGraph> + Sync>(
    sample: &[G],
    config: &ClusterConfig,
    oracle: &DistanceOracle,
) -> Result<ClusteringResult> {
    let config = ClusterConfig {
        algorithm: Algorithm::Elkan,
        ..config.clone()
    };
    kmeans(sample, &config, oracle)
}

/// `runs` repetitions with seeds `seed, seed + 1, ...`; keeps the lowest
/// objective, earliest run on ties. Returns the winner and its run index.
pub fn best_of_runs<G: Borrow<AttributedGraph> + Sync>(
    sample: &[G],
    config: &ClusterConfig,
    oracle: &DistanceOracle,
    runs: usize,
) -> Result<(ClusteringResult, usize, Vec<ClusteringResult>)> {
    if runs == 0 {
        return Err(Error::Config("at least one run is required".into()));
    }
    let mut all = Vec::with_capacity(runs);
    for r in 0..runs {
        let c = config.clone().with_seed(config.seed.wrapping_add(r as u64));
        all.push(kmeans(sample, &c, oracle)?);
    }
    let mut best = 0;
    for (r, res) in all.iter().enumerate() {
        if res.objective < all[best].objective {
            best = r;
        }
    }
    Ok((all[best].clone(), best, all))
}
