//! Elkan's k-means with delayed distance evaluation.
//!
//! Each pattern keeps an upper bound `u` on the distance to its own
//! centroid and a lower bound `l[j]` on the distance to every centroid.
//! Centroid `j` is skipped for pattern `X` when `u <= D(Y_X, Y_j) / 2` or
//! `u <= l[j]`. After the means move by `delta`, lower bounds drop by
//! `delta[j]` (clamped at zero) and the upper bound grows by the drift of
//! the pattern's own centroid; `u` is marked out of date only when that
//! drift is positive, and refreshed only when a skip test fails.
//!
//! To agree exactly with the standard variant, which breaks distance ties
//! towards the lower centroid index, both skip tests become strict when
//! the tested centroid has a lower index than the current one.

use std::borrow::Borrow;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    derive_seed, recompute_means, repair_empty_clusters, sum_of_squares, ClusterConfig,
    ClusteringResult, PhaseMatchings, Progress, Repair, VerificationReport, ASSIGN_STREAM,
    VERIFY_TOL,
};
use crate::error::Result;
use crate::graph::AttributedGraph;
use crate::matcher::{inter_centroid_distances, DistanceOracle};

struct Row {
    assigned: usize,
    upper: f64,
    stale: bool,
    lower: Vec<f64>,
}

impl Row {
    fn skip(&self, y: usize, half_gap: f64) -> bool {
        if y < self.assigned {
            self.upper < half_gap || self.upper < self.lower[y]
        } else {
            self.upper <= half_gap || self.upper <= self.lower[y]
        }
    }
}

/// True distances of one pattern to every centroid, outside the counter.
fn true_distances(
    x: &AttributedGraph,
    centroids: &[AttributedGraph],
    oracle: &DistanceOracle,
) -> Result<Vec<f64>> {
    centroids
        .iter()
        .map(|y| {
            oracle
                .matcher()
                .align(x, y, oracle.padding())
                .map(|a| a.distance)
        })
        .collect()
}

fn check_bounds(row: &Row, y: usize, truth: &[f64], report: &mut VerificationReport) {
    report.comparisons += 1;
    if row.lower[y] > truth[y] + VERIFY_TOL {
        report.lower_violations += 1;
    }
    if row.upper < truth[row.assigned] - VERIFY_TOL {
        report.upper_violations += 1;
    }
}

fn check_skip(row: &Row, y: usize, truth: &[f64], report: &mut VerificationReport) {
    if truth[row.assigned] > truth[y] + VERIFY_TOL {
        report.pruning_violations += 1;
    }
}

fn assign_row(
    x: &AttributedGraph,
    row: &mut Row,
    centroids: &[AttributedGraph],
    gaps: &[Vec<f64>],
    oracle: &DistanceOracle,
    verify: bool,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    let truth = if verify {
        true_distances(x, centroids, oracle)?
    } else {
        Vec::new()
    };
    for y in 0..centroids.len() {
        if y == row.assigned {
            continue;
        }
        if verify {
            check_bounds(row, y, &truth, &mut report);
        }
        if row.skip(y, 0.5 * gaps[row.assigned][y]) {
            if verify {
                check_skip(row, y, &truth, &mut report);
            }
            continue;
        }
        if row.stale {
            row.upper = oracle.distance(x, &centroids[row.assigned])?;
            row.lower[row.assigned] = row.upper;
            row.stale = false;
            if verify {
                check_bounds(row, y, &truth, &mut report);
            }
            if row.skip(y, 0.5 * gaps[row.assigned][y]) {
                if verify {
                    check_skip(row, y, &truth, &mut report);
                }
                continue;
            }
        }
        let d = oracle.distance(x, &centroids[y])?;
        row.lower[y] = d;
        if verify {
            check_bounds(row, y, &truth, &mut report);
        }
        if d < row.upper || (d == row.upper && y < row.assigned) {
            row.assigned = y;
            row.upper = d;
        }
    }
    Ok(report)
}

fn merge(a: VerificationReport, b: VerificationReport) -> VerificationReport {
    VerificationReport {
        comparisons: a.comparisons + b.comparisons,
        lower_violations: a.lower_violations + b.lower_violations,
        upper_violations: a.upper_violations + b.upper_violations,
        pruning_violations: a.pruning_violations + b.pruning_violations,
    }
}

pub(super) fn run<G: Borrow<AttributedGraph> + Sync>(
    sample: &[G],
    config: &ClusterConfig,
    oracle: &DistanceOracle,
    mut centroids: Vec<AttributedGraph>,
    init: u64,
) -> Result<ClusteringResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, ASSIGN_STREAM));
    let k0 = centroids.len();
    let mut rows: Vec<Row> = (0..sample.len())
        .map(|_| Row {
            assigned: rng.gen_range(0..k0),
            upper: f64::INFINITY,
            stale: true,
            lower: vec![0.0; k0],
        })
        .collect();

    let mut progress = Progress::new(config.no_improve_limit);
    let mut verification = config.verify.then(VerificationReport::default);

    for iteration in 1..=config.max_iters {
        let mut phase = PhaseMatchings::default();

        let before = oracle.calls();
        let gaps = inter_centroid_distances(&centroids, oracle)?;
        phase.inter_centroid = oracle.calls() - before;

        let before = oracle.calls();
        let verify = config.verify;
        let report = rows
            .par_iter_mut()
            .enumerate()
            .map(|(i, row)| assign_row(sample[i].borrow(), row, &centroids, &gaps, oracle, verify))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(VerificationReport::default(), merge);
        phase.assignment = oracle.calls() - before;
        if let Some(v) = verification.as_mut() {
            *v = merge(*v, report);
        }

        let before = oracle.calls();
        rows.par_iter_mut()
            .enumerate()
            .filter(|(_, row)| row.stale)
            .try_for_each(|(i, row)| -> Result<()> {
                row.upper = oracle.distance(sample[i].borrow(), &centroids[row.assigned])?;
                row.lower[row.assigned] = row.upper;
                row.stale = false;
                Ok(())
            })?;
        phase.objective = oracle.calls() - before;

        let mut assignment: Vec<usize> = rows.iter().map(|r| r.assigned).collect();
        let mut distance: Vec<f64> = rows.iter().map(|r| r.upper).collect();
        let k = centroids.len();
        let repairs = repair_empty_clusters(
            &mut assignment,
            &mut distance,
            k,
            config.empty_policy,
            sample,
            &mut centroids,
        );
        for repair in repairs {
            match repair {
                Repair::Reseeded { cluster, pattern } => {
                    for row in rows.iter_mut() {
                        row.lower[cluster] = 0.0;
                    }
                    let row = &mut rows[pattern];
                    row.assigned = cluster;
                    row.upper = 0.0;
                }
                Repair::Dropped { cluster } => {
                    for row in rows.iter_mut() {
                        row.lower.remove(cluster);
                        if row.assigned > cluster {
                            row.assigned -= 1;
                        }
                    }
                }
            }
        }
        let objective = sum_of_squares(&distance);
        progress.record(objective, &centroids, &assignment, &distance);
        if progress.should_stop() || iteration == config.max_iters {
            progress.per_iteration.push(phase);
            break;
        }

        let before = oracle.calls();
        let next = recompute_means(sample, &assignment, centroids.len(), config.seed, oracle)?;
        phase.means = oracle.calls() - before;

        let before = oracle.calls();
        let drift = centroids
            .par_iter()
            .zip(&next)
            .map(|(old, new)| oracle.distance(old, new))
            .collect::<Result<Vec<_>>>()?;
        phase.drift = oracle.calls() - before;

        for row in rows.iter_mut() {
            for (l, d) in row.lower.iter_mut().zip(&drift) {
                *l = (*l - d).max(0.0);
            }
            let own = drift[row.assigned];
            row.upper += own;
            if own > 0.0 {
                row.stale = true;
            }
        }
        centroids = next;
        progress.per_iteration.push(phase);
    }
    Ok(progress.finish(config, init, verification))
}
