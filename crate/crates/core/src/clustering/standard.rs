//! Standard k-means: every pattern is compared with every centroid in
//! every iteration.

use std::borrow::Borrow;

use rayon::prelude::*;

use super::{
    argmin, recompute_means, repair_empty_clusters, sum_of_squares, ClusterConfig,
    ClusteringResult, PhaseMatchings, Progress,
};
use crate::error::Result;
use crate::graph::AttributedGraph;
use crate::matcher::DistanceOracle;

pub(super) fn run<G: Borrow<AttributedGraph> + Sync>(
    sample: &[G],
    config: &ClusterConfig,
    oracle: &DistanceOracle,
    mut centroids: Vec<AttributedGraph>,
    init: u64,
) -> Result<ClusteringResult> {
    let mut progress = Progress::new(config.no_improve_limit);
    for iteration in 1..=config.max_iters {
        let mut phase = PhaseMatchings::default();
        let k = centroids.len();

        let before = oracle.calls();
        let rows: Vec<Vec<f64>> = sample
            .par_iter()
            .map(|x| {
                centroids
                    .iter()
                    .map(|y| oracle.distance(x.borrow(), y))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        phase.assignment = oracle.calls() - before;

        let mut assignment: Vec<usize> = rows.iter().map(|r| argmin(r)).collect();
        let mut distance: Vec<f64> = rows.iter().zip(&assignment).map(|(r, &a)| r[a]).collect();
        repair_empty_clusters(
            &mut assignment,
            &mut distance,
            k,
            config.empty_policy,
            sample,
            &mut centroids,
        );
        let objective = sum_of_squares(&distance);
        progress.record(objective, &centroids, &assignment, &distance);
        if progress.should_stop() || iteration == config.max_iters {
            progress.per_iteration.push(phase);
            break;
        }

        let before = oracle.calls();
        centroids = recompute_means(sample, &assignment, centroids.len(), config.seed, oracle)?;
        phase.means = oracle.calls() - before;
        progress.per_iteration.push(phase);
    }
    Ok(progress.finish(config, init, None))
}
