//! Run manifests: a pretty-printed JSON record of one clustering job.
//!
//! Key order follows the struct definitions and nothing time-dependent is
//! stored, so two identical runs write identical bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::GraphRecord;
use crate::clustering::{
    Algorithm, ClusterConfig, ClusteringResult, EmptyClusterPolicy, Matchings, VerificationReport,
};
use crate::error::{Error, Result};
use crate::evaluation::{EvalReport, LabelMapping, Speedup};
use crate::graph::AttributeSpace;
use crate::matcher::Matcher;

pub const FORMAT: &str = "graphkm-manifest";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub sha256: String,
    pub graphs: usize,
    pub node_dim: usize,
    pub edge_dim: usize,
    pub max_order: usize,
}

impl DatasetInfo {
    pub fn new(sha256: String, graphs: usize, space: AttributeSpace, max_order: usize) -> Self {
        Self {
            sha256,
            graphs,
            node_dim: space.node_dim,
            edge_dim: space.edge_dim,
            max_order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub k: usize,
    pub algorithm: Algorithm,
    pub matcher: Matcher,
    pub padding: usize,
    pub memo: bool,
    pub seed: u64,
    pub runs: usize,
    pub max_iters: usize,
    pub no_improve_limit: usize,
    pub empty_policy: EmptyClusterPolicy,
    pub verify: bool,
    pub label_mapping: LabelMapping,
}

impl ConfigEcho {
    pub fn cluster_config(&self) -> ClusterConfig {
        ClusterConfig {
            k: self.k,
            algorithm: self.algorithm,
            max_iters: self.max_iters,
            no_improve_limit: self.no_improve_limit,
            seed: self.seed,
            empty_policy: self.empty_policy,
            verify: self.verify,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub objective: f64,
    pub iterations: usize,
    pub matchings_total: u64,
}

impl RunSummary {
    pub fn of(r: &ClusteringResult) -> Self {
        Self {
            seed: r.seed,
            objective: r.objective,
            iterations: r.iterations,
            matchings_total: r.matchings.total(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub best_run: usize,
    pub seed: u64,
    pub k: usize,
    pub iterations: usize,
    pub best_iteration: usize,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    pub assignment: Vec<usize>,
    pub distances: Vec<f64>,
    pub membership_trace: Vec<Vec<usize>>,
    pub matchings: Matchings,
    pub matchings_total: u64,
    pub verification: Option<VerificationReport>,
}

impl RunRecord {
    pub fn of(r: &ClusteringResult, best_run: usize) -> Self {
        Self {
            best_run,
            seed: r.seed,
            k: r.k(),
            iterations: r.iterations,
            best_iteration: r.best_iteration,
            objective: r.objective,
            objective_trace: r.objective_trace.clone(),
            assignment: r.membership.assignment().to_vec(),
            distances: r.distances.clone(),
            membership_trace: r.membership_trace.clone(),
            matchings: r.matchings.clone(),
            matchings_total: r.matchings.total(),
            verification: r.verification,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub dataset: DatasetInfo,
    pub config: ConfigEcho,
    pub run: RunRecord,
    pub runs: Vec<RunSummary>,
    pub report: EvalReport,
    pub centroids: Vec<GraphRecord>,
}

impl RunManifest {
    pub fn new(
        dataset: DatasetInfo,
        config: ConfigEcho,
        best: &ClusteringResult,
        best_run: usize,
        all: &[ClusteringResult],
        report: EvalReport,
    ) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            dataset,
            config,
            run: RunRecord::of(best, best_run),
            runs: all.iter().map(RunSummary::of).collect(),
            report,
            centroids: best.centroids.iter().map(GraphRecord::from_graph).collect(),
        }
    }

    /// Speedup of this run over `baseline`, from the best runs' counters.
    pub fn speedup_over(&self, baseline: &RunManifest) -> Speedup {
        Speedup::between(&baseline.run.matchings, &self.run.matchings)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn save_manifest(manifest: &RunManifest, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, manifest.to_json()?)?;
    Ok(())
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<RunManifest> {
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(path)?)?;
    if m.format != FORMAT || m.version != VERSION {
        return Err(Error::Schema(format!(
            "not a version {VERSION} run manifest: {} v{}",
            m.format, m.version
        )));
    }
    Ok(m)
}
