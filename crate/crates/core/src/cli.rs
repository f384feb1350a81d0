//! `graphkm` command line.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use graphkm::clustering::{best_of_runs, Algorithm, ClusterConfig, EmptyClusterPolicy};
use graphkm::evaluation::{
    cluster_error_recomputed, evaluate, DistanceMatrix, EvalReport, LabelMapping,
    PairwiseDistances, Speedup,
};
use graphkm::io::dataset::GraphRecord;
use graphkm::io::gxl::{convert_collection, ConvertOptions};
use graphkm::io::manifest::{ConfigEcho, DatasetInfo};
use graphkm::io::{load_dataset, load_manifest, save_manifest, Dataset, RunManifest, Transform};
use graphkm::matcher::{ExactParams, LowerBound};
use graphkm::mean::{brute_force_mean, iam_mean, set_mean, ssd};
use graphkm::{AttributedGraph, DistanceOracle, Error, Matcher, Result};

#[derive(Parser)]
#[command(
    name = "graphkm",
    version,
    about = "k-means clustering of attributed graphs"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "GRAPHKM_THREADS")]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Graph distance between two graphs of a dataset.
    Dist(DistArgs),
    /// Sample mean of a dataset or of a subset of it.
    Mean(MeanArgs),
    /// Cluster a dataset.
    Cluster(ClusterArgs),
    /// Report on a saved run manifest.
    Eval(EvalArgs),
    /// Compare std and elkan over a list of k values.
    Bench(BenchArgs),
    /// Convert a GXL collection with a CXL class index into a dataset.
    Convert(ConvertArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MatcherKind {
    /// Exact up to --exact-max-order, graduated assignment above.
    Auto,
    Exact,
    Ga,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundKind {
    Zero,
    NodeDiagonal,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset file.
    dataset: PathBuf,

    /// Encoding transforms to apply on load.
    #[arg(long = "transform", value_delimiter = ',', default_values_t = ["one-hot".to_string(), "edge-presence-flag".to_string()])]
    transforms: Vec<String>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let t = self
            .transforms
            .iter()
            .map(|s| Transform::parse(s))
            .collect::<Result<Vec<_>>>()?;
        load_dataset(&self.dataset, &t)
    }
}

#[derive(Args, Clone)]
struct MatcherArgs {
    #[arg(long, value_enum, default_value_t = MatcherKind::Auto)]
    matcher: MatcherKind,

    /// Largest padded order the exact matcher accepts.
    #[arg(long, default_value_t = 10)]
    exact_max_order: usize,

    /// Run the exact matcher above --exact-max-order.
    #[arg(long)]
    force: bool,

    /// Lower bound used by the exact matcher.
    #[arg(long, value_enum, default_value_t = BoundKind::Zero)]
    bound: BoundKind,

    /// Cache distances by graph content.
    #[arg(long)]
    memo: bool,
}

impl MatcherArgs {
    fn matcher(&self, max_order: usize) -> Result<Matcher> {
        let bound = match self.bound {
            BoundKind::Zero => LowerBound::Zero,
            BoundKind::NodeDiagonal => LowerBound::NodeDiagonal,
        };
        let exact = |limit| {
            Matcher::Exact(ExactParams {
                bound,
                max_order: limit,
            })
        };
        Ok(match self.matcher {
            MatcherKind::Ga => Matcher::graduated_assignment(),
            MatcherKind::Auto if max_order > self.exact_max_order && !self.force => {
                Matcher::graduated_assignment()
            }
            MatcherKind::Exact if max_order > self.exact_max_order && !self.force => {
                return Err(Error::ScaleGuard {
                    order: max_order,
                    limit: self.exact_max_order,
                })
            }
            _ if self.force => exact(None),
            _ => exact(Some(self.exact_max_order)),
        })
    }

    fn oracle(&self, data: &Dataset) -> Result<DistanceOracle> {
        let o = DistanceOracle::new(self.matcher(data.max_order())?).with_padding(data.max_order());
        Ok(if self.memo { o.with_memo() } else { o })
    }
}

#[derive(Args)]
struct DistArgs {
    #[command(flatten)]
    data: DataArgs,
    id_a: String,
    id_b: String,
    #[command(flatten)]
    matcher: MatcherArgs,
    /// Also run the other matcher and print the gap.
    #[arg(long)]
    compare: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeanMethod {
    Iam,
    Set,
    BruteForce,
}

#[derive(Args)]
struct MeanArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = MeanMethod::Iam)]
    method: MeanMethod,
    /// Restrict the sample to these ids.
    #[arg(long, value_delimiter = ',')]
    ids: Vec<String>,
    /// Restrict the sample to graphs with this label.
    #[arg(long)]
    label: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    matcher: MatcherArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoKind {
    Std,
    Elkan,
}

impl From<AlgoKind> for Algorithm {
    fn from(a: AlgoKind) -> Self {
        match a {
            AlgoKind::Std => Algorithm::Std,
            AlgoKind::Elkan => Algorithm::Elkan,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyKind {
    RepairFarthest,
    Drop,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MappingKind {
    Majority,
    Optimal,
}

impl From<MappingKind> for LabelMapping {
    fn from(m: MappingKind) -> Self {
        match m {
            MappingKind::Majority => LabelMapping::Majority,
            MappingKind::Optimal => LabelMapping::Optimal,
        }
    }
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iterations without improvement before stopping.
    #[arg(long, default_value_t = 3)]
    no_improve: usize,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Seeded repetitions; the lowest error wins.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, value_enum, default_value_t = PolicyKind::RepairFarthest)]
    empty_policy: PolicyKind,
    #[arg(long, value_enum, default_value_t = MappingKind::Majority)]
    mapping: MappingKind,
    #[command(flatten)]
    matcher: MatcherArgs,
}

impl RunArgs {
    fn config(&self, k: usize, algorithm: Algorithm, verify: bool) -> ClusterConfig {
        ClusterConfig {
            k,
            algorithm,
            max_iters: self.max_iters,
            no_improve_limit: self.no_improve,
            seed: self.seed,
            empty_policy: match self.empty_policy {
                PolicyKind::RepairFarthest => EmptyClusterPolicy::RepairFarthest,
                PolicyKind::Drop => EmptyClusterPolicy::Drop,
            },
            verify,
        }
    }
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = AlgoKind::Elkan)]
    algo: AlgoKind,
    #[arg(long)]
    k: usize,
    /// Recompute true distances and count bound violations (elkan, exact
    /// matcher).
    #[arg(long)]
    verify: bool,
    /// Skip the silhouette and its N(N-1)/2 distances.
    #[arg(long)]
    no_silhouette: bool,
    /// Where to write the run manifest.
    #[arg(long, short = 'o')]
    manifest: Option<PathBuf>,
    /// Manifest of a baseline run for the speedup columns.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct EvalArgs {
    manifest: PathBuf,
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Recompute the error from the exported centroids on this dataset.
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    k_list: Vec<usize>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct ConvertArgs {
    /// CXL index listing `<print file=.. class=..>` entries.
    #[arg(long)]
    cxl: PathBuf,
    /// Directory holding the GXL files.
    #[arg(long)]
    gxl_dir: PathBuf,
    #[arg(long, short = 'o')]
    output: PathBuf,
    /// Attribute names to encode as categories.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
}

fn emit(format: Format, value: &impl Serialize, text: impl FnOnce() -> String) -> Result<()> {
    let out = match format {
        Format::Json => serde_json::to_string_pretty(value)? + "\n",
        Format::Text => text(),
    };
    io::stdout().write_all(out.as_bytes())?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.4}"))
}

fn dist(a: DistArgs, format: Format) -> Result<()> {
    let data = a.data.load()?;
    let x = data.find(&a.id_a)?;
    let y = data.find(&a.id_b)?;
    let oracle = a.matcher.oracle(&data)?;
    let al = oracle.align(x, y)?;
    let other = if a.compare {
        let m = if al.exact {
            Matcher::graduated_assignment()
        } else if data.max_order() <= a.matcher.exact_max_order || a.matcher.force {
            Matcher::exact()
        } else {
            return Err(Error::ScaleGuard {
                order: data.max_order(),
                limit: a.matcher.exact_max_order,
            });
        };
        Some(m.align(x, y, oracle.padding())?)
    } else {
        None
    };
    let value = json!({
        "a": a.id_a,
        "b": a.id_b,
        "distance": al.distance,
        "exact": al.exact,
        "permutation": al.permutation,
        "calls": oracle.calls(),
        "compare": other.as_ref().map(|o| json!({
            "distance": o.distance,
            "exact": o.exact,
            "gap": (al.distance - o.distance).abs(),
        })),
    });
    emit(format, &value, || {
        let mut s = format!(
            "distance {}\nexact {}\npermutation {:?}\ncalls {}\n",
            al.distance,
            al.exact,
            al.permutation.as_slice(),
            oracle.calls()
        );
        if let Some(o) = &other {
            let (ga, ex) = if al.exact {
                (o.distance, al.distance)
            } else {
                (al.distance, o.distance)
            };
            s += &format!("exact {ex}\ngraduated-assignment {ga}\ngap {}\n", ga - ex);
        }
        s
    })
}

fn mean(a: MeanArgs, format: Format) -> Result<()> {
    let data = a.data.load()?;
    let mut sample: Vec<&AttributedGraph> = if a.ids.is_empty() {
        data.graphs.iter().collect()
    } else {
        a.ids
            .iter()
            .map(|id| data.find(id))
            .collect::<Result<_>>()?
    };
    if let Some(l) = &a.label {
        sample.retain(|g| g.label() == Some(l.as_str()));
    }
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let oracle = a.matcher.oracle(&data)?;
    let (mean, f, extra) = match a.method {
        MeanMethod::Iam => {
            let r = iam_mean(&sample, a.seed, &oracle)?;
            let f = ssd(&r.mean, &sample, &oracle)?;
            (
                r.mean,
                f,
                json!({ "order_of_presentation": r.order_of_presentation }),
            )
        }
        MeanMethod::Set => {
            let r = set_mean(&sample, &oracle)?;
            (r.graph, r.ssd[r.index], json!({ "index": r.index }))
        }
        MeanMethod::BruteForce => {
            let r = brute_force_mean(&sample)?;
            (
                r.mean,
                r.ssd,
                json!({ "sps": r.sps, "combinations": r.combinations }),
            )
        }
    };
    let record = GraphRecord::from_graph(&mean.trimmed());
    let value = json!({
        "sample": sample.len(),
        "ssd": f,
        "calls": oracle.calls(),
        "details": extra,
        "mean": record,
    });
    emit(format, &value, || {
        format!(
            "sample {}\nssd {f}\ncalls {}\nmean {}\n",
            sample.len(),
            oracle.calls(),
            serde_json::to_string(&record).unwrap_or_default()
        )
    })
}

fn report_text(r: &EvalReport) -> String {
    let mut s = format!(
        "error {}\naccuracy {}\nsilhouette {}\niterations {}\nmatchings/iteration {:.1}\nmatchings total {}\n",
        r.error,
        opt(r.accuracy),
        opt(r.silhouette),
        r.iterations,
        r.matchings_per_iteration,
        r.matchings_total
    );
    if let Some(sp) = r.speedup_vs_baseline {
        s += &format!(
            "speedup/iteration {:.3}\nspeedup total {:.3}\n",
            sp.per_iteration, sp.total
        );
    }
    s
}

fn cluster(a: ClusterArgs, format: Format) -> Result<()> {
    let baseline = a.baseline.as_ref().map(load_manifest).transpose()?;
    let data = a.data.load()?;
    let oracle = a.run.matcher.oracle(&data)?;
    let config = a.run.config(a.k, a.algo.into(), a.verify);
    config.validate(data.graphs.len(), &oracle)?;
    let (best, index, all) = best_of_runs(&data.graphs, &config, &oracle, a.run.runs)?;

    let eval_oracle = DistanceOracle::new(oracle.matcher().clone()).with_padding(oracle.padding());
    let pairwise = if a.no_silhouette {
        PairwiseDistances::Skip
    } else {
        PairwiseDistances::Compute
    };
    let mut report = evaluate(
        &data.graphs,
        &best,
        &eval_oracle,
        a.run.mapping.into(),
        pairwise,
    )?;
    let manifest_config = ConfigEcho {
        k: a.k,
        algorithm: a.algo.into(),
        matcher: oracle.matcher().clone(),
        padding: oracle.padding(),
        memo: oracle.memo_enabled(),
        seed: a.run.seed,
        runs: a.run.runs,
        max_iters: a.run.max_iters,
        no_improve_limit: a.run.no_improve,
        empty_policy: config.empty_policy,
        verify: a.verify,
        label_mapping: a.run.mapping.into(),
    };
    let info = DatasetInfo::new(
        data.checksum.clone(),
        data.graphs.len(),
        data.space,
        data.max_order(),
    );
    if let Some(b) = &baseline {
        report.speedup_vs_baseline = Some(Speedup::between(&b.run.matchings, &best.matchings));
    }
    let manifest = RunManifest::new(info, manifest_config, &best, index, &all, report.clone());
    if let Some(path) = &a.manifest {
        save_manifest(&manifest, path)?;
    }
    emit(format, &manifest, || {
        let mut s = format!(
            "algorithm {}\nk {}\nbest run {} (seed {})\n",
            best.algorithm.name(),
            best.k(),
            index,
            best.seed
        );
        s += &report_text(&report);
        if let Some(v) = best.verification {
            s += &format!(
                "verification comparisons {} violations {} (lower {}, upper {}, pruning {})\n",
                v.comparisons,
                v.violations(),
                v.lower_violations,
                v.upper_violations,
                v.pruning_violations
            );
        }
        s
    })
}

fn eval(a: EvalArgs, format: Format) -> Result<()> {
    let m = load_manifest(&a.manifest)?;
    let mut report = m.report.clone();
    report.error = m.run.objective;
    report.matchings_total = m.run.matchings.total();
    report.matchings_per_iteration = m.run.matchings.mean_per_iteration();
    report.iterations = m.run.iterations;
    if let Some(b) = &a.baseline {
        report.speedup_vs_baseline = Some(m.speedup_over(&load_manifest(b)?));
    }
    let recomputed = match &a.dataset {
        Some(path) => {
            let data = load_dataset(path, &Transform::all())?;
            if data.checksum != m.dataset.sha256 {
                return Err(Error::Config(
                    "dataset checksum differs from the manifest".into(),
                ));
            }
            let centroids = m
                .centroids
                .iter()
                .map(|r| r.to_graph(data.space))
                .collect::<Result<Vec<_>>>()?;
            let oracle =
                DistanceOracle::new(m.config.matcher.clone()).with_padding(m.config.padding);
            let membership =
                graphkm::clustering::MembershipMatrix::new(m.run.assignment.clone(), m.run.k)?;
            Some(cluster_error_recomputed(
                &data.graphs,
                &centroids,
                &membership,
                &oracle,
            )?)
        }
        None => None,
    };
    let value = json!({ "report": report, "recomputed_error": recomputed });
    emit(format, &value, || {
        let mut s = report_text(&report);
        if let Some(e) = recomputed {
            s += &format!("recomputed error {e}\n");
        }
        s
    })
}

#[derive(Serialize, Default, Clone, Copy)]
struct BenchCell {
    error: f64,
    accuracy: Option<f64>,
    silhouette: Option<f64>,
    iterations: f64,
    matchings_per_iteration: f64,
    matchings_total: f64,
}

#[derive(Serialize)]
struct BenchRow {
    k: usize,
    std: BenchCell,
    elkan: BenchCell,
    speedup: Speedup,
}

fn average(cells: &[BenchCell]) -> BenchCell {
    let n = cells.len() as f64;
    let avg = |f: &dyn Fn(&BenchCell) -> f64| cells.iter().map(f).sum::<f64>() / n;
    let avg_opt = |f: &dyn Fn(&BenchCell) -> Option<f64>| {
        cells
            .iter()
            .map(f)
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.iter().sum::<f64>() / n)
    };
    BenchCell {
        error: avg(&|c| c.error),
        accuracy: avg_opt(&|c| c.accuracy),
        silhouette: avg_opt(&|c| c.silhouette),
        iterations: avg(&|c| c.iterations),
        matchings_per_iteration: avg(&|c| c.matchings_per_iteration),
        matchings_total: avg(&|c| c.matchings_total),
    }
}

fn bench(a: BenchArgs, format: Format) -> Result<()> {
    let data = a.data.load()?;
    let probe = a.run.matcher.oracle(&data)?;
    let distances = DistanceMatrix::compute(
        &data.graphs,
        &DistanceOracle::new(probe.matcher().clone()).with_padding(probe.padding()),
    )?;
    let mut rows = Vec::new();
    for &k in &a.k_list {
        let mut cells = [Vec::new(), Vec::new()];
        for (slot, algorithm) in [Algorithm::Std, Algorithm::Elkan].into_iter().enumerate() {
            for r in 0..a.run.runs.max(1) {
                let oracle = a.run.matcher.oracle(&data)?;
                let config = a
                    .run
                    .config(k, algorithm, false)
                    .with_seed(a.run.seed.wrapping_add(r as u64));
                let result = graphkm::clustering::kmeans(&data.graphs, &config, &oracle)?;
                let rep = evaluate(
                    &data.graphs,
                    &result,
                    &oracle,
                    a.run.mapping.into(),
                    PairwiseDistances::Given(&distances),
                )?;
                cells[slot].push(BenchCell {
                    error: rep.error,
                    accuracy: rep.accuracy,
                    silhouette: rep.silhouette,
                    iterations: rep.iterations as f64,
                    matchings_per_iteration: rep.matchings_per_iteration,
                    matchings_total: rep.matchings_total as f64,
                });
            }
        }
        let (s, e) = (average(&cells[0]), average(&cells[1]));
        rows.push(BenchRow {
            k,
            std: s,
            elkan: e,
            speedup: Speedup {
                per_iteration: s.matchings_per_iteration / e.matchings_per_iteration,
                total: s.matchings_total / e.matchings_total,
            },
        });
    }
    emit(format, &rows, || {
        let mut s = format!(
            "{:>4} {:>6} {:>12} {:>9} {:>10} {:>7} {:>12} {:>12} {:>9} {:>9}\n",
            "k",
            "algo",
            "error",
            "accuracy",
            "silhouette",
            "iters",
            "match/iter",
            "match total",
            "sp/iter",
            "sp total"
        );
        for r in &rows {
            for (name, c) in [("std", &r.std), ("elkan", &r.elkan)] {
                let sp = if name == "elkan" {
                    (
                        format!("{:.2}", r.speedup.per_iteration),
                        format!("{:.2}", r.speedup.total),
                    )
                } else {
                    ("".into(), "".into())
                };
                s += &format!(
                    "{:>4} {:>6} {:>12.4} {:>9} {:>10} {:>7.1} {:>12.1} {:>12.1} {:>9} {:>9}\n",
                    r.k,
                    name,
                    c.error,
                    opt(c.accuracy),
                    opt(c.silhouette),
                    c.iterations,
                    c.matchings_per_iteration,
                    c.matchings_total,
                    sp.0,
                    sp.1
                );
            }
        }
        s
    })
}

fn convert(a: ConvertArgs, format: Format) -> Result<()> {
    let mut buf = Vec::new();
    let n = convert_collection(
        &a.cxl,
        &a.gxl_dir,
        &ConvertOptions {
            categorical: a.categorical,
        },
        &mut buf,
    )?;
    fs::write(&a.output, buf)?;
    emit(format, &json!({ "graphs": n, "output": a.output }), || {
        format!("wrote {n} graphs to {}\n", a.output.display())
    })
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return 1;
        }
    }
    let format = cli.format;
    let outcome = match cli.command {
        Command::Dist(a) => dist(a, format),
        Command::Mean(a) => mean(a, format),
        Command::Cluster(a) => cluster(a, format),
        Command::Eval(a) => eval(a, format),
        Command::Bench(a) => bench(a, format),
        Command::Convert(a) => convert(a, format),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
