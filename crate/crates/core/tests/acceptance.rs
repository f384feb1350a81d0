//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use graphkm::clustering::{kmeans_elkan, kmeans_std, Algorithm, ClusterConfig, MembershipMatrix};
use graphkm::evaluation::{silhouette_index, DistanceMatrix};
use graphkm::graph::{embed, Permutation, Representation};
use graphkm::io::save_dataset;
use graphkm::matcher::{exact, ExactParams};
use graphkm::mean::{brute_force_mean, iam_mean, ssd};
use graphkm::synth::{
    dyadic_graph, prototype_clusters, random_graph, rng, shuffled, two_scalar_blobs, ClusterSpec,
};
use graphkm::{AttributeSpace, AttributedGraph, DistanceOracle};
use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Squared cell differences under `p`, summed directly over the grid.
fn enumerated_distance(x: &Representation, y: &Representation) -> f64 {
    let n = x.order();
    (0..n)
        .permutations(n)
        .map(|p| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for (a, b) in x.cell(i, j).iter().zip(y.cell(p[i], p[j])) {
                        s += (a - b) * (a - b);
                    }
                }
            }
            s.sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

fn metric_suite() -> Outcome {
    let space = AttributeSpace::new(2, 2);
    let oracle = DistanceOracle::exact().with_padding(5);
    let mut r = rng(1001);
    let mut worst_triangle = f64::NEG_INFINITY;
    for t in 0..500 {
        let g: Vec<AttributedGraph> = (0..3)
            .map(|i| {
                let order = r.gen_range(1..=5);
                random_graph(&mut r, format!("t{t}g{i}"), order, space, 0.5, 1.0)
            })
            .collect();
        let d = |a: &AttributedGraph, b: &AttributedGraph| oracle.distance(a, b).unwrap();
        let (ab, bc, ac) = (d(&g[0], &g[1]), d(&g[1], &g[2]), d(&g[0], &g[2]));
        for (x, y, v) in [(0, 1, ab), (1, 2, bc), (0, 2, ac)] {
            let back = d(&g[y], &g[x]);
            check((v - back).abs() <= 1e-9, || {
                format!("triple {t}: asymmetric {v} vs {back}")
            })?;
        }
        let iso = shuffled(&mut r, &g[0], "iso");
        let z = d(&g[0], &iso);
        check(z < 1e-9, || format!("triple {t}: isomorphic pair at {z}"))?;
        for (long, a, b) in [(ac, ab, bc), (ab, ac, bc), (bc, ab, ac)] {
            worst_triangle = worst_triangle.max(long - a - b);
            check(long <= a + b + 1e-9, || {
                format!("triple {t}: triangle {long} > {a} + {b}")
            })?;
        }
    }
    Ok(format!(
        "500 triples, worst triangle excess {worst_triangle:.3e}"
    ))
}

fn exact_vs_enumeration() -> Outcome {
    let space = AttributeSpace::new(2, 2);
    let mut r = rng(1002);
    let mut worst = 0.0f64;
    for t in 0..200 {
        let (ox, oy) = (r.gen_range(1..=5), r.gen_range(1..=5));
        let x = random_graph(&mut r, "x", ox, space, 0.5, 1.0);
        let y = random_graph(&mut r, "y", oy, space, 0.5, 1.0);
        let got = exact::align(&x, &y, &ExactParams::default())
            .unwrap()
            .distance;
        let n = ox.max(oy);
        let want =
            enumerated_distance(&embed(&x, space, n).unwrap(), &embed(&y, space, n).unwrap());
        worst = worst.max((got - want).abs());
        check((got - want).abs() <= 1e-12, || {
            format!("pair {t}: {got} vs {want}")
        })?;
    }
    Ok(format!("200 pairs, max |diff| {worst:.3e}"))
}

fn mean_theorem_suite() -> Outcome {
    let space = AttributeSpace::new(2, 1);
    let mut r = rng(1003);
    for t in 0..50 {
        let count = r.gen_range(1..=4);
        let sample: Vec<_> = (0..count)
            .map(|i| {
                let order = r.gen_range(1..=3);
                dyadic_graph(&mut r, format!("g{i}"), order, space, 0.5)
            })
            .collect();
        let n = sample.iter().map(AttributedGraph::order).max().unwrap();
        let best = brute_force_mean(&sample).unwrap();

        let avg = best.alignment.mean();
        let gap = avg.distance(best.mean.representation()).unwrap();
        check(gap <= 1e-9, || {
            format!("sample {t}: mean is {gap} from its alignment average")
        })?;
        let y = embed(&best.mean, space, n).unwrap();
        for (i, (g, x)) in sample
            .iter()
            .zip(&best.alignment.representations)
            .enumerate()
        {
            let aligned = x.distance(&y).unwrap();
            let optimal = exact::align_padded(g, &best.mean, &ExactParams::default(), n)
                .unwrap()
                .distance;
            check((aligned - optimal).abs() <= 1e-9, || {
                format!("sample {t}, graph {i}: aligned {aligned} vs optimal {optimal}")
            })?;
        }

        let reps: Vec<Representation> =
            sample.iter().map(|g| embed(g, space, n).unwrap()).collect();
        let perms: Vec<Permutation> = (0..n)
            .permutations(n)
            .map(|p| Permutation::new(p).unwrap())
            .collect();
        for combo in (1..count).map(|_| perms.iter()).multi_cartesian_product() {
            let mut xs = vec![reps[0].clone()];
            xs.extend(
                combo
                    .iter()
                    .zip(&reps[1..])
                    .map(|(p, x)| x.permuted(p).unwrap()),
            );
            let sps: f64 = (0..count)
                .tuple_combinations()
                .map(|(i, j)| xs[i].inner(&xs[j]).unwrap())
                .sum();
            check(best.sps >= sps, || {
                format!("sample {t}: winner SPS {} < {sps}", best.sps)
            })?;
        }

        let oracle = DistanceOracle::exact().padded_for(&sample);
        let iam = iam_mean(&sample, t, &oracle).unwrap();
        let f = ssd(&iam.mean, &sample, &oracle).unwrap();
        check(f >= best.ssd - 1e-9, || {
            format!("sample {t}: IAM F {f} < brute-force F {}", best.ssd)
        })?;
    }
    Ok("50 samples".into())
}

/// Twenty datasets: every fourth one holds single-node graphs only.
fn equivalence_datasets() -> Vec<(Vec<AttributedGraph>, usize, u64)> {
    (0..20u64)
        .map(|i| {
            let k = [2, 3, 5][i as usize % 3];
            let sample = if i % 4 == 0 {
                let mut r = rng(2000 + i);
                (0..r.gen_range(20..=60))
                    .map(|j| {
                        let v = [r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0)];
                        AttributedGraph::single_node(format!("s{j}"), &v).unwrap()
                    })
                    .collect()
            } else {
                prototype_clusters(
                    &ClusterSpec {
                        clusters: k,
                        per_cluster: 60 / k,
                        max_order: 4,
                        space: AttributeSpace::new(2, 2),
                        spread: 3.0,
                        noise: 0.4,
                        edge_prob: 0.5,
                    },
                    3000 + i,
                )
            };
            (sample, k, i)
        })
        .collect()
}

fn elkan_equivalence(data: &[(Vec<AttributedGraph>, usize, u64)]) -> Outcome {
    let (mut std_total, mut elk_total) = (0u64, 0u64);
    for (d, (sample, k, seed)) in data.iter().enumerate() {
        check(sample.len() <= 60, || {
            format!("dataset {d} has {} graphs", sample.len())
        })?;
        let config = ClusterConfig::new(*k, Algorithm::Std).with_seed(*seed);
        let s = kmeans_std(sample, &config, &DistanceOracle::exact().padded_for(sample)).unwrap();
        let e = kmeans_elkan(sample, &config, &DistanceOracle::exact().padded_for(sample)).unwrap();
        check(s.membership_trace == e.membership_trace, || {
            format!("dataset {d}: membership traces differ")
        })?;
        check(s.membership == e.membership, || {
            format!("dataset {d}: final memberships differ")
        })?;
        check((s.objective - e.objective).abs() <= 1e-9, || {
            format!("dataset {d}: J {} vs {}", s.objective, e.objective)
        })?;
        let (sm, em) = (s.matchings.total(), e.matchings.total());
        check(em <= sm, || {
            format!("dataset {d}: elkan {em} > std {sm} matchings")
        })?;
        std_total += sm;
        elk_total += em;
    }
    Ok(format!(
        "20 datasets, matchings std {std_total} vs elkan {elk_total}"
    ))
}

fn pruning_payoff() -> Outcome {
    let mut worst = 0u64;
    for seed in 0..5 {
        let sample = two_scalar_blobs(20, seed);
        let config = ClusterConfig::new(2, Algorithm::Elkan).with_seed(seed);
        let e = kmeans_elkan(&sample, &config, &DistanceOracle::exact()).unwrap();
        let limit = 2 * 40 / 4;
        for (t, p) in e.matchings.per_iteration.iter().enumerate().skip(1) {
            worst = worst.max(p.assignment);
            check(p.assignment <= limit, || {
                format!(
                    "seed {seed}, iteration {}: {} assignment calls > {limit}",
                    t + 1,
                    p.assignment
                )
            })?;
        }
    }
    Ok(format!(
        "5 seeds, max assignment calls after iteration 1: {worst} of 80"
    ))
}

fn bound_soundness(data: &[(Vec<AttributedGraph>, usize, u64)]) -> Outcome {
    let mut comparisons = 0;
    for (d, (sample, k, seed)) in data.iter().enumerate() {
        let mut config = ClusterConfig::new(*k, Algorithm::Elkan).with_seed(*seed);
        config.verify = true;
        let e = kmeans_elkan(sample, &config, &DistanceOracle::exact().padded_for(sample)).unwrap();
        let v = e.verification.expect("verify mode reports");
        check(v.violations() == 0, || format!("dataset {d}: {v:?}"))?;
        comparisons += v.comparisons;
    }
    check(comparisons > 0, || "no comparisons were made".into())?;
    Ok(format!("{comparisons} comparisons, 0 violations"))
}

/// Textbook silhouette on scalars, written from the definition.
fn scalar_silhouette(values: &[f64], labels: &[usize], k: usize) -> (f64, Vec<f64>) {
    let s: Vec<f64> = (0..values.len())
        .map(|i| {
            let members = |c: usize| (0..values.len()).filter(move |&j| labels[j] == c);
            let own = labels[i];
            let size = members(own).count();
            if size == 1 {
                return 0.0;
            }
            let a = members(own)
                .filter(|&j| j != i)
                .map(|j| (values[i] - values[j]).abs())
                .sum::<f64>()
                / (size - 1) as f64;
            let mut b = f64::INFINITY;
            for c in (0..k).filter(|&c| c != own) {
                let m = members(c)
                    .map(|j| (values[i] - values[j]).abs())
                    .sum::<f64>()
                    / members(c).count() as f64;
                b = b.min(m);
            }
            if a.max(b) == 0.0 {
                0.0
            } else {
                (b - a) / a.max(b)
            }
        })
        .collect();
    let index = (0..k)
        .map(|c| {
            let v: Vec<f64> = (0..values.len())
                .filter(|&i| labels[i] == c)
                .map(|i| s[i])
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        })
        .sum::<f64>()
        / k as f64;
    (index, s)
}

fn silhouette_correctness() -> Outcome {
    let mut r = rng(1007);
    let mut worst = 0.0f64;
    for t in 0..100 {
        let k = r.gen_range(2..=5);
        let n = r.gen_range(k..=30);
        // small integer grid so that ties and zero distances occur
        let values: Vec<f64> = (0..n).map(|_| r.gen_range(-10..=10) as f64 / 2.0).collect();
        let mut labels: Vec<usize> = (0..n)
            .map(|i| if i < k { i } else { r.gen_range(0..k) })
            .collect();
        labels.shuffle(&mut r);
        let membership = MembershipMatrix::new(labels.clone(), k).unwrap();
        let dm = DistanceMatrix::from_fn(n, |i, j| (values[i] - values[j]).abs());
        let got = silhouette_index(&membership, &dm).unwrap();
        let (index, per_pattern) = scalar_silhouette(&values, &labels, k);
        worst = worst.max((got.index - index).abs());
        check((got.index - index).abs() <= 1e-12, || {
            format!("partition {t}: {} vs {index}", got.index)
        })?;
        for (i, (a, b)) in got.per_pattern.iter().zip(&per_pattern).enumerate() {
            check((a - b).abs() <= 1e-12, || {
                format!("partition {t}, pattern {i}: {a} vs {b}")
            })?;
        }
        let in_range = |v: f64| (-1.0..=1.0).contains(&v);
        check(
            in_range(got.index) && got.per_pattern.iter().all(|&v| in_range(v)),
            || format!("partition {t}: value outside [-1, 1]"),
        )?;
    }
    Ok(format!("100 partitions, max |diff| {worst:.3e}"))
}

fn manifest_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let sample = prototype_clusters(
        &ClusterSpec {
            clusters: 3,
            per_cluster: 10,
            max_order: 4,
            space: AttributeSpace::new(2, 2),
            spread: 3.0,
            noise: 0.4,
            edge_prob: 0.5,
        },
        8,
    );
    let data = dir.path().join("data.jsonl");
    save_dataset(&data, &sample).unwrap();
    let mut manifests = Vec::new();
    for (run, threads) in [(0, "4"), (1, "4"), (2, "1")] {
        let out = dir.path().join(format!("m{run}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_graphkm"))
            .args(["--threads", threads, "cluster"])
            .arg(&data)
            .args([
                "--k",
                "3",
                "--seed",
                "21",
                "--runs",
                "3",
                "--matcher",
                "exact",
                "-o",
            ])
            .arg(&out)
            .output()
            .unwrap();
        check(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })?;
        manifests.push(std::fs::read(&out).unwrap());
    }
    check(manifests.windows(2).all(|w| w[0] == w[1]), || {
        "manifests differ".into()
    })?;
    Ok(format!("3 runs, {} identical bytes", manifests[0].len()))
}

fn iam_single_node() -> Outcome {
    let mut r = rng(1009);
    let mut worst = 0.0f64;
    for t in 0..100 {
        let n = r.gen_range(1..=20);
        let dim = r.gen_range(1..=3);
        let values: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| r.gen_range(-100.0..100.0)).collect())
            .collect();
        let sample: Vec<_> = values
            .iter()
            .enumerate()
            .map(|(i, v)| AttributedGraph::single_node(format!("s{i}"), v).unwrap())
            .collect();
        let want: Vec<f64> = (0..dim)
            .map(|c| values.iter().map(|v| v[c]).sum::<f64>() / n as f64)
            .collect();
        for seed in [0, 1, 7, 12345] {
            let m = iam_mean(&sample, seed, &DistanceOracle::exact())
                .unwrap()
                .mean;
            check(m.order() == 1, || {
                format!("sample {t}: mean has order {}", m.order())
            })?;
            for (c, w) in want.iter().enumerate() {
                let diff = (m.node_attr(0)[c] - w).abs();
                worst = worst.max(diff);
                check(diff <= 1e-12, || {
                    format!("sample {t}, seed {seed}: coordinate {c} off by {diff}")
                })?;
            }
        }
    }
    Ok(format!("100 samples x 4 seeds, max |diff| {worst:.3e}"))
}

fn main() -> ExitCode {
    let data = equivalence_datasets();
    let criteria: Vec<Criterion> = vec![
        ("metric properties", Box::new(metric_suite)),
        (
            "exact matcher vs enumeration",
            Box::new(exact_vs_enumeration),
        ),
        ("mean identities", Box::new(mean_theorem_suite)),
        ("elkan equivalence", Box::new(|| elkan_equivalence(&data))),
        ("pruning payoff", Box::new(pruning_payoff)),
        ("bound soundness", Box::new(|| bound_soundness(&data))),
        ("silhouette correctness", Box::new(silhouette_correctness)),
        ("manifest determinism", Box::new(manifest_determinism)),
        ("single-node IAM", Box::new(iam_single_node)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({detail}; {secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({why}; {secs:.1}s)", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
