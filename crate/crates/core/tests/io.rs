use graphkm::clustering::{best_of_runs, Algorithm, ClusterConfig, EmptyClusterPolicy};
use graphkm::evaluation::{cluster_error_recomputed, evaluate, LabelMapping, PairwiseDistances};
use graphkm::io::manifest::{ConfigEcho, DatasetInfo};
use graphkm::io::{
    load_dataset, load_manifest, save_dataset, save_manifest, RunManifest, Transform,
};
use graphkm::synth::{random_graph, rng, two_scalar_blobs};
use graphkm::{AttributeSpace, DistanceOracle, Matcher};
use proptest::prelude::*;
use tempfile::TempDir;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn dataset_round_trip(seed in any::<u64>(), count in 1usize..6, scale in 1e-6f64..1e6) {
        let space = AttributeSpace::new(2, 3);
        let mut r = rng(seed);
        let graphs: Vec<_> = (0..count)
            .map(|i| {
                let order = 1 + (seed as usize + i) % 5;
                random_graph(&mut r, format!("g{i}"), order, space, 0.5, scale)
                    .with_label(Some(format!("c{}", i % 2)))
            })
            .collect();
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("d.jsonl");
        save_dataset(&path, &graphs).unwrap();
        let back = load_dataset(&path, &Transform::all()).unwrap();
        prop_assert_eq!(back.space, space);
        prop_assert_eq!(&back.graphs, &graphs);
        for (a, b) in back.graphs.iter().zip(&graphs) {
            prop_assert_eq!(a.fingerprint(), b.fingerprint());
        }
    }
}

fn manifest_for(algorithm: Algorithm, dir: &TempDir) -> (RunManifest, f64) {
    let graphs = two_scalar_blobs(20, 8);
    let path = dir.path().join("blobs.jsonl");
    save_dataset(&path, &graphs).unwrap();
    let data = load_dataset(&path, &Transform::all()).unwrap();
    let oracle = DistanceOracle::exact().padded_for(&data.graphs);
    let config = ClusterConfig::new(2, algorithm).with_seed(1);
    let (best, index, all) = best_of_runs(&data.graphs, &config, &oracle, 2).unwrap();
    let report = evaluate(
        &data.graphs,
        &best,
        &oracle,
        LabelMapping::Majority,
        PairwiseDistances::Skip,
    )
    .unwrap();
    let recomputed =
        cluster_error_recomputed(&data.graphs, &best.centroids, &best.membership, &oracle).unwrap();
    let echo = ConfigEcho {
        k: 2,
        algorithm,
        matcher: Matcher::exact(),
        padding: oracle.padding(),
        memo: false,
        seed: 1,
        runs: 2,
        max_iters: config.max_iters,
        no_improve_limit: config.no_improve_limit,
        empty_policy: EmptyClusterPolicy::RepairFarthest,
        verify: false,
        label_mapping: LabelMapping::Majority,
    };
    let info = DatasetInfo::new(
        data.checksum.clone(),
        data.graphs.len(),
        data.space,
        data.max_order(),
    );
    (
        RunManifest::new(info, echo, &best, index, &all, report),
        recomputed,
    )
}

#[test]
fn manifest_round_trip_and_speedup() {
    let dir = TempDir::new().unwrap();
    let (elk, recomputed) = manifest_for(Algorithm::Elkan, &dir);
    let (std, _) = manifest_for(Algorithm::Std, &dir);
    assert!((elk.report.error - recomputed).abs() <= 1e-9);
    assert_eq!(elk.report.accuracy, Some(1.0));

    let path = dir.path().join("elk.json");
    save_manifest(&elk, &path).unwrap();
    let back = load_manifest(&path).unwrap();
    assert_eq!(back, elk);

    let sp = elk.speedup_over(&std);
    let want = std.run.matchings.total() as f64 / elk.run.matchings.total() as f64;
    assert_eq!(sp.total, want);
    assert!(sp.total > 1.0);
    assert_eq!(elk.config.cluster_config().algorithm, Algorithm::Elkan);
}

#[test]
fn rejects_foreign_manifest() {
    let dir = TempDir::new().unwrap();
    let (mut m, _) = manifest_for(Algorithm::Std, &dir);
    m.format = "something-else".into();
    let path = dir.path().join("m.json");
    save_manifest(&m, &path).unwrap();
    assert!(matches!(
        load_manifest(&path),
        Err(graphkm::Error::Schema(_))
    ));
}
