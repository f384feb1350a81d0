use graphkm::graph::{embed, AttributeSpace, AttributedGraph, Permutation, Representation};
use graphkm::matcher::{exact, DistanceOracle, ExactParams};
use graphkm::mean::{brute_force_mean, iam_mean, ssd};
use graphkm::synth::{dyadic_graph, random_graph, rng, shuffled};
use itertools::Itertools;
use proptest::prelude::*;
use rand::Rng;

fn exact_d(x: &AttributedGraph, y: &AttributedGraph, n: usize) -> f64 {
    exact::align_padded(x, y, &ExactParams::default(), n)
        .unwrap()
        .distance
}

#[test]
fn permuted_pair_has_zero_ssd_mean() {
    let space = AttributeSpace::new(2, 1);
    let mut r = rng(1);
    let x = random_graph(&mut r, "x", 3, space, 0.7, 1.0);
    let y = shuffled(&mut r, &x, "y");
    let sample = [x.clone(), y];
    for seed in 0..4 {
        let oracle = DistanceOracle::exact();
        let mut m = iam_mean(&sample, seed, &oracle).unwrap();
        assert_eq!(oracle.calls(), 1);
        assert!(m.evaluate_ssd(&sample, &oracle).unwrap() < 1e-24);
        assert!(exact_d(&m.mean, &x, 0) < 1e-12);
    }
    let b = brute_force_mean(&sample).unwrap();
    assert!(b.ssd < 1e-24);
    assert!(exact_d(&b.mean, &x, 0) < 1e-12);
    assert_eq!(b.combinations, 6);
}

#[test]
fn multiple_alignment_properties() {
    let space = AttributeSpace::new(1, 1);
    let mut r = rng(2);
    for t in 0..25 {
        let count = r.gen_range(2..=4);
        let sample: Vec<_> = (0..count)
            .map(|i| {
                let order = r.gen_range(1..=3);
                dyadic_graph(&mut r, format!("g{i}"), order, space, 0.5)
            })
            .collect();
        let n = sample.iter().map(|g| g.order()).max().unwrap();
        let best = brute_force_mean(&sample).unwrap();

        // the mean is the average of its own alignment
        let avg = best.alignment.mean();
        assert!(avg.distance(best.mean.representation()).unwrap() <= 1e-12);
        // and every member of the alignment is optimally aligned to it
        for (g, x) in sample.iter().zip(&best.alignment.representations) {
            let d = x.distance(&embed(&best.mean, space, n).unwrap()).unwrap();
            assert!((d - exact_d(g, &best.mean, n)).abs() <= 1e-9, "sample {t}");
        }

        // independent enumeration: no combination has a larger SPS
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
                    .map(|(p, r)| r.permuted(p).unwrap()),
            );
            let sps: f64 = (0..count)
                .tuple_combinations()
                .map(|(i, j)| xs[i].inner(&xs[j]).unwrap())
                .sum();
            assert!(best.sps >= sps, "sample {t}: {} < {sps}", best.sps);
        }

        let oracle = DistanceOracle::exact().padded_for(&sample);
        let iam = iam_mean(&sample, t, &oracle).unwrap();
        assert!(ssd(&iam.mean, &sample, &oracle).unwrap() >= best.ssd - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn single_node_iam_is_arithmetic_mean(
        values in prop::collection::vec(-100.0f64..100.0, 1..12),
        seed in any::<u64>(),
    ) {
        let sample: Vec<_> = values
            .iter()
            .enumerate()
            .map(|(i, v)| AttributedGraph::single_node(format!("s{i}"), &[*v, -*v]).unwrap())
            .collect();
        let m = iam_mean(&sample, seed, &DistanceOracle::exact()).unwrap();
        let want = values.iter().sum::<f64>() / values.len() as f64;
        prop_assert!((m.mean.node_attr(0)[0] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        prop_assert!((m.mean.node_attr(0)[1] + want).abs() <= 1e-12 * (1.0 + want.abs()));
    }
}
