//! Seeded synthetic graph samples.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{AttributeSpace, AttributedGraph, GraphBuilder};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random graph with node attributes uniform in `[-scale, scale]`. Each
/// vertex pair is an edge with probability `edge_prob`; the first edge
/// coordinate is the presence flag `1.0`.
pub fn random_graph<R: Rng>(
    rng: &mut R,
    id: impl Into<String>,
    order: usize,
    space: AttributeSpace,
    edge_prob: f64,
    scale: f64,
) -> AttributedGraph {
    let mut b = GraphBuilder::new(space).id(id);
    for _ in 0..order {
        b.add_node(
            (0..space.node_dim)
                .map(|_| rng.gen_range(-scale..=scale))
                .collect::<Vec<_>>(),
        );
    }
    if space.edge_dim > 0 {
        for i in 0..order {
            for j in i + 1..order {
                if rng.gen_bool(edge_prob) {
                    let mut attr = vec![1.0];
                    attr.extend((1..space.edge_dim).map(|_| rng.gen_range(-scale..=scale)));
                    b.add_edge(i, j, attr);
                }
            }
        }
    }
    b.build().expect("generated graph is valid")
}

/// Like [`random_graph`] but every attribute is a multiple of `1/4` in
/// `[-2, 2]`, so sums and inner products of such graphs are exact in `f64`.
pub fn dyadic_graph<R: Rng>(
    rng: &mut R,
    id: impl Into<String>,
    order: usize,
    space: AttributeSpace,
    edge_prob: f64,
) -> AttributedGraph {
    let q = |rng: &mut R| rng.gen_range(-8i32..=8) as f64 / 4.0;
    let mut b = GraphBuilder::new(space).id(id);
    for _ in 0..order {
        let attr: Vec<f64> = (0..space.node_dim).map(|_| q(rng)).collect();
        b.add_node(attr);
    }
    if space.edge_dim > 0 {
        for i in 0..order {
            for j in i + 1..order {
                if rng.gen_bool(edge_prob) {
                    let mut attr = vec![1.0];
                    attr.extend((1..space.edge_dim).map(|_| q(rng)));
                    b.add_edge(i, j, attr);
                }
            }
        }
    }
    b.build().expect("generated graph is valid")
}

/// Copy of `g` with its vertices shuffled.
pub fn shuffled<R: Rng>(
    rng: &mut R,
    g: &AttributedGraph,
    id: impl Into<String>,
) -> AttributedGraph {
    let mut p: Vec<usize> = (0..g.order()).collect();
    p.shuffle(rng);
    let perm = crate::graph::Permutation::new(p).expect("shuffle is a bijection");
    let rep = g.representation().permuted(&perm).expect("matching order");
    AttributedGraph::from_representation(rep, g.space(), id)
        .expect("permutation preserves structure")
        .with_label(g.label().map(str::to_owned))
}

/// Single-node graphs: `per_side` values within `±0.1` of 0 (label `low`)
/// followed by `per_side` values within `±0.1` of 100 (label `high`).
pub fn two_scalar_blobs(per_side: usize, seed: u64) -> Vec<AttributedGraph> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(2 * per_side);
    for (centre, label) in [(0.0, "low"), (100.0, "high")] {
        for _ in 0..per_side {
            let v = centre + rng.gen_range(-0.1..=0.1);
            let i = out.len();
            out.push(
                AttributedGraph::single_node(format!("s{i}"), &[v])
                    .expect("valid")
                    .with_label(Some(label.to_owned())),
            );
        }
    }
    out
}

/// Clusters of noisy, vertex-shuffled copies of random prototype graphs.
///
/// Prototype `c` has order in `1..=max_order` and node attributes around a
/// centre drawn in `[-spread, spread]^d_v`; members perturb every nonzero
/// attribute by up to `noise`. Members are labelled `c<index>`.
pub struct ClusterSpec {
    pub clusters: usize,
    pub per_cluster: usize,
    pub max_order: usize,
    pub space: AttributeSpace,
    pub spread: f64,
    pub noise: f64,
    pub edge_prob: f64,
}

pub fn prototype_clusters(spec: &ClusterSpec, seed: u64) -> Vec<AttributedGraph> {
    let mut rng = rng(seed);
    let mut out = Vec::new();
    let mut protos = Vec::new();
    for c in 0..spec.clusters {
        let order = rng.gen_range(1..=spec.max_order);
        let centre: Vec<f64> = (0..spec.space.node_dim)
            .map(|_| rng.gen_range(-spec.spread..=spec.spread))
            .collect();
        let base = random_graph(
            &mut rng,
            format!("proto{c}"),
            order,
            spec.space,
            spec.edge_prob,
            1.0,
        );
        protos.push((base, centre));
    }
    for _ in 0..spec.per_cluster {
        for (c, (base, centre)) in protos.iter().enumerate() {
            let mut b = GraphBuilder::new(spec.space)
                .id(format!("g{}", out.len()))
                .label(format!("c{c}"));
            for i in 0..base.order() {
                let attr: Vec<f64> = base
                    .node_attr(i)
                    .iter()
                    .zip(centre)
                    .map(|(v, m)| v + m + rng.gen_range(-spec.noise..=spec.noise))
                    .collect();
                b.add_node(attr);
            }
            for (i, j, attr) in base.edges() {
                let mut a = attr.to_vec();
                for v in a.iter_mut().skip(1) {
                    *v += rng.gen_range(-spec.noise..=spec.noise);
                }
                b.add_edge(i, j, a);
            }
            let g = b.build().expect("valid");
            let id = g.id().to_owned();
            out.push(shuffled(&mut rng, &g, id));
        }
    }
    out
}
