//! Attributed graphs and their matrix/vector representations.
//!
//! A graph of order `m` over an attribute space with node dimension `d_v`
//! and edge dimension `d_e` is stored as an `m x m` grid of cells, each a
//! vector of dimension `d = d_v + d_e`. Diagonal cells carry the vertex
//! attribute in the first `d_v` coordinates; off-diagonal cells carry the
//! edge attribute in the last `d_e` coordinates, or zero when there is no
//! edge. Flattening the grid column by column gives the vector
//! representation on which all Euclidean geometry is computed.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The unified Euclidean attribute space. Node and edge attributes occupy
/// disjoint coordinate blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeSpace {
    pub node_dim: usize,
    pub edge_dim: usize,
}

impl AttributeSpace {
    pub fn new(node_dim: usize, edge_dim: usize) -> Self {
        Self { node_dim, edge_dim }
    }

    /// Dimension of a single cell.
    pub fn dim(&self) -> usize {
        self.node_dim + self.edge_dim
    }

    fn check(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::Dimension("attribute space has dimension 0".into()));
        }
        Ok(())
    }
}

/// A vertex permutation. Entry `p[i]` names the vertex of the permuted
/// operand that lands on position `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &v in &map {
            if v >= map.len() {
                return Err(Error::InvalidPermutation(format!(
                    "image {v} out of range for {} elements",
                    map.len()
                )));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidPermutation(format!("image {v} repeated")));
            }
        }
        Ok(Self(map))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v] = i;
        }
        Self(inv)
    }

    /// Composition such that permuting by `self` and then by `other` equals
    /// permuting once by `self.then(other)`.
    pub fn then(&self, other: &Permutation) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::InvalidPermutation(
                "length mismatch in composition".into(),
            ));
        }
        Ok(Self(other.0.iter().map(|&v| self.0[v]).collect()))
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

impl std::ops::Index<usize> for Permutation {
    type Output = usize;

    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

/// Dense `n x n` grid of `d`-dimensional cells, laid out column-major over
/// cells so that the backing slice is the vector representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl Representation {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            data: vec![0.0; n * n * d],
        }
    }

    pub fn from_raw(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n * d {
            return Err(Error::Dimension(format!(
                "expected {} values for n = {n}, d = {d}, got {}",
                n * n * d,
                data.len()
            )));
        }
        Ok(Self { n, d, data })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        (j * self.n + i) * self.d
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> &[f64] {
        let o = self.offset(i, j);
        &self.data[o..o + self.d]
    }

    #[inline]
    pub fn cell_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let o = self.offset(i, j);
        &mut self.data[o..o + self.d]
    }

    /// Copy into a larger grid; the added rows and columns are zero.
    pub fn padded(&self, n: usize) -> Result<Self> {
        if n < self.n {
            return Err(Error::InvalidPadding { order: self.n, n });
        }
        if n == self.n {
            return Ok(self.clone());
        }
        let mut out = Self::zeros(n, self.d);
        for j in 0..self.n {
            for i in 0..self.n {
                out.cell_mut(i, j).copy_from_slice(self.cell(i, j));
            }
        }
        Ok(out)
    }

    pub fn permuted(&self, p: &Permutation) -> Result<Self> {
        if p.len() != self.n {
            return Err(Error::InvalidPermutation(format!(
                "permutation of {} elements applied to order {}",
                p.len(),
                self.n
            )));
        }
        let mut out = Self::zeros(self.n, self.d);
        for j in 0..self.n {
            for i in 0..self.n {
                out.cell_mut(i, j).copy_from_slice(self.cell(p[i], p[j]));
            }
        }
        Ok(out)
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.d != other.d {
            return Err(Error::Dimension(format!(
                "representations of shape ({}, {}) and ({}, {})",
                self.n, self.d, other.n, other.d
            )));
        }
        Ok(())
    }

    pub fn squared_distance(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.squared_distance(other).map(f64::sqrt)
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum()
    }

    /// In-place convex combination `self = a * self + b * other`.
    pub fn blend(&mut self, a: f64, other: &Self, b: f64) -> Result<()> {
        self.check_shape(other)?;
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s = a * *s + b * o;
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.cell(i, j) == self.cell(j, i)))
    }

    /// True when vertex `i` has zero attribute and no incident nonzero cell.
    pub fn is_null_vertex(&self, i: usize) -> bool {
        (0..self.n).all(|j| self.cell(i, j).iter().all(|&v| v == 0.0))
    }

    /// Squared norm of row `i` (vertex attribute plus incident cells).
    pub fn row_squared_norm(&self, i: usize) -> f64 {
        (0..self.n)
            .map(|j| self.cell(i, j).iter().map(|v| v * v).sum::<f64>())
            .sum()
    }
}

/// Pads `g` to order `n` in the space `space`.
pub fn embed(g: &AttributedGraph, space: AttributeSpace, n: usize) -> Result<Representation> {
    if g.space != space {
        return Err(Error::Dimension(format!(
            "graph `{}` lives in ({}, {}), requested ({}, {})",
            g.id, g.space.node_dim, g.space.edge_dim, space.node_dim, space.edge_dim
        )));
    }
    g.grid.padded(n)
}

pub fn euclidean_distance(x: &Representation, y: &Representation) -> Result<f64> {
    x.distance(y)
}

pub fn permute(x: &Representation, p: &Permutation) -> Result<Representation> {
    x.permuted(p)
}

/// An undirected attributed graph.
#[derive(Clone)]
pub struct AttributedGraph {
    id: String,
    label: Option<String>,
    space: AttributeSpace,
    grid: Representation,
    edge_count: usize,
    fingerprint: u64,
}

impl fmt::Debug for AttributedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AttributedGraph")
            .field("id", &self.id)
            .field("label", &self.label)
            .field("order", &self.order())
            .field("edges", &self.edge_count)
            .finish()
    }
}

impl PartialEq for AttributedGraph {
    /// Attribute-wise equality of the stored grids plus identifiers.
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.label == other.label
            && self.space == other.space
            && self.grid == other.grid
    }
}

impl AttributedGraph {
    pub fn builder(space: AttributeSpace) -> GraphBuilder {
        GraphBuilder::new(space)
    }

    /// A graph with one vertex and no edges.
    pub fn single_node(id: impl Into<String>, attr: &[f64]) -> Result<Self> {
        let mut b = GraphBuilder::new(AttributeSpace::new(attr.len(), 0)).id(id);
        b.add_node(attr.to_vec());
        b.build()
    }

    /// Wraps a dense grid. Every nonzero off-diagonal cell becomes an edge.
    pub fn from_representation(
        rep: Representation,
        space: AttributeSpace,
        id: impl Into<String>,
    ) -> Result<Self> {
        let id = id.into();
        space.check()?;
        if rep.dim() != space.dim() {
            return Err(Error::Dimension(format!(
                "grid cells have dimension {}, space expects {}",
                rep.dim(),
                space.dim()
            )));
        }
        if rep.order() == 0 {
            return Err(Error::InvalidGraph("order must be at least 1".into()));
        }
        if !rep.is_symmetric() {
            return Err(Error::InvalidGraph(format!(
                "grid of `{id}` is not symmetric"
            )));
        }
        let mut edge_count = 0;
        for j in 0..rep.order() {
            for i in 0..rep.order() {
                let cell = rep.cell(i, j);
                if i == j {
                    if cell[space.node_dim..].iter().any(|&v| v != 0.0) {
                        return Err(Error::InvalidGraph(format!(
                            "vertex {i} of `{id}` has values in the edge block"
                        )));
                    }
                } else {
                    if cell[..space.node_dim].iter().any(|&v| v != 0.0) {
                        return Err(Error::InvalidGraph(format!(
                            "cell ({i}, {j}) of `{id}` has values in the node block"
                        )));
                    }
                    if i < j && cell.iter().any(|&v| v != 0.0) {
                        edge_count += 1;
                    }
                }
                if cell.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidGraph(format!(
                        "non-finite attribute in `{id}`"
                    )));
                }
            }
        }
        let fingerprint = fingerprint(&space, &rep);
        Ok(Self {
            id,
            label: None,
            space,
            grid: rep,
            edge_count,
            fingerprint,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_label(mut self, label: Option<String>) -> Self {
        self.label = label;
        self
    }

    pub fn order(&self) -> usize {
        self.grid.order()
    }

    pub fn space(&self) -> AttributeSpace {
        self.space
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn representation(&self) -> &Representation {
        &self.grid
    }

    /// Content hash of the attribute grid (identifiers excluded).
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn node_attr(&self, i: usize) -> &[f64] {
        &self.grid.cell(i, i)[..self.space.node_dim]
    }

    pub fn edge_attr(&self, i: usize, j: usize) -> Option<&[f64]> {
        if i == j {
            return None;
        }
        let attr = &self.grid.cell(i, j)[self.space.node_dim..];
        attr.iter().any(|&v| v != 0.0).then_some(attr)
    }

    /// Edges `(i, j, attr)` with `i < j`, ordered by `(i, j)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &[f64])> + '_ {
        let n = self.order();
        (0..n).flat_map(move |i| {
            (i + 1..n).filter_map(move |j| self.edge_attr(i, j).map(|a| (i, j, a)))
        })
    }

    /// Drops trailing vertices that carry no attribute and no edge.
    /// At least one vertex is kept.
    pub fn trimmed(&self) -> Self {
        let mut m = self.order();
        while m > 1 && self.grid.is_null_vertex(m - 1) {
            m -= 1;
        }
        if m == self.order() {
            return self.clone();
        }
        let d = self.space.dim();
        let mut rep = Representation::zeros(m, d);
        for j in 0..m {
            for i in 0..m {
                rep.cell_mut(i, j).copy_from_slice(self.grid.cell(i, j));
            }
        }
        let fingerprint = fingerprint(&self.space, &rep);
        Self {
            id: self.id.clone(),
            label: self.label.clone(),
            space: self.space,
            grid: rep,
            edge_count: self.edge_count,
            fingerprint,
        }
    }

    /// Copy with every attribute rounded to `digits` decimal places.
    /// Cells that round to zero disappear.
    pub fn rounded(&self, digits: u32) -> Self {
        let scale = 10f64.powi(digits as i32);
        let data = self
            .grid
            .as_slice()
            .iter()
            .map(|v| {
                let r = (v * scale).round() / scale;
                if r == 0.0 {
                    0.0
                } else {
                    r
                }
            })
            .collect();
        let rep =
            Representation::from_raw(self.order(), self.space.dim(), data).expect("same shape");
        Self::from_representation(rep, self.space, self.id.clone())
            .expect("rounding preserves structure")
            .with_label(self.label.clone())
    }
}

fn fingerprint(space: &AttributeSpace, rep: &Representation) -> u64 {
    let mut h = DefaultHasher::new();
    space.hash(&mut h);
    rep.order().hash(&mut h);
    for v in rep.as_slice() {
        // +0.0 and -0.0 hash alike
        let v = if *v == 0.0 { 0.0f64 } else { *v };
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Incremental construction of an [`AttributedGraph`].
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    space: AttributeSpace,
    id: String,
    label: Option<String>,
    nodes: Vec<Vec<f64>>,
    edges: Vec<(usize, usize, Vec<f64>)>,
}

impl GraphBuilder {
    pub fn new(space: AttributeSpace) -> Self {
        Self {
            space,
            id: String::new(),
            label: None,
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn node(mut self, attr: impl Into<Vec<f64>>) -> Self {
        self.add_node(attr);
        self
    }

    pub fn edge(mut self, i: usize, j: usize, attr: impl Into<Vec<f64>>) -> Self {
        self.add_edge(i, j, attr);
        self
    }

    pub fn add_node(&mut self, attr: impl Into<Vec<f64>>) -> usize {
        self.nodes.push(attr.into());
        self.nodes.len() - 1
    }

    pub fn add_edge(&mut self, i: usize, j: usize, attr: impl Into<Vec<f64>>) {
        self.edges.push((i, j, attr.into()));
    }

    pub fn build(self) -> Result<AttributedGraph> {
        let Self {
            space,
            id,
            label,
            nodes,
            edges,
        } = self;
        space.check()?;
        let n = nodes.len();
        if n == 0 {
            return Err(Error::InvalidGraph(format!("graph `{id}` has no vertices")));
        }
        let mut rep = Representation::zeros(n, space.dim());
        for (i, attr) in nodes.iter().enumerate() {
            if attr.len() != space.node_dim {
                return Err(Error::Dimension(format!(
                    "vertex {i} of `{id}` has {} attributes, expected {}",
                    attr.len(),
                    space.node_dim
                )));
            }
            rep.cell_mut(i, i)[..space.node_dim].copy_from_slice(attr);
        }
        for (i, j, attr) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) of `{id}` out of range for order {n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!(
                    "self-loop on vertex {i} of `{id}`"
                )));
            }
            if attr.len() != space.edge_dim {
                return Err(Error::Dimension(format!(
                    "edge ({i}, {j}) of `{id}` has {} attributes, expected {}",
                    attr.len(),
                    space.edge_dim
                )));
            }
            if attr.iter().all(|&v| v == 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) of `{id}` has a zero attribute"
                )));
            }
            if rep.cell(i, j)[space.node_dim..].iter().any(|&v| v != 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({i}, {j}) in `{id}`"
                )));
            }
            rep.cell_mut(i, j)[space.node_dim..].copy_from_slice(&attr);
            rep.cell_mut(j, i)[space.node_dim..].copy_from_slice(&attr);
        }
        Ok(AttributedGraph::from_representation(rep, space, id)?.with_label(label))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node() -> AttributedGraph {
        AttributedGraph::builder(AttributeSpace::new(1, 1))
            .id("g")
            .node([1.0])
            .node([2.0])
            .edge(0, 1, [1.0])
            .build()
            .unwrap()
    }

    #[test]
    fn embed_single_node() {
        let g = AttributedGraph::builder(AttributeSpace::new(2, 0))
            .node([1.0, 0.0])
            .build()
            .unwrap();
        let r = embed(&g, g.space(), 1).unwrap();
        assert_eq!(r.as_slice(), &[1.0, 0.0]);

        let r = embed(&g, g.space(), 2).unwrap();
        assert_eq!(r.cell(0, 0), &[1.0, 0.0]);
        for (i, j) in [(0, 1), (1, 0), (1, 1)] {
            assert_eq!(r.cell(i, j), &[0.0, 0.0]);
        }
    }

    #[test]
    fn embed_two_node_blocks() {
        let g = two_node();
        let r = embed(&g, g.space(), 2).unwrap();
        // d = d_v + d_e = 2; node block first, edge block last
        assert_eq!(r.cell(0, 0), &[1.0, 0.0]);
        assert_eq!(r.cell(1, 1), &[2.0, 0.0]);
        assert_eq!(r.cell(0, 1), &[0.0, 1.0]);
        assert_eq!(r.cell(1, 0), r.cell(0, 1));
        // column-major over cells
        assert_eq!(r.as_slice(), &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 2.0, 0.0]);
    }

    #[test]
    fn embed_rejects_short_padding() {
        let g = two_node();
        assert!(matches!(
            embed(&g, g.space(), 1),
            Err(Error::InvalidPadding { order: 2, n: 1 })
        ));
        assert!(matches!(
            embed(&g, AttributeSpace::new(2, 1), 2),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn distance_examples() {
        let a = AttributedGraph::single_node("a", &[1.0, 0.0]).unwrap();
        let b = AttributedGraph::single_node("b", &[0.0, 1.0]).unwrap();
        let (x, y) = (a.representation(), b.representation());
        assert_eq!(euclidean_distance(x, x).unwrap(), 0.0);
        assert!((euclidean_distance(x, y).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let z = Representation::zeros(2, 2);
        assert!(matches!(
            euclidean_distance(x, &z),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn permute_swap() {
        let g = two_node();
        let r = embed(&g, g.space(), 2).unwrap();
        let swap = Permutation::new(vec![1, 0]).unwrap();
        let s = permute(&r, &swap).unwrap();
        assert_eq!(s.cell(0, 0), &[2.0, 0.0]);
        assert_eq!(s.cell(1, 1), &[1.0, 0.0]);
        assert_eq!(s.cell(0, 1), &[0.0, 1.0]);
        assert_eq!(permute(&s, &swap.inverse()).unwrap(), r);
        assert_eq!(permute(&r, &Permutation::identity(2)).unwrap(), r);
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert!(p.then(&p.inverse()).unwrap().is_identity());
        let r = Representation::zeros(2, 1);
        assert!(matches!(r.permuted(&p), Err(Error::InvalidPermutation(_))));
    }

    #[test]
    fn builder_invariants() {
        let s = AttributeSpace::new(1, 1);
        let base = || AttributedGraph::builder(s).node([0.0]).node([0.0]);
        assert!(base().edge(0, 0, [1.0]).build().is_err());
        assert!(base().edge(0, 2, [1.0]).build().is_err());
        assert!(base().edge(0, 1, [0.0]).build().is_err());
        assert!(base().edge(0, 1, [1.0]).edge(1, 0, [1.0]).build().is_err());
        assert!(base().edge(0, 1, [1.0, 2.0]).build().is_err());
        assert!(AttributedGraph::builder(s).build().is_err());
        let g = base().edge(1, 0, [3.0]).build().unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, &[3.0][..])]);
    }

    #[test]
    fn trimming_drops_trailing_null_vertices() {
        let s = AttributeSpace::new(1, 1);
        let g = AttributedGraph::builder(s)
            .node([1.0])
            .node([0.0])
            .node([0.0])
            .edge(0, 1, [1.0])
            .build()
            .unwrap();
        let t = g.trimmed();
        assert_eq!(t.order(), 2);
        assert_eq!(t.edge_count(), 1);
        let z = AttributedGraph::builder(s)
            .node([0.0])
            .node([0.0])
            .build()
            .unwrap();
        assert_eq!(z.trimmed().order(), 1);
    }

    #[test]
    fn from_representation_checks_blocks() {
        let s = AttributeSpace::new(1, 1);
        let mut r = Representation::zeros(2, 2);
        r.cell_mut(0, 0)[1] = 1.0;
        assert!(AttributedGraph::from_representation(r, s, "x").is_err());
        let mut r = Representation::zeros(2, 2);
        r.cell_mut(0, 1)[1] = 1.0;
        assert!(AttributedGraph::from_representation(r.clone(), s, "x").is_err());
        r.cell_mut(1, 0)[1] = 1.0;
        assert_eq!(
            AttributedGraph::from_representation(r, s, "x")
                .unwrap()
                .edge_count(),
            1
        );
    }
}
