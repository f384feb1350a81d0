//! Graph distance `D(X, Y)`: the minimum Euclidean distance between the
//! vector representations of two graphs over all vertex permutations.
//!
//! Every distance that feeds a clustering run goes through a
//! [`DistanceOracle`], which counts evaluations. Counts, not wall-clock
//! time, are the speed measure reported throughout the crate.

pub mod exact;
pub mod ga;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, Permutation, Representation};

pub use exact::{ExactParams, LowerBound};
pub use ga::GaParams;

/// An alignment of `y` onto `x`: vertex `i` of `x` is matched with vertex
/// `permutation[i]` of `y`, both padded to the order of the permutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub permutation: Permutation,
    pub distance: f64,
    pub exact: bool,
}

impl Alignment {
    /// Padded order the permutation acts on.
    pub fn order(&self) -> usize {
        self.permutation.len()
    }

    /// The alignment of `x` onto `y` with the same distance.
    pub fn reversed(&self) -> Self {
        Self {
            permutation: self.permutation.inverse(),
            distance: self.distance,
            exact: self.exact,
        }
    }
}

/// Pads both graphs to `max(padding, order(x), order(y))`.
pub(crate) fn padded_pair(
    x: &AttributedGraph,
    y: &AttributedGraph,
    padding: usize,
) -> Result<(Representation, Representation)> {
    if x.space() != y.space() {
        return Err(Error::Dimension(format!(
            "graphs `{}` and `{}` have incompatible attribute spaces",
            x.id(),
            y.id()
        )));
    }
    let n = x.order().max(y.order()).max(padding);
    Ok((x.representation().padded(n)?, y.representation().padded(n)?))
}

/// Recomputes the distance of a given alignment from scratch, padding both
/// graphs to the order of the permutation.
pub fn induced_distance(
    x: &AttributedGraph,
    y: &AttributedGraph,
    permutation: &Permutation,
) -> Result<f64> {
    let (xr, yr) = padded_pair(x, y, permutation.len())?;
    xr.distance(&yr.permuted(permutation)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Matcher {
    Exact(ExactParams),
    GraduatedAssignment(GaParams),
}

impl Matcher {
    pub fn exact() -> Self {
        Matcher::Exact(ExactParams::default())
    }

    pub fn graduated_assignment() -> Self {
        Matcher::GraduatedAssignment(GaParams::default())
    }

    /// Exact search for small graphs, graduated assignment above
    /// `exact_max_order`.
    pub fn auto(max_order: usize, exact_max_order: usize) -> Self {
        if max_order <= exact_max_order {
            Matcher::Exact(ExactParams {
                max_order: Some(exact_max_order),
                ..ExactParams::default()
            })
        } else {
            Matcher::graduated_assignment()
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Matcher::Exact(_))
    }

    /// Uncounted alignment at common order `max(padding, order(x), order(y))`.
    pub fn align(
        &self,
        x: &AttributedGraph,
        y: &AttributedGraph,
        padding: usize,
    ) -> Result<Alignment> {
        match self {
            Matcher::Exact(p) => exact::align_padded(x, y, p, padding),
            Matcher::GraduatedAssignment(p) => ga::align_with_retry(x, y, p, padding),
        }
    }
}

/// Counting front end for a [`Matcher`].
///
/// `D` is a metric only when every pair is compared at one common order,
/// so the oracle carries a padding order (normally the largest order in
/// the dataset); a pair larger than it is compared at its own larger order.
///
/// `calls` increases by one per distance actually computed; memo hits are
/// tallied separately. The memo is keyed by the unordered pair of graph
/// content fingerprints and keeps the first stored result.
#[derive(Debug)]
pub struct DistanceOracle {
    matcher: Matcher,
    padding: usize,
    calls: AtomicU64,
    memo_hits: AtomicU64,
    memo: Option<Mutex<HashMap<(u64, u64), Alignment>>>,
}

impl DistanceOracle {
    pub fn new(matcher: Matcher) -> Self {
        Self {
            matcher,
            padding: 0,
            calls: AtomicU64::new(0),
            memo_hits: AtomicU64::new(0),
            memo: None,
        }
    }

    pub fn exact() -> Self {
        Self::new(Matcher::exact())
    }

    pub fn graduated_assignment() -> Self {
        Self::new(Matcher::graduated_assignment())
    }

    pub fn with_padding(mut self, padding: usize) -> Self {
        self.padding = padding;
        self
    }

    /// Pads to the largest order in `graphs`.
    pub fn padded_for(self, graphs: &[AttributedGraph]) -> Self {
        let n = graphs.iter().map(AttributedGraph::order).max().unwrap_or(0);
        self.with_padding(n)
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn with_memo(mut self) -> Self {
        self.memo = Some(Mutex::new(HashMap::new()));
        self
    }

    pub fn matcher(&self) -> &Matcher {
        &self.matcher
    }

    pub fn is_exact(&self) -> bool {
        self.matcher.is_exact()
    }

    pub fn memo_enabled(&self) -> bool {
        self.memo.is_some()
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn memo_hits(&self) -> u64 {
        self.memo_hits.load(Ordering::Relaxed)
    }

    pub fn align(&self, x: &AttributedGraph, y: &AttributedGraph) -> Result<Alignment> {
        let Some(memo) = &self.memo else {
            self.calls.fetch_add(1, Ordering::Relaxed);
            return self.matcher.align(x, y, self.padding);
        };
        let (fx, fy) = (x.fingerprint(), y.fingerprint());
        let key = (fx.min(fy), fx.max(fy));
        let flipped = fx > fy;
        let orient = |a: &Alignment| if flipped { a.reversed() } else { a.clone() };

        if let Some(hit) = memo.lock().expect("memo poisoned").get(&key) {
            self.memo_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(orient(hit));
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        let computed = self.matcher.align(x, y, self.padding)?;
        let canonical = if flipped {
            computed.reversed()
        } else {
            computed
        };
        let mut guard = memo.lock().expect("memo poisoned");
        let stored = guard.entry(key).or_insert(canonical);
        Ok(orient(stored))
    }

    pub fn distance(&self, x: &AttributedGraph, y: &AttributedGraph) -> Result<f64> {
        self.align(x, y).map(|a| a.distance)
    }
}

/// Symmetric matrix of centroid-to-centroid distances; `k(k-1)/2` calls.
pub fn inter_centroid_distances(
    centroids: &[AttributedGraph],
    oracle: &DistanceOracle,
) -> Result<Vec<Vec<f64>>> {
    let k = centroids.len();
    if k == 0 {
        return Err(Error::Config("at least one centroid is required".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| oracle.distance(&centroids[i], &centroids[j]))
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![vec![0.0; k]; k];
    for (&(i, j), d) in pairs.iter().zip(values) {
        out[i][j] = d;
        out[j][i] = d;
    }
    Ok(out)
}
