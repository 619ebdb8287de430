//! Nomination graphs, predictions and degree queries.

mod figures;
mod generate;

use std::collections::BTreeSet;

use itertools::Itertools;
use num::rational::BigRational;
use num::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use figures::{gen_figure_family, FamilyId, InstanceFamily};
pub use generate::{all_graphs, all_plurality_graphs, gen_random, gen_random_plurality};

/// A simple directed graph on vertices `0..n` without self-loops. An edge
/// `(u, v)` means that `u` nominates `v`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct NominationGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    in_nbrs: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphJson> for NominationGraph {
    type Error = Error;

    fn try_from(raw: GraphJson) -> Result<Self> {
        NominationGraph::new(raw.n, raw.edges.into_iter().map(|[u, v]| (u, v)))
    }
}

impl From<NominationGraph> for GraphJson {
    fn from(g: NominationGraph) -> Self {
        GraphJson {
            n: g.n,
            edges: g.edges.iter().map(|&(u, v)| [u, v]).collect(),
        }
    }
}

impl NominationGraph {
    /// Builds a graph, rejecting self-loops and out-of-range endpoints.
    /// Duplicate edges collapse (set semantics).
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("a nomination graph needs at least one vertex"));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u},{v}) outside [0,{n})")));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at vertex {u}")));
            }
            set.insert((u, v));
        }
        Ok(Self::from_edge_set(n, set))
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, std::iter::empty())
    }

    fn from_edge_set(n: usize, edges: BTreeSet<(usize, usize)>) -> Self {
        let mut in_nbrs = vec![Vec::new(); n];
        for &(u, v) in &edges {
            in_nbrs[v].push(u);
        }
        Self { n, edges, in_nbrs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u, v))
    }

    /// In-neighbours of `v` in ascending order. Panics on an invalid id.
    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_nbrs[v]
    }

    pub fn out_neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.range((u, 0)..(u + 1, 0)).map(|&(_, v)| v)
    }

    fn check_vertex(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::invalid(format!("vertex {i} outside [0,{})", self.n)));
        }
        Ok(())
    }

    pub fn indegree(&self, i: usize) -> Result<usize> {
        self.check_vertex(i)?;
        Ok(self.in_nbrs[i].len())
    }

    /// Number of edges into `i` whose source lies in `sources`.
    pub fn indegree_from(&self, sources: &BTreeSet<usize>, i: usize) -> Result<usize> {
        self.check_vertex(i)?;
        if let Some(&bad) = sources.iter().find(|&&s| s >= self.n) {
            return Err(Error::invalid(format!("source {bad} outside [0,{})", self.n)));
        }
        Ok(self.in_nbrs[i].iter().filter(|u| sources.contains(u)).count())
    }

    pub(crate) fn indegree_unchecked(&self, i: usize) -> usize {
        self.in_nbrs[i].len()
    }

    /// Total indegree of a vertex set.
    pub fn set_indegree<'a>(&self, set: impl IntoIterator<Item = &'a usize>) -> usize {
        set.into_iter().map(|&v| self.in_nbrs[v].len()).sum()
    }

    /// `Δ_k`: the largest total indegree of any `k` vertices, together with
    /// the lexicographically smallest witness set.
    ///
    /// The objective is separable, so taking the `k` largest indegrees (ties
    /// by smaller id) is exact; [`Self::max_k_indegree_exhaustive`] is the
    /// subset-enumeration cross-check.
    pub fn max_k_indegree(&self, k: usize) -> Result<(usize, BTreeSet<usize>)> {
        self.check_k(k)?;
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by_key(|&v| (std::cmp::Reverse(self.in_nbrs[v].len()), v));
        let witness: BTreeSet<usize> = order.into_iter().take(k).collect();
        Ok((self.set_indegree(&witness), witness))
    }

    pub fn max_k_indegree_exhaustive(&self, k: usize) -> Result<(usize, BTreeSet<usize>)> {
        self.check_k(k)?;
        let mut best: Option<(usize, Vec<usize>)> = None;
        // combinations() yields subsets in lexicographic order, so a strict
        // improvement test keeps the smallest witness.
        for subset in (0..self.n).combinations(k) {
            let total = self.set_indegree(&subset);
            if best.as_ref().is_none_or(|(b, _)| total > *b) {
                best = Some((total, subset));
            }
        }
        let (total, subset) = best.expect("k >= 1 yields at least one subset");
        Ok((total, subset.into_iter().collect()))
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.n {
            return Err(Error::invalid(format!("k={k} outside [1,{}]", self.n)));
        }
        Ok(())
    }

    /// Every vertex has outdegree exactly one.
    pub fn is_plurality(&self) -> bool {
        let mut out = vec![0usize; self.n];
        for &(u, _) in &self.edges {
            out[u] += 1;
        }
        out.iter().all(|&d| d == 1)
    }

    /// Normalised prediction error `(Δ_k − δ⁻(Ŝ)) / Δ_k`, zero when `Δ_k = 0`.
    pub fn prediction_error(&self, p: &Prediction) -> Result<BigRational> {
        p.validate_for(self)?;
        let (delta, _) = self.max_k_indegree(p.k())?;
        if delta == 0 {
            return Ok(BigRational::zero());
        }
        let got = self.set_indegree(p.vertices());
        Ok(BigRational::new(
            (delta - got).into(),
            delta.into(),
        ))
    }

    /// Whether the prediction attains `Δ_k` (exact integer comparison).
    pub fn is_accurate(&self, p: &Prediction) -> Result<bool> {
        p.validate_for(self)?;
        let (delta, _) = self.max_k_indegree(p.k())?;
        Ok(self.set_indegree(p.vertices()) == delta)
    }

    /// The same graph with the outgoing edges of `i` replaced by `targets`.
    pub fn with_out_edges(&self, i: usize, targets: &[usize]) -> Result<Self> {
        self.check_vertex(i)?;
        let kept = self.edges.iter().copied().filter(|&(u, _)| u != i);
        Self::new(self.n, kept.chain(targets.iter().map(|&t| (i, t))))
    }

    /// Relabels vertex `j` as `perm[j]`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        debug_assert_eq!(perm.len(), self.n);
        let edges = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        Self::from_edge_set(self.n, edges)
    }

    /// Same edges on `n` vertices; the added vertices are isolated.
    pub fn padded(&self, n: usize) -> Result<Self> {
        if n < self.n {
            return Err(Error::invalid(format!("cannot shrink {} vertices to {n}", self.n)));
        }
        Ok(Self::from_edge_set(n, self.edges.clone()))
    }
}

/// The predicted set `Ŝ`, kept in the order it was supplied. Mechanisms that
/// need an ordering (the partition sets, the bidirectional endpoints) use it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PredictionJson")]
pub struct Prediction {
    vertices: Vec<usize>,
}

#[derive(Deserialize)]
struct PredictionJson {
    vertices: Vec<usize>,
}

impl TryFrom<PredictionJson> for Prediction {
    type Error = Error;

    fn try_from(raw: PredictionJson) -> Result<Self> {
        Prediction::new(raw.vertices)
    }
}

impl Prediction {
    pub fn new(vertices: Vec<usize>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::invalid("prediction must contain at least one vertex"));
        }
        let distinct: BTreeSet<_> = vertices.iter().collect();
        if distinct.len() != vertices.len() {
            return Err(Error::invalid(format!("repeated vertex in prediction {vertices:?}")));
        }
        Ok(Self { vertices })
    }

    pub fn single(v: usize) -> Self {
        Self { vertices: vec![v] }
    }

    pub fn k(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vertices.contains(&v)
    }

    pub fn validate_for(&self, g: &NominationGraph) -> Result<()> {
        if self.k() > g.n() {
            return Err(Error::invalid(format!(
                "prediction of size {} exceeds n={}",
                self.k(),
                g.n()
            )));
        }
        if let Some(&bad) = self.vertices.iter().find(|&&v| v >= g.n()) {
            return Err(Error::invalid(format!("predicted vertex {bad} outside [0,{})", g.n())));
        }
        Ok(())
    }
}
