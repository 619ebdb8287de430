//! The permutation mechanism: scan eligible vertices in priority order and
//! keep a candidate, replacing it whenever the next vertex's observed
//! indegree (ignoring a possible edge from the current candidate) reaches the
//! candidate's.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::NominationGraph;

/// Priorities `x ∈ [0,1]^S` for an eligible set `S`; they induce the scan
/// order of the permutation mechanism.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorityVector {
    values: BTreeMap<usize, f64>,
}

impl PriorityVector {
    pub fn new(values: BTreeMap<usize, f64>) -> Result<Self> {
        if let Some((v, x)) = values.iter().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
            return Err(Error::invalid(format!("priority {x} of vertex {v} outside [0,1]")));
        }
        Ok(Self { values })
    }

    pub fn get(&self, v: usize) -> Option<f64> {
        self.values.get(&v).copied()
    }

    pub fn keys(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.keys().copied()
    }

    pub fn values(&self) -> &BTreeMap<usize, f64> {
        &self.values
    }

    /// `x̄_i = 1 − x_i`.
    pub fn reversed(&self) -> Self {
        Self { values: self.values.iter().map(|(&v, &x)| (v, 1.0 - x)).collect() }
    }
}

impl FromIterator<(usize, f64)> for PriorityVector {
    /// Panics on values outside `[0,1]`; use [`PriorityVector::new`] for
    /// untrusted input.
    fn from_iter<I: IntoIterator<Item = (usize, f64)>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect()).expect("priorities must lie in [0,1]")
    }
}

/// Ascending priority, ties to the smaller vertex id.
pub(crate) fn priority_order(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
}

pub(crate) fn order_from_pairs(mut pairs: Vec<(f64, usize)>) -> Vec<usize> {
    pairs.sort_by(priority_order);
    pairs.into_iter().map(|(_, v)| v).collect()
}

/// The scan order `π(x)` over `s`.
pub fn induced_permutation(x: &PriorityVector, s: &BTreeSet<usize>) -> Result<Vec<usize>> {
    if !x.keys().eq(s.iter().copied()) {
        return Err(Error::invalid("priority vector keys must equal the eligible set"));
    }
    Ok(order_from_pairs(x.values.iter().map(|(&v, &p)| (p, v)).collect()))
}

/// Indegree of `i` counting sources outside `s` and vertices before `i` in
/// `perm`.
pub fn observed_indegree(
    g: &NominationGraph,
    s: &BTreeSet<usize>,
    perm: &[usize],
    i: usize,
) -> Result<usize> {
    if !s.contains(&i) {
        return Err(Error::invalid(format!("vertex {i} is not eligible")));
    }
    let pos = perm
        .iter()
        .position(|&v| v == i)
        .ok_or_else(|| Error::invalid(format!("vertex {i} missing from permutation")))?;
    let earlier: BTreeSet<usize> = perm[..pos].iter().copied().collect();
    Ok(g.in_neighbors(i)
        .iter()
        .filter(|u| !s.contains(u) || earlier.contains(u))
        .count())
}

/// Runs the permutation mechanism on eligible set `s` with priorities `x`.
pub fn permutation_select(g: &NominationGraph, s: &BTreeSet<usize>, x: &PriorityVector) -> Result<usize> {
    if s.is_empty() {
        return Err(Error::invalid("eligible set must be nonempty"));
    }
    if let Some(&bad) = s.iter().find(|&&v| v >= g.n()) {
        return Err(Error::invalid(format!("eligible vertex {bad} outside [0,{})", g.n())));
    }
    let order = induced_permutation(x, s)?;
    let mut eligible = vec![false; g.n()];
    for &v in s {
        eligible[v] = true;
    }
    Ok(select_in_order(g, &order, &eligible))
}

/// Core scan over an explicit order. `eligible[v]` marks membership of the
/// eligible set; edges from non-eligible vertices always count. `order` must
/// be a nonempty permutation of the eligible vertices.
pub fn select_in_order(g: &NominationGraph, order: &[usize], eligible: &[bool]) -> usize {
    let mut seen: Vec<bool> = eligible.iter().map(|e| !e).collect();
    let count = |seen: &[bool], i: usize| g.in_neighbors(i).iter().filter(|&&u| seen[u]).count();

    let mut candidate = order[0];
    let mut best = count(&seen, candidate);
    seen[candidate] = true;
    for &i in &order[1..] {
        let observed = count(&seen, i);
        let from_candidate = usize::from(g.in_neighbors(i).contains(&candidate));
        if observed - from_candidate >= best {
            candidate = i;
            best = observed;
        }
        seen[i] = true;
    }
    candidate
}

/// Scan over an order of all vertices in which only `eligible` vertices can
/// become the candidate. Every vertex counts as a nominator exactly when it
/// has already been passed, so for an eligible `v` the observed indegrees in
/// an order and its reverse sum to `δ⁻(v)`. `order` must contain at least one
/// eligible vertex.
pub fn select_in_full_order(g: &NominationGraph, order: &[usize], eligible: &[bool]) -> usize {
    let mut seen = vec![false; g.n()];
    let mut chosen: Option<(usize, usize)> = None;
    for &i in order {
        if eligible[i] {
            let observed = g.in_neighbors(i).iter().filter(|&&u| seen[u]).count();
            let take = match chosen {
                None => true,
                Some((c, best)) => observed - usize::from(g.in_neighbors(i).contains(&c)) >= best,
            };
            if take {
                chosen = Some((i, observed));
            }
        }
        seen[i] = true;
    }
    chosen.expect("order contains an eligible vertex").0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(pairs: &[(usize, f64)]) -> PriorityVector {
        pairs.iter().copied().collect()
    }

    #[test]
    fn induced_order_and_ties() {
        let s: BTreeSet<usize> = [0, 1].into();
        assert_eq!(induced_permutation(&pv(&[(0, 0.7), (1, 0.2)]), &s).unwrap(), vec![1, 0]);
        let s3: BTreeSet<usize> = [0, 1, 2].into();
        let x = pv(&[(0, 0.5), (1, 0.5), (2, 0.1)]);
        assert_eq!(induced_permutation(&x, &s3).unwrap(), vec![2, 0, 1]);
        assert_eq!(induced_permutation(&pv(&[(4, 0.3)]), &[4].into()).unwrap(), vec![4]);
        assert!(induced_permutation(&x, &s).is_err());
    }

    #[test]
    fn priorities_validated() {
        assert!(PriorityVector::new([(0, 1.5)].into()).is_err());
        assert!(PriorityVector::new([(0, f64::NAN)].into()).is_err());
        assert_eq!(pv(&[(0, 0.25)]).reversed().get(0), Some(0.75));
    }

    #[test]
    fn observed_indegree_examples() {
        let g = NominationGraph::new(3, [(2, 0), (1, 0)]).unwrap();
        let s: BTreeSet<usize> = [0, 1].into();
        assert_eq!(observed_indegree(&g, &s, &[1, 0], 0).unwrap(), 2);
        assert_eq!(observed_indegree(&g, &s, &[0, 1], 0).unwrap(), 1);
        assert!(observed_indegree(&g, &s, &[1, 0], 2).is_err());

        let full: BTreeSet<usize> = (0..3).collect();
        assert_eq!(observed_indegree(&g, &full, &[0, 1, 2], 0).unwrap(), 0);
        assert_eq!(observed_indegree(&g, &full, &[1, 2, 0], 0).unwrap(), g.indegree(0).unwrap());
    }

    #[test]
    fn select_examples() {
        let g = NominationGraph::new(2, [(1, 0)]).unwrap();
        let s: BTreeSet<usize> = [0, 1].into();
        assert_eq!(permutation_select(&g, &s, &pv(&[(0, 0.7), (1, 0.2)])).unwrap(), 0);
        // 0 first: vertex 1 observes 0 ≥ 0 and takes over.
        assert_eq!(permutation_select(&g, &s, &pv(&[(0, 0.2), (1, 0.7)])).unwrap(), 1);
        assert_eq!(permutation_select(&g, &[1].into(), &pv(&[(1, 0.4)])).unwrap(), 1);
        assert!(permutation_select(&g, &BTreeSet::new(), &pv(&[])).is_err());
    }

    #[test]
    fn candidate_edge_is_excluded_from_test() {
        // Order 0,1: vertex 1's only in-edge comes from the candidate 0, so the
        // test compares 0 ≥ 0 and 1 becomes candidate with d = 1. Then 2 with
        // one in-edge from 1 (the candidate) tests 0 ≥ 1 and fails.
        let g = NominationGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(select_in_order(&g, &[0, 1, 2], &[true; 3]), 1);
    }

    #[test]
    fn external_sources_count() {
        // Vertex 2 is not eligible; its edge into 0 is always observed.
        let g = NominationGraph::new(3, [(2, 0), (0, 1)]).unwrap();
        let s: BTreeSet<usize> = [0, 1].into();
        assert_eq!(permutation_select(&g, &s, &pv(&[(0, 0.1), (1, 0.9)])).unwrap(), 0);
    }
}
