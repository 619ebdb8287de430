//! Single-draw executors for every selection mechanism. Randomness is always
//! passed in explicitly; draw orders are fixed (ascending vertex id, set
//! assignment before priorities) so that a seeded stream reproduces a draw.

mod permutation;
mod spec;

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{NominationGraph, Prediction};
use crate::rational::RationalParam;

pub use permutation::{
    induced_permutation, observed_indegree, permutation_select, select_in_full_order, select_in_order, PriorityVector,
};
pub(crate) use permutation::order_from_pairs;
pub use spec::{MechanismKind, MechanismSpec};

/// Which of the `k` sets each vertex belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionAssignment {
    k: usize,
    set_of: Vec<usize>,
}

impl PartitionAssignment {
    pub fn new(k: usize, set_of: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("a partition needs at least one set"));
        }
        if let Some(bad) = set_of.iter().find(|&&j| j >= k) {
            return Err(Error::invalid(format!("set index {bad} outside [0,{k})")));
        }
        Ok(Self { k, set_of })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn set_of(&self, v: usize) -> usize {
        self.set_of[v]
    }

    /// Members of each set in ascending id order.
    pub fn sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.k];
        for (v, &j) in self.set_of.iter().enumerate() {
            sets[j].push(v);
        }
        sets
    }
}

fn check_vertex(g: &NominationGraph, v: usize) -> Result<()> {
    if v >= g.n() {
        return Err(Error::invalid(format!("vertex {v} outside [0,{})", g.n())));
    }
    Ok(())
}

fn all_eligible(g: &NominationGraph) -> Vec<bool> {
    vec![true; g.n()]
}

/// Algorithm with the predicted vertex at priority `rho` and every other
/// priority uniform on `[0,1)`, drawn in ascending id order.
pub fn rho_permutation<R: Rng + ?Sized>(
    g: &NominationGraph,
    predicted: usize,
    rho: &RationalParam,
    rng: &mut R,
) -> Result<usize> {
    check_vertex(g, predicted)?;
    let rho = rho.to_f64();
    let pairs = (0..g.n())
        .map(|v| (if v == predicted { rho } else { rng.gen::<f64>() }, v))
        .collect();
    Ok(select_in_order(g, &order_from_pairs(pairs), &all_eligible(g)))
}

pub fn uniform_permutation<R: Rng + ?Sized>(g: &NominationGraph, rng: &mut R) -> usize {
    let pairs = (0..g.n()).map(|v| (rng.gen::<f64>(), v)).collect();
    select_in_order(g, &order_from_pairs(pairs), &all_eligible(g))
}

/// Interior priorities `(i+1)/(n+1)` for every vertex outside the pair.
pub fn default_interior_priorities(g: &NominationGraph, pair: (usize, usize)) -> PriorityVector {
    let n = g.n() as f64;
    (0..g.n())
        .filter(|&v| v != pair.0 && v != pair.1)
        .map(|v| (v, (v as f64 + 1.0) / (n + 1.0)))
        .collect()
}

fn both_directions(g: &NominationGraph, order: &[usize], eligible: &[bool]) -> BTreeSet<usize> {
    let reversed: Vec<usize> = order.iter().rev().copied().collect();
    [select_in_order(g, order, eligible), select_in_order(g, &reversed, eligible)].into()
}

/// Runs the permutation mechanism with `pair.0` fixed first and `pair.1`
/// fixed last, then again on the reversed priorities, and returns the union.
/// `interior` defaults to [`default_interior_priorities`].
pub fn fixed_bidirectional(
    g: &NominationGraph,
    pair: (usize, usize),
    interior: Option<&PriorityVector>,
) -> Result<BTreeSet<usize>> {
    check_vertex(g, pair.0)?;
    check_vertex(g, pair.1)?;
    if pair.0 == pair.1 {
        return Err(Error::invalid("bidirectional endpoints must be distinct"));
    }
    let default;
    let interior = match interior {
        Some(x) => x,
        None => {
            default = default_interior_priorities(g, pair);
            &default
        }
    };
    let expected = (0..g.n()).filter(|&v| v != pair.0 && v != pair.1);
    if !interior.keys().eq(expected) {
        return Err(Error::invalid("interior priorities must cover exactly the non-endpoint vertices"));
    }
    if let Some((v, x)) = interior.values().iter().find(|(_, &x)| x <= 0.0 || x >= 1.0) {
        return Err(Error::invalid(format!("interior priority {x} of vertex {v} must lie strictly inside (0,1)")));
    }
    let mut pairs: Vec<(f64, usize)> = interior.values().iter().map(|(&v, &x)| (x, v)).collect();
    pairs.push((0.0, pair.0));
    pairs.push((1.0, pair.1));
    Ok(both_directions(g, &order_from_pairs(pairs), &all_eligible(g)))
}

/// Prediction-free two-selection: one uniform order, scanned both ways.
pub fn randomized_bidirectional<R: Rng + ?Sized>(g: &NominationGraph, rng: &mut R) -> Result<BTreeSet<usize>> {
    if g.n() < 2 {
        return Err(Error::invalid("randomized bidirectional selection needs n >= 2"));
    }
    let pairs = (0..g.n()).map(|v| (rng.gen::<f64>(), v)).collect();
    Ok(both_directions(g, &order_from_pairs(pairs), &all_eligible(g)))
}

/// Keeps the first `k−2` predicted vertices and runs the fixed bidirectional
/// scan with the last two as endpoints. The kept vertices stay at their
/// interior positions but cannot be picked by the scan, so the two parts are
/// disjoint and each nominator is still counted in exactly one direction.
pub fn det_k_selection(g: &NominationGraph, p: &Prediction) -> Result<BTreeSet<usize>> {
    p.validate_for(g)?;
    let k = p.k();
    if k < 2 {
        return Err(Error::invalid("det-k selection needs k >= 2"));
    }
    let v = p.vertices();
    let (kept, ends) = v.split_at(k - 2);
    let mut eligible = all_eligible(g);
    for &u in kept {
        eligible[u] = false;
    }
    let mut pairs: Vec<(f64, usize)> =
        default_interior_priorities(g, (ends[0], ends[1])).values().iter().map(|(&u, &x)| (x, u)).collect();
    pairs.push((0.0, ends[0]));
    pairs.push((1.0, ends[1]));
    let order = order_from_pairs(pairs);
    let reversed: Vec<usize> = order.iter().rev().copied().collect();
    let mut out: BTreeSet<usize> = kept.iter().copied().collect();
    out.insert(select_in_full_order(g, &order, &eligible));
    out.insert(select_in_full_order(g, &reversed, &eligible));
    Ok(out)
}

fn select_per_set(g: &NominationGraph, sets: &[Vec<(f64, usize)>]) -> BTreeSet<usize> {
    sets.iter()
        .filter(|set| !set.is_empty())
        .map(|set| {
            let mut eligible = vec![false; g.n()];
            for &(_, v) in set {
                eligible[v] = true;
            }
            select_in_order(g, &order_from_pairs(set.clone()), &eligible)
        })
        .collect()
}

/// Partition mechanism with predictions: predicted vertex `î_j` heads set
/// `j` at priority `rho`; every other vertex joins a uniform set.
pub fn rho_partition<R: Rng + ?Sized>(
    g: &NominationGraph,
    p: &Prediction,
    rho: &RationalParam,
    rng: &mut R,
) -> Result<BTreeSet<usize>> {
    p.validate_for(g)?;
    let k = p.k();
    let mut set_of = vec![0; g.n()];
    for (j, &v) in p.vertices().iter().enumerate() {
        set_of[v] = j;
    }
    for (v, slot) in set_of.iter_mut().enumerate() {
        if !p.contains(v) {
            *slot = rng.gen_range(0..k);
        }
    }
    let assignment = PartitionAssignment::new(k, set_of)?;
    let rho = rho.to_f64();
    let sets: Vec<Vec<(f64, usize)>> = assignment
        .sets()
        .into_iter()
        .map(|members| {
            members
                .into_iter()
                .map(|v| (if p.contains(v) { rho } else { rng.gen::<f64>() }, v))
                .collect()
        })
        .collect();
    Ok(select_per_set(g, &sets))
}

/// Prediction-free partition baseline; empty sets select nobody.
pub fn k_partition_baseline<R: Rng + ?Sized>(g: &NominationGraph, k: usize, rng: &mut R) -> Result<BTreeSet<usize>> {
    if k == 0 || k > g.n() {
        return Err(Error::invalid(format!("k={k} must lie in [1, n={}]", g.n())));
    }
    let set_of: Vec<usize> = (0..g.n()).map(|_| rng.gen_range(0..k)).collect();
    let assignment = PartitionAssignment::new(k, set_of)?;
    let sets: Vec<Vec<(f64, usize)>> = assignment
        .sets()
        .into_iter()
        .map(|members| members.into_iter().map(|v| (rng.gen::<f64>(), v)).collect())
        .collect();
    Ok(select_per_set(g, &sets))
}

/// Runs `a` with probability `weight` and `b` otherwise.
pub fn lottery<R: Rng + ?Sized>(
    weight: &RationalParam,
    a: &MechanismSpec,
    b: &MechanismSpec,
    g: &NominationGraph,
    p: &Prediction,
    rng: &mut R,
) -> Result<BTreeSet<usize>> {
    if a.k() != b.k() {
        return Err(Error::invalid("lottery branches must share k"));
    }
    if rng.gen::<f64>() < weight.to_f64() {
        run(a, g, p, rng)
    } else {
        run(b, g, p, rng)
    }
}

/// One draw of `spec` on `(g, p)`.
pub fn run<R: Rng + ?Sized>(
    spec: &MechanismSpec,
    g: &NominationGraph,
    p: &Prediction,
    rng: &mut R,
) -> Result<BTreeSet<usize>> {
    spec.validate(g, p)?;
    let v = p.vertices();
    Ok(match spec {
        MechanismSpec::RhoPermutation { rho } => [rho_permutation(g, v[0], rho, rng)?].into(),
        MechanismSpec::UniformPermutation => [uniform_permutation(g, rng)].into(),
        MechanismSpec::FixedBidirectional => fixed_bidirectional(g, (v[0], v[1]), None)?,
        MechanismSpec::RandomizedBidirectional => randomized_bidirectional(g, rng)?,
        MechanismSpec::DetK { .. } => det_k_selection(g, p)?,
        MechanismSpec::RhoPartition { rho, .. } => rho_partition(g, p, rho, rng)?,
        MechanismSpec::KPartitionBaseline { k } => k_partition_baseline(g, *k, rng)?,
        MechanismSpec::TrivialPredicted { .. } => v.iter().copied().collect(),
        MechanismSpec::Lottery { weight, a, b } => lottery(weight, a, b, g, p, rng)?,
    })
}
