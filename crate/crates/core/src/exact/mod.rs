//! Exact selection probabilities by total enumeration of the randomness,
//! with arbitrary-precision rational arithmetic throughout.

mod audit;
mod bounds;

use std::collections::{BTreeMap, HashMap};

use itertools::Itertools;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NominationGraph, Prediction};
use crate::mechanisms::{det_k_selection, fixed_bidirectional, select_in_order, MechanismSpec};
use crate::rational::{factorial, from_int, parse_rational, pow, render};

pub use audit::{
    admissible_correlation_pairs, correlation_audit, correlation_probabilities, impartiality_audit,
    impartiality_audit_mode, impartiality_audit_with, invariant_relabelings, symmetrize, symmetrize_with,
    AuditMode, CorrelationProbabilities,
};
pub use bounds::{bound_audit, bound_audit_with, figure_labels, BoundAuditReport, ConstraintCheck, GraphValues};

/// Exact per-vertex selection probabilities `f_i(Ŝ, G)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DistributionJson", into = "DistributionJson")]
pub struct ExactDistribution {
    probs: BTreeMap<usize, BigRational>,
}

#[derive(Serialize, Deserialize)]
struct DistributionJson {
    probs: BTreeMap<usize, String>,
}

impl TryFrom<DistributionJson> for ExactDistribution {
    type Error = Error;

    fn try_from(raw: DistributionJson) -> Result<Self> {
        let probs = raw
            .probs
            .into_iter()
            .map(|(v, s)| parse_rational(&s).map(|r| (v, r)))
            .collect::<Result<_>>()?;
        Ok(Self { probs })
    }
}

impl From<ExactDistribution> for DistributionJson {
    fn from(d: ExactDistribution) -> Self {
        Self { probs: d.probs.iter().map(|(&v, r)| (v, render(r))).collect() }
    }
}

impl ExactDistribution {
    pub fn from_vec(probs: Vec<BigRational>) -> Self {
        Self { probs: probs.into_iter().enumerate().collect() }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_vec(vec![BigRational::zero(); n])
    }

    pub fn probs(&self) -> &BTreeMap<usize, BigRational> {
        &self.probs
    }

    /// Probability of `v`; zero for vertices not present.
    pub fn prob(&self, v: usize) -> BigRational {
        self.probs.get(&v).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Expected number of selected vertices.
    pub fn total(&self) -> BigRational {
        self.probs.values().sum()
    }

    /// `weight · a + (1 − weight) · b`, vertex by vertex.
    pub fn mix(weight: &BigRational, a: &Self, b: &Self) -> Self {
        let rest = BigRational::one() - weight;
        let keys: std::collections::BTreeSet<usize> = a.probs.keys().chain(b.probs.keys()).copied().collect();
        Self {
            probs: keys
                .into_iter()
                .map(|v| (v, weight * a.prob(v) + &rest * b.prob(v)))
                .collect(),
        }
    }

    /// Float view for reporting.
    pub fn to_f64_map(&self) -> BTreeMap<usize, f64> {
        self.probs.iter().map(|(&v, r)| (v, crate::rational::to_f64(r))).collect()
    }
}

/// `Σ_i f_i · δ⁻(i)`.
pub fn expected_indegree(d: &ExactDistribution, g: &NominationGraph) -> Result<BigRational> {
    d.probs
        .iter()
        .map(|(&v, p)| Ok(p * from_int(g.indegree(v)?)))
        .sum()
}

/// Size caps for total enumeration. Exceeding them is an error, never a
/// silent truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactBudget {
    pub max_n: usize,
    pub max_partition_k: usize,
}

impl Default for ExactBudget {
    fn default() -> Self {
        Self { max_n: 8, max_partition_k: 3 }
    }
}

impl ExactBudget {
    fn check(&self, spec: &MechanismSpec, n: usize) -> Result<()> {
        if spec.is_deterministic() {
            return Ok(());
        }
        if n > self.max_n {
            return Err(Error::Infeasible(format!(
                "{spec} on n={n} exceeds the enumeration cap n <= {}",
                self.max_n
            )));
        }
        let partition_k = match spec {
            MechanismSpec::RhoPartition { k, .. } | MechanismSpec::KPartitionBaseline { k } => Some(*k),
            _ => None,
        };
        if let Some(k) = partition_k.filter(|&k| k > self.max_partition_k) {
            return Err(Error::Infeasible(format!(
                "{spec} with k={k} exceeds the partition cap k <= {}",
                self.max_partition_k
            )));
        }
        Ok(())
    }
}

/// Exact distribution with the default budget.
pub fn exact_distribution(spec: &MechanismSpec, g: &NominationGraph, p: &Prediction) -> Result<ExactDistribution> {
    exact_distribution_with(spec, g, p, &ExactBudget::default())
}

pub fn exact_distribution_with(
    spec: &MechanismSpec,
    g: &NominationGraph,
    p: &Prediction,
    budget: &ExactBudget,
) -> Result<ExactDistribution> {
    spec.validate(g, p)?;
    budget.check(spec, g.n())?;
    let n = g.n();
    let v = p.vertices();
    let dist = match spec {
        MechanismSpec::RhoPermutation { rho } => {
            let members: Vec<usize> = (0..n).collect();
            scatter(n, set_distribution(g, &members, Some((v[0], rho.value()))))
        }
        MechanismSpec::UniformPermutation => {
            let members: Vec<usize> = (0..n).collect();
            scatter(n, set_distribution(g, &members, None))
        }
        MechanismSpec::FixedBidirectional => indicator(n, fixed_bidirectional(g, (v[0], v[1]), None)?),
        MechanismSpec::DetK { .. } => indicator(n, det_k_selection(g, p)?),
        MechanismSpec::TrivialPredicted { .. } => indicator(n, v.iter().copied()),
        MechanismSpec::RandomizedBidirectional => randomized_bidirectional_distribution(g),
        MechanismSpec::RhoPartition { rho, .. } => partition_distribution(g, Some((v, rho.value())), p.k()),
        MechanismSpec::KPartitionBaseline { k } => partition_distribution(g, None, *k),
        MechanismSpec::Lottery { weight, a, b } => {
            let da = exact_distribution_with(a, g, p, budget)?;
            let db = exact_distribution_with(b, g, p, budget)?;
            ExactDistribution::mix(weight.value(), &da, &db)
        }
    };
    Ok(dist)
}

fn indicator(n: usize, selected: impl IntoIterator<Item = usize>) -> ExactDistribution {
    let mut probs = vec![BigRational::zero(); n];
    for v in selected {
        probs[v] = BigRational::one();
    }
    ExactDistribution::from_vec(probs)
}

fn scatter(n: usize, entries: Vec<(usize, BigRational)>) -> ExactDistribution {
    let mut probs = vec![BigRational::zero(); n];
    for (v, p) in entries {
        probs[v] += p;
    }
    ExactDistribution::from_vec(probs)
}

/// Exact outcome distribution of the permutation mechanism on eligible set
/// `members` (edges from every other vertex count). With `fixed = Some((v,
/// ρ))`, vertex `v` sits at priority `ρ` and the others are uniform, so a
/// draw is an ordering of the others plus the number `b` of them placed
/// before `v`, weighted `ρ^b (1−ρ)^{m−b} / (b! (m−b)!)`. Without a fixed
/// vertex every ordering has weight `1/m!`.
fn set_distribution(
    g: &NominationGraph,
    members: &[usize],
    fixed: Option<(usize, &BigRational)>,
) -> Vec<(usize, BigRational)> {
    let n = g.n();
    let mut eligible = vec![false; n];
    for &v in members {
        eligible[v] = true;
    }
    let others: Vec<usize> = members.iter().copied().filter(|&v| Some(v) != fixed.map(|f| f.0)).collect();
    let m = others.len();

    // Cut positions with nonzero weight, and their weights.
    let cuts: Vec<(usize, BigRational)> = match fixed {
        None => vec![(m, BigRational::new(BigInt::one(), factorial(m)))],
        Some((_, rho)) => {
            let rest = BigRational::one() - rho;
            (0..=m)
                .map(|b| {
                    let w = pow(rho, b) * pow(&rest, m - b)
                        / BigRational::from_integer(factorial(b) * factorial(m - b));
                    (b, w)
                })
                .filter(|(_, w)| !w.is_zero())
                .collect()
        }
    };

    // counts[c][v]: orderings where cut `c` selects `v`.
    let counts = arrangements(&others, |order, counts: &mut Vec<Vec<u64>>| {
        let mut scan = Vec::with_capacity(m + 1);
        for (c, (b, _)) in cuts.iter().enumerate() {
            scan.clear();
            match fixed {
                Some((f, _)) => {
                    scan.extend_from_slice(&order[..*b]);
                    scan.push(f);
                    scan.extend_from_slice(&order[*b..]);
                }
                None => scan.extend_from_slice(order),
            }
            counts[c][select_in_order(g, &scan, &eligible)] += 1;
        }
    }, || vec![vec![0u64; n]; cuts.len()]);

    let mut out: BTreeMap<usize, BigRational> = BTreeMap::new();
    for (c, (_, w)) in cuts.iter().enumerate() {
        for (v, &cnt) in counts[c].iter().enumerate() {
            if cnt > 0 {
                *out.entry(v).or_insert_with(BigRational::zero) += w * from_int(cnt);
            }
        }
    }
    out.into_iter().collect()
}

/// Folds `visit` over every ordering of `items` in parallel (split on the
/// first element) and sums the integer count tables.
fn arrangements<F, I>(items: &[usize], visit: F, init: I) -> Vec<Vec<u64>>
where
    F: Fn(&[usize], &mut Vec<Vec<u64>>) + Sync,
    I: Fn() -> Vec<Vec<u64>> + Sync + Send,
{
    if items.is_empty() {
        let mut acc = init();
        visit(&[], &mut acc);
        return acc;
    }
    (0..items.len())
        .into_par_iter()
        .map(|first| {
            let mut acc = init();
            let rest: Vec<usize> = items.iter().enumerate().filter(|&(j, _)| j != first).map(|(_, &v)| v).collect();
            let mut order = Vec::with_capacity(items.len());
            for tail in rest.iter().copied().permutations(rest.len()) {
                order.clear();
                order.push(items[first]);
                order.extend(tail);
                visit(&order, &mut acc);
            }
            acc
        })
        .reduce(&init, |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
            a
        })
}

fn randomized_bidirectional_distribution(g: &NominationGraph) -> ExactDistribution {
    let n = g.n();
    let all: Vec<usize> = (0..n).collect();
    let eligible = vec![true; n];
    let counts = arrangements(&all, |order, counts: &mut Vec<Vec<u64>>| {
        let forward = select_in_order(g, order, &eligible);
        let reversed: Vec<usize> = order.iter().rev().copied().collect();
        let backward = select_in_order(g, &reversed, &eligible);
        counts[0][forward] += 1;
        if backward != forward {
            counts[0][backward] += 1;
        }
    }, || vec![vec![0u64; n]]);
    let total = factorial(n);
    ExactDistribution::from_vec(
        counts[0]
            .iter()
            .map(|&c| BigRational::new(BigInt::from(c), total.clone()))
            .collect(),
    )
}

/// Partition mechanisms. With a prediction, predicted vertex `j` heads set
/// `j` at priority `ρ` and only the others are assigned; without one, every
/// vertex is assigned. Each assignment is equally likely.
fn partition_distribution(
    g: &NominationGraph,
    predicted: Option<(&[usize], &BigRational)>,
    k: usize,
) -> ExactDistribution {
    let n = g.n();
    let free: Vec<usize> = match predicted {
        Some((pv, _)) => (0..n).filter(|v| !pv.contains(v)).collect(),
        None => (0..n).collect(),
    };
    let assignments = k.pow(free.len() as u32);

    let per_assignment = |code: usize| -> Vec<u64> {
        // Bitmask of each set's members.
        let mut masks = vec![0u64; k];
        if let Some((pv, _)) = predicted {
            for (j, &v) in pv.iter().enumerate() {
                masks[j] |= 1 << v;
            }
        }
        let mut c = code;
        for &v in &free {
            masks[c % k] |= 1 << v;
            c /= k;
        }
        masks
    };

    let memo: std::sync::Mutex<HashMap<u64, Vec<(usize, BigRational)>>> = Default::default();
    let set_dist = |mask: u64, head: Option<usize>| -> Vec<(usize, BigRational)> {
        if let Some(hit) = memo.lock().expect("memo lock").get(&mask) {
            return hit.clone();
        }
        let members: Vec<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
        let fixed = head.zip(predicted.map(|(_, rho)| rho));
        let d = set_distribution(g, &members, fixed);
        memo.lock().expect("memo lock").insert(mask, d.clone());
        d
    };

    let sums = (0..assignments)
        .into_par_iter()
        .map(|code| {
            let mut acc = vec![BigRational::zero(); n];
            for (j, mask) in per_assignment(code).into_iter().enumerate() {
                if mask == 0 {
                    continue;
                }
                let head = predicted.map(|(pv, _)| pv[j]);
                for (v, p) in set_dist(mask, head) {
                    acc[v] += p;
                }
            }
            acc
        })
        .reduce(
            || vec![BigRational::zero(); n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let denom = from_int(assignments);
    ExactDistribution::from_vec(sums.into_iter().map(|s| s / &denom).collect())
}
