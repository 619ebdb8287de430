//! Impartiality audits, symmetrization over prediction-preserving
//! relabelings, and the conditional-probability check behind the
//! plurality robustness bound.

use itertools::Itertools;
use num::rational::BigRational;
use num::Zero;
use rayon::prelude::*;

use super::{exact_distribution_with, ExactBudget, ExactDistribution};
use crate::error::{Error, Result};
use crate::graph::{NominationGraph, Prediction};
use crate::mechanisms::MechanismSpec;
use crate::rational::from_int;

/// How the audited vertex's out-edges are varied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuditMode {
    /// Every subset of the other vertices (`2^{n−1}` variants).
    General,
    /// Every single target (`n−1` variants), keeping the graph plurality.
    Plurality,
}

fn out_edge_variants(n: usize, i: usize, mode: AuditMode) -> Vec<Vec<usize>> {
    let others: Vec<usize> = (0..n).filter(|&v| v != i).collect();
    match mode {
        AuditMode::Plurality => others.into_iter().map(|t| vec![t]).collect(),
        AuditMode::General => others.into_iter().powerset().collect(),
    }
}

/// Checks that `prob_of_i(G')` is the same rational for every `G'` obtained
/// from `g` by replacing the out-edges of `i`. `prob_of_i` can be any exact
/// oracle, which lets tests audit deliberately broken selectors.
pub fn impartiality_audit_with<F>(g: &NominationGraph, i: usize, mode: AuditMode, max_n: usize, prob_of_i: F) -> Result<bool>
where
    F: Fn(&NominationGraph) -> Result<BigRational> + Sync,
{
    if i >= g.n() {
        return Err(Error::invalid(format!("vertex {i} outside [0,{})", g.n())));
    }
    if g.n() > max_n {
        return Err(Error::Infeasible(format!("impartiality audit on n={} exceeds cap {max_n}", g.n())));
    }
    if mode == AuditMode::Plurality && g.n() < 2 {
        return Err(Error::invalid("plurality variation needs n >= 2"));
    }
    let values = out_edge_variants(g.n(), i, mode)
        .into_par_iter()
        .map(|targets| prob_of_i(&g.with_out_edges(i, &targets)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(values.windows(2).all(|w| w[0] == w[1]))
}

pub fn impartiality_audit_mode(
    spec: &MechanismSpec,
    g: &NominationGraph,
    p: &Prediction,
    i: usize,
    mode: AuditMode,
) -> Result<bool> {
    let budget = ExactBudget::default();
    impartiality_audit_with(g, i, mode, budget.max_n, |h| {
        Ok(exact_distribution_with(spec, h, p, &budget)?.prob(i))
    })
}

/// Exhaustive out-edge variation of `i` (all subsets).
pub fn impartiality_audit(spec: &MechanismSpec, g: &NominationGraph, p: &Prediction, i: usize) -> Result<bool> {
    impartiality_audit_mode(spec, g, p, i, AuditMode::General)
}

/// All relabelings `σ` (as `σ[j]` = new label of `j`) mapping the predicted
/// set onto itself: `k!(n−k)!` of them.
pub fn invariant_relabelings(n: usize, p: &Prediction) -> Vec<Vec<usize>> {
    let inside: Vec<usize> = (0..n).filter(|&v| p.contains(v)).collect();
    let outside: Vec<usize> = (0..n).filter(|&v| !p.contains(v)).collect();
    let mut out = Vec::new();
    for a in inside.iter().copied().permutations(inside.len()) {
        for b in outside.iter().copied().permutations(outside.len()) {
            let mut sigma = vec![0; n];
            for (src, dst) in inside.iter().zip(&a) {
                sigma[*src] = *dst;
            }
            for (src, dst) in outside.iter().zip(&b) {
                sigma[*src] = *dst;
            }
            out.push(sigma);
        }
    }
    out
}

/// `f_s(Ŝ,G)_i = avg_σ f(Ŝ, G_σ)_{σ(i)}` over prediction-preserving
/// relabelings `σ`, for an arbitrary exact oracle `dist`.
pub fn symmetrize_with<F>(g: &NominationGraph, p: &Prediction, dist: F) -> Result<ExactDistribution>
where
    F: Fn(&NominationGraph) -> Result<ExactDistribution> + Sync,
{
    p.validate_for(g)?;
    let n = g.n();
    let sigmas = invariant_relabelings(n, p);
    let count = from_int(sigmas.len());
    let sums = sigmas
        .into_par_iter()
        .map(|sigma| {
            let d = dist(&g.relabel(&sigma))?;
            Ok::<_, Error>((0..n).map(|i| d.prob(sigma[i])).collect::<Vec<_>>())
        })
        .try_reduce(
            || vec![BigRational::zero(); n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;
    Ok(ExactDistribution::from_vec(sums.into_iter().map(|s| s / &count).collect()))
}

pub fn symmetrize(spec: &MechanismSpec, g: &NominationGraph, p: &Prediction) -> Result<ExactDistribution> {
    spec.validate(g, p)?;
    let budget = ExactBudget::default();
    if g.n() > budget.max_n {
        return Err(Error::Infeasible(format!("symmetrization on n={} exceeds cap {}", g.n(), budget.max_n)));
    }
    symmetrize_with(g, p, |h| exact_distribution_with(spec, h, p, &budget))
}

/// `P[B_r | A_s]` and `P[B_r | A_r]` where the predicted vertex is last and
/// the others are in uniform order; `A_t` is "`i` has exactly `t` in-edges
/// from earlier vertices" and `B_r` is "some other vertex has at least `r`".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrelationProbabilities {
    pub given_s: BigRational,
    pub given_r: BigRational,
}

impl CorrelationProbabilities {
    pub fn holds(&self) -> bool {
        self.given_s >= self.given_r
    }
}

/// Largest meaningful `r` for vertex `i`: its indegree, not counting an edge
/// from the predicted vertex (which is always last).
fn correlation_cap(g: &NominationGraph, predicted: usize, i: usize) -> usize {
    g.indegree_unchecked(i) - usize::from(g.has_edge(predicted, i))
}

/// All `(r, s)` with `0 ≤ s < r ≤ δ⁻(i) − 1[î→i]`.
pub fn admissible_correlation_pairs(g: &NominationGraph, predicted: usize, i: usize) -> Vec<(usize, usize)> {
    let m = correlation_cap(g, predicted, i);
    (1..=m).flat_map(|r| (0..r).map(move |s| (r, s))).collect()
}

pub fn correlation_probabilities(
    g: &NominationGraph,
    predicted: usize,
    i: usize,
    r: usize,
    s: usize,
) -> Result<CorrelationProbabilities> {
    let n = g.n();
    if predicted >= n || i >= n {
        return Err(Error::invalid("vertex outside the graph"));
    }
    if !g.is_plurality() {
        return Err(Error::invalid("correlation audit needs a plurality graph"));
    }
    if i == predicted {
        return Err(Error::invalid("audited vertex must differ from the predicted vertex"));
    }
    let m = correlation_cap(g, predicted, i);
    if r <= s || r > m {
        return Err(Error::invalid(format!("need s < r <= {m}, got r={r}, s={s}")));
    }
    let budget = ExactBudget::default();
    if n > budget.max_n {
        return Err(Error::Infeasible(format!("correlation audit on n={n} exceeds cap {}", budget.max_n)));
    }

    let others: Vec<usize> = (0..n).filter(|&v| v != predicted).collect();
    // [#A_s, #(A_s ∧ B_r), #A_r, #(A_r ∧ B_r)]
    let mut counts = [0u64; 4];
    let mut pos = vec![0usize; n];
    for order in others.iter().copied().permutations(others.len()) {
        for (idx, &v) in order.iter().enumerate() {
            pos[v] = idx;
        }
        pos[predicted] = n - 1;
        let left = |j: usize| g.in_neighbors(j).iter().filter(|&&u| pos[u] < pos[j]).count();
        let sigma_i = left(i);
        if sigma_i != s && sigma_i != r {
            continue;
        }
        let b = (0..n).any(|j| j != i && left(j) >= r);
        let base = if sigma_i == s { 0 } else { 2 };
        counts[base] += 1;
        counts[base + 1] += u64::from(b);
    }
    let frac = |num: u64, den: u64| {
        if den == 0 {
            BigRational::zero()
        } else {
            from_int(num) / from_int(den)
        }
    };
    Ok(CorrelationProbabilities { given_s: frac(counts[1], counts[0]), given_r: frac(counts[3], counts[2]) })
}

/// Whether `P[B_r | A_s] ≥ P[B_r | A_r]`.
pub fn correlation_audit(g: &NominationGraph, predicted: usize, i: usize, r: usize, s: usize) -> Result<bool> {
    Ok(correlation_probabilities(g, predicted, i, r, s)?.holds())
}
