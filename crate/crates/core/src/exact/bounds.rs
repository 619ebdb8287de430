//! Audit of the impossibility regions: symmetrized exact distributions on
//! the worst-case families, the probability labels attached to their
//! vertices, and the linear constraints the labels must satisfy.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::{One, Zero};
use serde::Serialize;

use super::{expected_indegree, invariant_relabelings, symmetrize, ExactDistribution};
use crate::analysis::{upper_bound_region, Setting};
use crate::error::{Error, Result};
use crate::graph::{gen_figure_family, InstanceFamily, NominationGraph, Prediction};
use crate::mechanisms::MechanismSpec;
use crate::rational::{from_int, render};

/// Per graph, the `(vertex, label)` pairs; label `j` stands for `p_j`.
type LabelTable = &'static [&'static [(usize, usize)]];

const SEL1_LABELS: LabelTable = &[&[(0, 1)], &[(1, 2)], &[(0, 1), (1, 2)]];

const SEL1_PLURALITY_LABELS: LabelTable = &[
    &[(0, 1), (1, 2)],
    &[(0, 1), (1, 3), (2, 4)],
    &[(0, 5), (1, 2), (2, 6)],
];

const SEL2_LABELS: LabelTable = &[
    &[(0, 1), (1, 1)],
    &[(1, 2), (2, 3)],
    &[(0, 2), (1, 2), (2, 4)],
    &[(0, 1), (1, 5), (2, 3)],
    &[(0, 5), (1, 5), (2, 4)],
];

const SEL3_LABELS: LabelTable = &[
    &[(0, 1), (1, 1), (2, 1)],
    &[(0, 2), (1, 2), (2, 2), (3, 3)],
    &[(1, 4), (2, 4), (3, 5), (4, 5)],
    &[(0, 1), (1, 6), (2, 6), (3, 7), (4, 5)],
    &[(0, 8), (1, 8), (2, 8), (3, 3), (4, 3)],
    &[(0, 2), (1, 9), (2, 9), (3, 10), (4, 5)],
    &[(0, 4), (1, 4), (2, 11), (3, 12), (4, 12)],
];

pub fn figure_labels(setting: Setting) -> LabelTable {
    match setting {
        Setting::Sel1 => SEL1_LABELS,
        Setting::Sel1Plurality => SEL1_PLURALITY_LABELS,
        Setting::Sel2 => SEL2_LABELS,
        Setting::Sel3 => SEL3_LABELS,
    }
}

#[derive(Clone, Copy, Debug)]
enum Term {
    Alpha,
    Beta,
    P(usize),
    One,
}

/// `Σ lhs ≤ Σ rhs`, read off graph `graph`.
struct Inequality {
    graph: usize,
    lhs: &'static [(i64, Term)],
    rhs: &'static [(i64, Term)],
}

use Term::{Alpha as A, Beta as B, One as C, P};

const fn ineq(graph: usize, lhs: &'static [(i64, Term)], rhs: &'static [(i64, Term)]) -> Inequality {
    Inequality { graph, lhs, rhs }
}

const SEL1_INEQ: &[Inequality] = &[
    ineq(0, &[(1, A)], &[(1, P(1))]),
    ineq(0, &[(1, B)], &[(1, P(1))]),
    ineq(1, &[(1, B)], &[(1, P(2))]),
    ineq(2, &[(1, P(1)), (1, P(2))], &[(1, C)]),
];

const SEL1_PLURALITY_INEQ: &[Inequality] = &[
    ineq(0, &[(1, P(1)), (1, P(2))], &[(1, C)]),
    ineq(1, &[(1, P(1)), (1, P(3)), (1, P(4))], &[(1, C)]),
    ineq(1, &[(2, A)], &[(2, P(1)), (1, P(3)), (1, P(4))]),
    ineq(1, &[(2, B)], &[(2, P(1)), (1, P(3)), (1, P(4))]),
    ineq(2, &[(1, P(2)), (1, P(5)), (1, P(6))], &[(1, C)]),
    ineq(2, &[(2, B)], &[(2, P(2)), (1, P(5)), (1, P(6))]),
];

const SEL2_INEQ: &[Inequality] = &[
    ineq(0, &[(2, A)], &[(2, P(1))]),
    ineq(0, &[(2, B)], &[(2, P(1))]),
    ineq(1, &[(2, B)], &[(1, P(2)), (1, P(3))]),
    ineq(2, &[(2, P(2)), (1, P(4))], &[(2, C)]),
    ineq(3, &[(1, P(1)), (1, P(3)), (1, P(5))], &[(2, C)]),
    ineq(4, &[(4, A)], &[(2, P(4)), (4, P(5))]),
    ineq(4, &[(4, B)], &[(2, P(4)), (4, P(5))]),
];

const SEL3_INEQ: &[Inequality] = &[
    ineq(0, &[(3, A)], &[(3, P(1))]),
    ineq(1, &[(3, A)], &[(3, P(2)), (1, P(3))]),
    ineq(1, &[(3, B)], &[(3, P(2)), (1, P(3))]),
    ineq(2, &[(3, B)], &[(2, P(4)), (2, P(5))]),
    ineq(3, &[(1, P(1)), (1, P(5)), (2, P(6)), (1, P(7))], &[(3, C)]),
    ineq(3, &[(5, A)], &[(1, P(1)), (1, P(5)), (4, P(6)), (1, P(7))]),
    ineq(4, &[(2, P(3)), (3, P(8))], &[(3, C)]),
    ineq(4, &[(6, A)], &[(2, P(3)), (6, P(8))]),
    ineq(4, &[(6, B)], &[(2, P(3)), (6, P(8))]),
    ineq(5, &[(1, P(2)), (1, P(5)), (2, P(9)), (1, P(10))], &[(3, C)]),
    ineq(5, &[(6, B)], &[(1, P(2)), (1, P(5)), (4, P(9)), (2, P(10))]),
    ineq(6, &[(2, P(4)), (1, P(11)), (2, P(12))], &[(3, C)]),
    ineq(6, &[(6, B)], &[(2, P(4)), (2, P(11)), (4, P(12))]),
];

fn inequalities(setting: Setting) -> &'static [Inequality] {
    match setting {
        Setting::Sel1 => SEL1_INEQ,
        Setting::Sel1Plurality => SEL1_PLURALITY_INEQ,
        Setting::Sel2 => SEL2_INEQ,
        Setting::Sel3 => SEL3_INEQ,
    }
}

fn render_side(side: &[(i64, Term)]) -> String {
    side.iter()
        .map(|&(c, t)| {
            let name = match t {
                Term::Alpha => "α".to_string(),
                Term::Beta => "β".to_string(),
                Term::P(j) => format!("p{j}"),
                Term::One => return c.to_string(),
            };
            if c == 1 {
                name
            } else {
                format!("{c}{name}")
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConstraintCheck {
    pub name: String,
    #[serde(with = "crate::rational::as_string")]
    pub lhs: BigRational,
    #[serde(with = "crate::rational::as_string")]
    pub rhs: BigRational,
    pub pass: bool,
}

/// Equality of one label occurrence with the label's first occurrence.
/// `implied` says whether impartiality plus symmetry alone force it (one
/// prediction-preserving relabeling followed by a change of the vertex's own
/// out-edges).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinkageCheck {
    pub label: String,
    pub first: (usize, usize),
    pub other: (usize, usize),
    #[serde(with = "crate::rational::as_string")]
    pub lhs: BigRational,
    #[serde(with = "crate::rational::as_string")]
    pub rhs: BigRational,
    pub implied: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphValues {
    pub index: usize,
    pub delta_k: usize,
    pub pred_indegree: usize,
    pub accurate: bool,
    #[serde(with = "crate::rational::as_string")]
    pub expected_indegree: BigRational,
    #[serde(with = "crate::rational::as_string")]
    pub ratio: BigRational,
    pub distribution: ExactDistribution,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundAuditReport {
    pub setting: Setting,
    pub mechanism: String,
    pub graphs: Vec<GraphValues>,
    /// Value of each label at its first occurrence.
    pub labels: BTreeMap<String, String>,
    pub linkage: Vec<LinkageCheck>,
    pub inequalities: Vec<ConstraintCheck>,
    #[serde(with = "crate::rational::as_string")]
    pub alpha_hat: BigRational,
    #[serde(with = "crate::rational::as_string")]
    pub beta_hat: BigRational,
    pub region: Vec<ConstraintCheck>,
    pub pass: bool,
}

impl BoundAuditReport {
    /// Names of every failed check.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .linkage
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("linkage {} at {:?} vs {:?}", c.label, c.first, c.other))
            .collect();
        out.extend(self.inequalities.iter().chain(&self.region).filter(|c| !c.pass).map(|c| c.name.clone()));
        out
    }
}

fn without_out_edges(g: &NominationGraph, v: usize) -> Vec<(usize, usize)> {
    g.edges().iter().copied().filter(|&(u, _)| u != v).collect()
}

fn linkage_implied(
    (g, v): (&NominationGraph, usize),
    (h, w): (&NominationGraph, usize),
    p: &Prediction,
) -> bool {
    let target = without_out_edges(h, w);
    invariant_relabelings(g.n(), p)
        .into_iter()
        .filter(|sigma| sigma[v] == w)
        .any(|sigma| without_out_edges(&g.relabel(&sigma), w) == target)
}

/// Bound audit for `spec`, using symmetrized exact distributions.
pub fn bound_audit(setting: Setting, spec: &MechanismSpec) -> Result<BoundAuditReport> {
    if spec.k() != setting.k() {
        return Err(Error::invalid(format!(
            "{spec} selects k={} but {setting} needs k={}",
            spec.k(),
            setting.k()
        )));
    }
    bound_audit_with(setting, &spec.to_string(), |g, p| symmetrize(spec, g, p))
}

/// Bound audit with any exact oracle for the (already symmetric) mechanism.
pub fn bound_audit_with<F>(setting: Setting, mechanism: &str, dist: F) -> Result<BoundAuditReport>
where
    F: Fn(&NominationGraph, &Prediction) -> Result<ExactDistribution>,
{
    let family = gen_figure_family(InstanceFamily::minimal(setting.family()))?;
    let labels = figure_labels(setting);
    let k = setting.k();

    let mut graphs = Vec::with_capacity(family.len());
    for (index, (g, p)) in family.iter().enumerate() {
        let d = dist(g, p)?;
        let (delta_k, _) = g.max_k_indegree(k)?;
        let pred_indegree = g.set_indegree(p.vertices());
        let expected = expected_indegree(&d, g)?;
        let ratio = if delta_k == 0 { BigRational::one() } else { &expected / from_int(delta_k) };
        graphs.push(GraphValues {
            index,
            delta_k,
            pred_indegree,
            accurate: pred_indegree == delta_k,
            expected_indegree: expected,
            ratio,
            distribution: d,
        });
    }

    // Labels: first occurrence defines the value; the rest must agree.
    let mut first: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut linkage = Vec::new();
    for (gi, row) in labels.iter().enumerate() {
        for &(v, label) in row.iter() {
            match first.get(&label) {
                None => {
                    first.insert(label, (gi, v));
                }
                Some(&(g0, v0)) => {
                    let lhs = graphs[g0].distribution.prob(v0);
                    let rhs = graphs[gi].distribution.prob(v);
                    let implied = linkage_implied((&family[g0].0, v0), (&family[gi].0, v), &family[gi].1);
                    linkage.push(LinkageCheck {
                        label: format!("p{label}"),
                        first: (g0, v0),
                        other: (gi, v),
                        pass: lhs == rhs || !implied,
                        lhs,
                        rhs,
                        implied,
                    });
                }
            }
        }
    }
    let label_value = |graph: usize, label: usize| -> BigRational {
        let row = labels[graph];
        let &(v, _) = row.iter().find(|(_, l)| *l == label).expect("label drawn in this graph");
        graphs[graph].distribution.prob(v)
    };

    let alpha_hat = graphs
        .iter()
        .filter(|g| g.accurate)
        .map(|g| g.ratio.clone())
        .min()
        .ok_or_else(|| Error::invalid("family has no accurate instance"))?;
    let beta_hat = graphs.iter().map(|g| g.ratio.clone()).min().expect("nonempty family");

    let eval = |graph: usize, side: &[(i64, Term)]| -> BigRational {
        side.iter()
            .map(|&(c, t)| {
                let value = match t {
                    Term::Alpha => alpha_hat.clone(),
                    Term::Beta => beta_hat.clone(),
                    Term::P(j) => label_value(graph, j),
                    Term::One => BigRational::one(),
                };
                from_int(c) * value
            })
            .sum()
    };
    let inequalities: Vec<ConstraintCheck> = inequalities(setting)
        .iter()
        .map(|q| {
            let lhs = eval(q.graph, q.lhs);
            let rhs = eval(q.graph, q.rhs);
            ConstraintCheck {
                name: format!("graph {}: {} <= {}", q.graph + 1, render_side(q.lhs), render_side(q.rhs)),
                pass: lhs <= rhs,
                lhs,
                rhs,
            }
        })
        .collect();

    let region: Vec<ConstraintCheck> = upper_bound_region(setting)
        .constraints
        .iter()
        .map(|c| {
            let lhs = c.lhs(&alpha_hat, &beta_hat);
            ConstraintCheck { name: format!("region: {c}"), pass: lhs <= c.bound, lhs, rhs: c.bound.clone() }
        })
        .collect();

    let label_values = first
        .iter()
        .map(|(&label, &(g, v))| (format!("p{label}"), render(&graphs[g].distribution.prob(v))))
        .collect();
    let pass = linkage.iter().all(|c| c.pass) && inequalities.iter().chain(&region).all(|c| c.pass);
    debug_assert!(graphs.iter().all(|g| g.distribution.total() >= BigRational::zero()));
    Ok(BoundAuditReport {
        setting,
        mechanism: mechanism.to_string(),
        graphs,
        labels: label_values,
        linkage,
        inequalities,
        alpha_hat,
        beta_hat,
        region,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{ratio, RationalParam};

    #[test]
    fn rho_permutation_attains_sel1_boundary() {
        let spec = MechanismSpec::rho_permutation(RationalParam::from_ratio(2, 3).unwrap());
        let report = bound_audit(Setting::Sel1, &spec).unwrap();
        assert!(report.pass, "{:?}", report.failures());
        assert_eq!(report.labels["p1"], "2/3");
        assert_eq!(report.labels["p2"], "1/3");
        assert_eq!(&report.alpha_hat + &report.beta_hat, ratio(1, 1));
    }

    #[test]
    fn trivial_sel1() {
        let report = bound_audit(Setting::Sel1, &MechanismSpec::TrivialPredicted { k: 1 }).unwrap();
        assert!(report.pass);
        assert_eq!(report.labels["p1"], "1");
        assert_eq!(report.labels["p2"], "0");
        assert_eq!(report.beta_hat, ratio(0, 1));
    }

    #[test]
    fn every_label_linkage_is_forced() {
        for setting in Setting::ALL {
            let report = bound_audit(setting, &MechanismSpec::TrivialPredicted { k: setting.k() }).unwrap();
            for link in &report.linkage {
                assert!(link.implied, "{setting}: {link:?}");
            }
        }
    }

    #[test]
    fn wrong_k_rejected() {
        assert!(bound_audit(Setting::Sel2, &MechanismSpec::UniformPermutation).is_err());
    }
}
