//! Monte Carlo estimation of expected selected indegree, instance suites
//! with empirical consistency/robustness, and guarantee curve tables.

use std::io::Write;
use std::path::PathBuf;

use num::rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{guarantee_pair, GuaranteeKind, GuaranteeParams};
use crate::error::{Error, Result};
use crate::graph::{gen_figure_family, gen_random, gen_random_plurality, InstanceFamily, NominationGraph, Prediction};
use crate::mechanisms::{run, MechanismSpec};
use crate::rational::{render, to_f64};

/// Failure probability of the reported confidence intervals.
pub const CI_DELTA: f64 = 0.01;

/// Random stream for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Hoeffding half-width for the mean of `trials` draws bounded in `[0, range]`.
pub fn hoeffding_half_width(trials: u64, range: f64) -> f64 {
    ((2.0 / CI_DELTA).ln() / (2.0 * trials as f64)).sqrt() * range
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci_half_width: f64,
    /// Sum of selected indegrees over all trials (exact).
    pub total: u64,
    pub trials: u64,
}

/// Mean selected indegree over `trials` independent draws; trial `t` uses
/// [`trial_rng`]`(seed, t)`, so the result does not depend on scheduling.
pub fn monte_carlo_expected_indegree(
    spec: &MechanismSpec,
    g: &NominationGraph,
    p: &Prediction,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    spec.validate(g, p)?;
    let total = (0..trials)
        .into_par_iter()
        .map(|t| {
            let selected = run(spec, g, p, &mut trial_rng(seed, t))?;
            Ok::<u64, Error>(g.set_indegree(&selected) as u64)
        })
        .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
    let (delta_k, _) = g.max_k_indegree(spec.k())?;
    Ok(Estimate {
        mean: total as f64 / trials as f64,
        ci_half_width: hoeffding_half_width(trials, delta_k as f64),
        total,
        trials,
    })
}

/// Empirical selection frequency of every vertex.
pub fn monte_carlo_frequencies(
    spec: &MechanismSpec,
    g: &NominationGraph,
    p: &Prediction,
    trials: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    spec.validate(g, p)?;
    let n = g.n();
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut counts = vec![0u64; n];
            for v in run(spec, g, p, &mut trial_rng(seed, t))? {
                counts[v] += 1;
            }
            Ok(counts)
        })
        .try_reduce(
            || vec![0u64; n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )
}

/// A graph with its prediction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub graph: NominationGraph,
    pub prediction: Prediction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionMode {
    /// A set attaining `Δ_k`.
    Accurate,
    /// A uniformly random `k`-set in random order.
    Random,
    /// The vertices `0..k`.
    First,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InstanceSource {
    /// JSON list of [`Instance`]s.
    File(PathBuf),
    Random { n: usize, edge_prob: f64, count: usize, seed: u64, k: usize, mode: PredictionMode },
    Plurality { n: usize, count: usize, seed: u64, k: usize, mode: PredictionMode },
    Figure(InstanceFamily),
}

fn predict(g: &NominationGraph, k: usize, mode: PredictionMode, seed: u64) -> Result<Prediction> {
    if k == 0 || k > g.n() {
        return Err(Error::invalid(format!("k={k} must lie in [1, n={}]", g.n())));
    }
    match mode {
        PredictionMode::Accurate => Prediction::new(g.max_k_indegree(k)?.1.into_iter().collect()),
        PredictionMode::First => Prediction::new((0..k).collect()),
        PredictionMode::Random => {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut all: Vec<usize> = (0..g.n()).collect();
            all.shuffle(&mut rng);
            all.truncate(k);
            Prediction::new(all)
        }
    }
}

/// Materializes an instance list. Generated instance `j` uses seed
/// `seed + j` for its graph (and for a random prediction).
pub fn load_instances(source: &InstanceSource) -> Result<Vec<Instance>> {
    match source {
        InstanceSource::File(path) => {
            let text = std::fs::read_to_string(path)?;
            Ok(serde_json::from_str(&text)?)
        }
        InstanceSource::Random { n, edge_prob, count, seed, k, mode } => (0..*count)
            .map(|j| {
                let s = seed.wrapping_add(j as u64);
                let graph = gen_random(*n, *edge_prob, s)?;
                let prediction = predict(&graph, *k, *mode, s)?;
                Ok(Instance { id: format!("random-{j}"), graph, prediction })
            })
            .collect(),
        InstanceSource::Plurality { n, count, seed, k, mode } => (0..*count)
            .map(|j| {
                let s = seed.wrapping_add(j as u64);
                let graph = gen_random_plurality(*n, s)?;
                let prediction = predict(&graph, *k, *mode, s)?;
                Ok(Instance { id: format!("plurality-{j}"), graph, prediction })
            })
            .collect(),
        InstanceSource::Figure(family) => Ok(gen_figure_family(*family)?
            .into_iter()
            .enumerate()
            .map(|(j, (graph, prediction))| Instance { id: format!("{}-{}", family.id, j + 1), graph, prediction })
            .collect()),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialConfig {
    pub spec: MechanismSpec,
    pub trials: u64,
    pub seed: u64,
    pub source: InstanceSource,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub instance_id: String,
    pub n: usize,
    pub k: usize,
    pub delta_k: usize,
    pub pred_indegree: usize,
    #[serde(with = "crate::rational::as_string")]
    pub eta: BigRational,
    pub mean: f64,
    pub ci: f64,
    /// `mean / Δ_k`, or 1 when `Δ_k = 0`.
    pub ratio: f64,
}

impl ReportRow {
    pub fn accurate(&self) -> bool {
        self.pred_indegree == self.delta_k
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub mechanism: String,
    pub trials: u64,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    /// Minimum ratio over instances with an accurate prediction.
    pub alpha_hat: Option<f64>,
    /// Minimum ratio over all instances.
    pub beta_hat: f64,
}

impl EvalReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["instance_id", "n", "k", "delta_k", "pred_indegree", "eta", "mean", "ci", "ratio"])?;
        for r in &self.rows {
            w.write_record([
                r.instance_id.clone(),
                r.n.to_string(),
                r.k.to_string(),
                r.delta_k.to_string(),
                r.pred_indegree.to_string(),
                render(&r.eta),
                format!("{:.6}", r.mean),
                format!("{:.6}", r.ci),
                format!("{:.6}", r.ratio),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn min_f64(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.min(v))))
}

/// Evaluates `cfg.spec` on every instance. Instance `j` is estimated with
/// seed `cfg.seed + j`.
pub fn run_suite(cfg: &TrialConfig, instances: &[Instance]) -> Result<EvalReport> {
    if instances.is_empty() {
        return Err(Error::invalid("instance list is empty"));
    }
    let rows = instances
        .iter()
        .enumerate()
        .map(|(j, inst)| {
            let (g, p) = (&inst.graph, &inst.prediction);
            let est = monte_carlo_expected_indegree(&cfg.spec, g, p, cfg.trials, cfg.seed.wrapping_add(j as u64))?;
            let (delta_k, _) = g.max_k_indegree(p.k())?;
            let ratio = if delta_k == 0 { 1.0 } else { est.mean / delta_k as f64 };
            Ok(ReportRow {
                instance_id: inst.id.clone(),
                n: g.n(),
                k: p.k(),
                delta_k,
                pred_indegree: g.set_indegree(p.vertices()),
                eta: g.prediction_error(p)?,
                mean: est.mean,
                ci: est.ci_half_width,
                ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let alpha_hat = min_f64(rows.iter().filter(|r| r.accurate()).map(|r| r.ratio));
    let beta_hat = min_f64(rows.iter().map(|r| r.ratio)).expect("nonempty");
    Ok(EvalReport { mechanism: cfg.spec.to_string(), trials: cfg.trials, seed: cfg.seed, rows, alpha_hat, beta_hat })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CurveRow {
    pub kind: GuaranteeKind,
    pub k: usize,
    #[serde(with = "crate::rational::as_string")]
    pub rho: BigRational,
    #[serde(with = "crate::rational::as_string")]
    pub alpha: BigRational,
    #[serde(with = "crate::rational::as_string")]
    pub beta: BigRational,
}

/// `(α, β)` for every kind × k × ρ. Plurality kinds are evaluated at their
/// worst case `Δ = 2`.
pub fn emit_curves(kinds: &[GuaranteeKind], ks: &[usize], rhos: &[BigRational]) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::with_capacity(kinds.len() * ks.len() * rhos.len());
    for &kind in kinds {
        for &k in ks {
            for rho in rhos {
                let params = GuaranteeParams::default().rho(rho.clone()).k(k).delta(2);
                let pair = guarantee_pair(kind, &params)?;
                rows.push(CurveRow { kind, k, rho: rho.clone(), alpha: pair.alpha, beta: pair.beta });
            }
        }
    }
    Ok(rows)
}

pub fn write_curves_csv<W: Write>(rows: &[CurveRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "k", "rho", "alpha", "beta", "alpha_decimal", "beta_decimal"])?;
    for r in rows {
        w.write_record([
            r.kind.to_string(),
            r.k.to_string(),
            render(&r.rho),
            render(&r.alpha),
            render(&r.beta),
            format!("{:.6}", to_f64(&r.alpha)),
            format!("{:.6}", to_f64(&r.beta)),
        ])?;
    }
    w.flush()?;
    Ok(())
}
