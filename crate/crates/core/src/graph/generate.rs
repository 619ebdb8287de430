use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NominationGraph;
use crate::error::{Error, Result};

/// Erdős–Rényi style digraph: each ordered non-self pair independently with
/// probability `edge_prob`. Deterministic in `seed`.
pub fn gen_random(n: usize, edge_prob: f64, seed: u64) -> Result<NominationGraph> {
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::invalid(format!("edge probability {edge_prob} outside [0,1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(edge_prob) {
                edges.push((u, v));
            }
        }
    }
    NominationGraph::new(n, edges)
}

/// Every vertex nominates one other vertex chosen uniformly.
pub fn gen_random_plurality(n: usize, seed: u64) -> Result<NominationGraph> {
    if n < 2 {
        return Err(Error::invalid("plurality graphs need at least two vertices"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<_> = (0..n)
        .map(|u| {
            let t = rng.gen_range(0..n - 1);
            (u, if t >= u { t + 1 } else { t })
        })
        .collect();
    NominationGraph::new(n, edges)
}

/// All `2^{n(n-1)}` simple digraphs on `n` vertices. Intended for `n <= 4`.
pub fn all_graphs(n: usize) -> impl Iterator<Item = NominationGraph> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)))
        .collect();
    assert!(pairs.len() < 32, "all_graphs is only meant for tiny n");
    (0u32..1 << pairs.len()).map(move |mask| {
        let edges = pairs
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, &e)| e);
        NominationGraph::new(n, edges).expect("enumerated edges are valid")
    })
}

/// All `(n-1)^n` plurality graphs on `n` vertices.
pub fn all_plurality_graphs(n: usize) -> impl Iterator<Item = NominationGraph> {
    assert!(n >= 2, "plurality graphs need at least two vertices");
    let total = (n - 1).pow(n as u32);
    (0..total).map(move |mut code| {
        let mut edges = Vec::with_capacity(n);
        for u in 0..n {
            let t = code % (n - 1);
            code /= n - 1;
            edges.push((u, if t >= u { t + 1 } else { t }));
        }
        NominationGraph::new(n, edges).expect("enumerated edges are valid")
    })
}
