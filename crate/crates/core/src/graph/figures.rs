//! The small worst-case instance families behind the impossibility results
//! for 1-, 2- and 3-selection. Vertices are 0-indexed; the predicted set is
//! always the first `k` vertices and any padding vertices are isolated.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{NominationGraph, Prediction};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FamilyId {
    /// 1-selection, two drawn vertices.
    Fig3OneSel,
    /// 1-selection on 4-vertex plurality graphs.
    Fig4Plurality,
    /// 2-selection, three drawn vertices.
    Fig5TwoSel,
    /// 3-selection, five drawn vertices.
    Fig6ThreeSel,
}

impl FamilyId {
    pub const ALL: [FamilyId; 4] = [
        FamilyId::Fig3OneSel,
        FamilyId::Fig4Plurality,
        FamilyId::Fig5TwoSel,
        FamilyId::Fig6ThreeSel,
    ];

    /// Number of vertices drawn in the figure.
    pub fn drawn_vertices(self) -> usize {
        match self {
            FamilyId::Fig3OneSel => 2,
            FamilyId::Fig4Plurality => 4,
            FamilyId::Fig5TwoSel => 3,
            FamilyId::Fig6ThreeSel => 5,
        }
    }

    /// Size of the predicted set.
    pub fn k(self) -> usize {
        match self {
            FamilyId::Fig3OneSel | FamilyId::Fig4Plurality => 1,
            FamilyId::Fig5TwoSel => 2,
            FamilyId::Fig6ThreeSel => 3,
        }
    }

    pub fn edge_lists(self) -> &'static [&'static [(usize, usize)]] {
        match self {
            FamilyId::Fig3OneSel => FIG3,
            FamilyId::Fig4Plurality => FIG4,
            FamilyId::Fig5TwoSel => FIG5,
            FamilyId::Fig6ThreeSel => FIG6,
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyId::Fig3OneSel => "fig3",
            FamilyId::Fig4Plurality => "fig4",
            FamilyId::Fig5TwoSel => "fig5",
            FamilyId::Fig6ThreeSel => "fig6",
        })
    }
}

impl FromStr for FamilyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fig3" | "fig3_1sel" => Ok(FamilyId::Fig3OneSel),
            "fig4" | "fig4_plurality" => Ok(FamilyId::Fig4Plurality),
            "fig5" | "fig5_2sel" => Ok(FamilyId::Fig5TwoSel),
            "fig6" | "fig6_3sel" => Ok(FamilyId::Fig6ThreeSel),
            other => Err(Error::invalid(format!("unknown instance family '{other}'"))),
        }
    }
}

/// A figure family together with the total vertex count (drawn vertices plus
/// isolated padding).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFamily {
    pub id: FamilyId,
    pub n: usize,
}

impl InstanceFamily {
    pub fn new(id: FamilyId, n: usize) -> Result<Self> {
        if n < id.drawn_vertices() {
            return Err(Error::invalid(format!(
                "{id} needs at least {} vertices, got {n}",
                id.drawn_vertices()
            )));
        }
        Ok(Self { id, n })
    }

    /// Smallest padding: only the drawn vertices.
    pub fn minimal(id: FamilyId) -> Self {
        Self { id, n: id.drawn_vertices() }
    }
}

const FIG3: &[&[(usize, usize)]] = &[&[(1, 0)], &[(0, 1)], &[(0, 1), (1, 0)]];

const FIG4: &[&[(usize, usize)]] = &[
    &[(2, 0), (3, 1), (0, 1), (1, 0)],
    &[(2, 0), (3, 2), (0, 1), (1, 0)],
    &[(0, 1), (1, 2), (2, 0), (3, 1)],
];

const FIG5: &[&[(usize, usize)]] = &[
    &[(2, 0), (2, 1)],
    &[(0, 1), (0, 2)],
    &[(0, 2), (1, 2), (0, 1), (1, 0)],
    &[(0, 1), (2, 1), (0, 2), (2, 0)],
    &[(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)],
];

const FIG6: &[&[(usize, usize)]] = &[
    &[(4, 0), (4, 1), (4, 2)],
    &[(4, 0), (4, 1), (4, 2), (4, 3)],
    &[(0, 1), (0, 2), (0, 3), (0, 4)],
    &[(0, 1), (0, 2), (0, 3), (4, 1), (4, 2), (0, 4), (4, 0)],
    &[(3, 0), (3, 1), (3, 2), (4, 0), (4, 1), (4, 2), (3, 4), (4, 3)],
    &[(0, 1), (0, 2), (0, 3), (4, 1), (4, 2), (4, 3), (0, 4), (4, 0)],
    &[(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4), (0, 1), (1, 0)],
];

/// The graph/prediction pairs of a figure family, in figure order.
pub fn gen_figure_family(fam: InstanceFamily) -> Result<Vec<(NominationGraph, Prediction)>> {
    let fam = InstanceFamily::new(fam.id, fam.n)?;
    let prediction = Prediction::new((0..fam.id.k()).collect())?;
    fam.id
        .edge_lists()
        .iter()
        .map(|edges| Ok((NominationGraph::new(fam.n, edges.iter().copied())?, prediction.clone())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig3_golden() {
        let inst = gen_figure_family(InstanceFamily::minimal(FamilyId::Fig3OneSel)).unwrap();
        assert_eq!(inst.len(), 3);
        let json: Vec<String> = inst.iter().map(|(g, _)| serde_json::to_string(g).unwrap()).collect();
        assert_eq!(
            json,
            vec![
                r#"{"n":2,"edges":[[1,0]]}"#,
                r#"{"n":2,"edges":[[0,1]]}"#,
                r#"{"n":2,"edges":[[0,1],[1,0]]}"#,
            ]
        );
        assert!(inst.iter().all(|(_, p)| p.vertices() == [0]));
    }

    #[test]
    fn fig4_is_plurality() {
        let inst = gen_figure_family(InstanceFamily::minimal(FamilyId::Fig4Plurality)).unwrap();
        assert_eq!(inst.len(), 3);
        assert!(inst.iter().all(|(g, _)| g.is_plurality()));
    }

    #[test]
    fn fig5_fifth_graph_delta2() {
        let inst = gen_figure_family(InstanceFamily::minimal(FamilyId::Fig5TwoSel)).unwrap();
        assert_eq!(inst[4].0.max_k_indegree(2).unwrap().0, 4);
        assert!(inst.iter().all(|(_, p)| p.vertices() == [0, 1]));
    }

    #[test]
    fn fig6_padding_is_isolated() {
        let inst = gen_figure_family(InstanceFamily::new(FamilyId::Fig6ThreeSel, 7).unwrap()).unwrap();
        assert_eq!(inst.len(), 7);
        for (g, p) in &inst {
            assert_eq!(g.n(), 7);
            assert_eq!(p.vertices(), &[0, 1, 2]);
            assert!(g.edges().iter().all(|&(u, v)| u < 5 && v < 5));
        }
    }

    #[test]
    fn rejects_short_padding() {
        assert!(InstanceFamily::new(FamilyId::Fig6ThreeSel, 4).is_err());
        assert!("fig9".parse::<FamilyId>().is_err());
        assert_eq!("FIG5".parse::<FamilyId>().unwrap(), FamilyId::Fig5TwoSel);
    }
}
