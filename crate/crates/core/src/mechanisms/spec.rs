use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NominationGraph, Prediction};
use crate::rational::RationalParam;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MechanismKind {
    RhoPermutation,
    UniformPermutation,
    FixedBidirectional,
    RandomizedBidirectional,
    DetK,
    RhoPartition,
    KPartitionBaseline,
    TrivialPredicted,
    Lottery,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 9] = [
        MechanismKind::RhoPermutation,
        MechanismKind::UniformPermutation,
        MechanismKind::FixedBidirectional,
        MechanismKind::RandomizedBidirectional,
        MechanismKind::DetK,
        MechanismKind::RhoPartition,
        MechanismKind::KPartitionBaseline,
        MechanismKind::TrivialPredicted,
        MechanismKind::Lottery,
    ];

    /// Command-line spelling, e.g. `rho-permutation`.
    pub fn cli_name(self) -> &'static str {
        match self {
            MechanismKind::RhoPermutation => "rho-permutation",
            MechanismKind::UniformPermutation => "uniform-permutation",
            MechanismKind::FixedBidirectional => "fixed-bidirectional",
            MechanismKind::RandomizedBidirectional => "randomized-bidirectional",
            MechanismKind::DetK => "det-k",
            MechanismKind::RhoPartition => "rho-partition",
            MechanismKind::KPartitionBaseline => "k-partition",
            MechanismKind::TrivialPredicted => "trivial",
            MechanismKind::Lottery => "lottery",
        }
    }

    pub fn from_cli_name(name: &str) -> Result<Self> {
        let norm = name.to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.cli_name() == norm || (norm == "k-partition-baseline" && *k == MechanismKind::KPartitionBaseline) || (norm == "trivial-predicted" && *k == MechanismKind::TrivialPredicted))
            .ok_or_else(|| Error::invalid(format!("unknown mechanism '{name}'")))
    }
}

/// A fully parameterised mechanism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpecJson", into = "SpecJson")]
pub enum MechanismSpec {
    RhoPermutation { rho: RationalParam },
    UniformPermutation,
    FixedBidirectional,
    RandomizedBidirectional,
    DetK { k: usize },
    RhoPartition { k: usize, rho: RationalParam },
    KPartitionBaseline { k: usize },
    TrivialPredicted { k: usize },
    /// Runs `a` with probability `weight`, else `b`.
    Lottery {
        weight: RationalParam,
        a: Box<MechanismSpec>,
        b: Box<MechanismSpec>,
    },
}

impl MechanismSpec {
    pub fn rho_permutation(rho: RationalParam) -> Self {
        MechanismSpec::RhoPermutation { rho }
    }

    pub fn rho_partition(k: usize, rho: RationalParam) -> Self {
        MechanismSpec::RhoPartition { k, rho }
    }

    pub fn lottery(weight: RationalParam, a: MechanismSpec, b: MechanismSpec) -> Result<Self> {
        if a.k() != b.k() {
            return Err(Error::invalid(format!(
                "lottery branches select different numbers of vertices ({} vs {})",
                a.k(),
                b.k()
            )));
        }
        Ok(MechanismSpec::Lottery { weight, a: Box::new(a), b: Box::new(b) })
    }

    /// Builds a non-lottery spec from its kind and optional parameters.
    pub fn from_parts(kind: MechanismKind, rho: Option<RationalParam>, k: Option<usize>) -> Result<Self> {
        let need_rho = || rho.clone().ok_or_else(|| Error::invalid(format!("{} needs rho", kind.cli_name())));
        let need_k = || k.ok_or_else(|| Error::invalid(format!("{} needs k", kind.cli_name())));
        let fixed_k = |expected: usize| match k {
            Some(got) if got != expected => Err(Error::invalid(format!(
                "{} always selects k={expected}, got k={got}",
                kind.cli_name()
            ))),
            _ => Ok(()),
        };
        let no_rho = || match rho {
            Some(_) => Err(Error::invalid(format!("{} takes no rho", kind.cli_name()))),
            None => Ok(()),
        };
        let spec = match kind {
            MechanismKind::RhoPermutation => {
                fixed_k(1)?;
                MechanismSpec::RhoPermutation { rho: need_rho()? }
            }
            MechanismKind::UniformPermutation => {
                fixed_k(1)?;
                no_rho()?;
                MechanismSpec::UniformPermutation
            }
            MechanismKind::FixedBidirectional => {
                fixed_k(2)?;
                no_rho()?;
                MechanismSpec::FixedBidirectional
            }
            MechanismKind::RandomizedBidirectional => {
                fixed_k(2)?;
                no_rho()?;
                MechanismSpec::RandomizedBidirectional
            }
            MechanismKind::DetK => {
                no_rho()?;
                MechanismSpec::DetK { k: need_k()? }
            }
            MechanismKind::RhoPartition => MechanismSpec::RhoPartition { k: need_k()?, rho: need_rho()? },
            MechanismKind::KPartitionBaseline => {
                no_rho()?;
                MechanismSpec::KPartitionBaseline { k: need_k()? }
            }
            MechanismKind::TrivialPredicted => {
                no_rho()?;
                MechanismSpec::TrivialPredicted { k: need_k()? }
            }
            MechanismKind::Lottery => {
                return Err(Error::invalid("a lottery needs two sub-mechanisms; supply it as JSON"))
            }
        };
        spec.check_params()?;
        Ok(spec)
    }

    pub fn kind(&self) -> MechanismKind {
        match self {
            MechanismSpec::RhoPermutation { .. } => MechanismKind::RhoPermutation,
            MechanismSpec::UniformPermutation => MechanismKind::UniformPermutation,
            MechanismSpec::FixedBidirectional => MechanismKind::FixedBidirectional,
            MechanismSpec::RandomizedBidirectional => MechanismKind::RandomizedBidirectional,
            MechanismSpec::DetK { .. } => MechanismKind::DetK,
            MechanismSpec::RhoPartition { .. } => MechanismKind::RhoPartition,
            MechanismSpec::KPartitionBaseline { .. } => MechanismKind::KPartitionBaseline,
            MechanismSpec::TrivialPredicted { .. } => MechanismKind::TrivialPredicted,
            MechanismSpec::Lottery { .. } => MechanismKind::Lottery,
        }
    }

    /// Number of vertices the mechanism selects at most (size of the
    /// prediction it expects).
    pub fn k(&self) -> usize {
        match self {
            MechanismSpec::RhoPermutation { .. } | MechanismSpec::UniformPermutation => 1,
            MechanismSpec::FixedBidirectional | MechanismSpec::RandomizedBidirectional => 2,
            MechanismSpec::DetK { k }
            | MechanismSpec::RhoPartition { k, .. }
            | MechanismSpec::KPartitionBaseline { k }
            | MechanismSpec::TrivialPredicted { k } => *k,
            MechanismSpec::Lottery { a, .. } => a.k(),
        }
    }

    /// Whether every draw is a fixed function of the input.
    pub fn is_deterministic(&self) -> bool {
        match self {
            MechanismSpec::FixedBidirectional | MechanismSpec::DetK { .. } | MechanismSpec::TrivialPredicted { .. } => true,
            MechanismSpec::Lottery { weight, a, b } => {
                (weight == &RationalParam::one() || b.is_deterministic())
                    && (weight == &RationalParam::zero() || a.is_deterministic())
            }
            _ => false,
        }
    }

    fn check_params(&self) -> Result<()> {
        match self {
            MechanismSpec::DetK { k } if *k < 2 => Err(Error::invalid("det-k needs k >= 2")),
            MechanismSpec::RhoPartition { k, .. }
            | MechanismSpec::KPartitionBaseline { k }
            | MechanismSpec::TrivialPredicted { k }
                if *k == 0 =>
            {
                Err(Error::invalid("k must be at least 1"))
            }
            MechanismSpec::Lottery { a, b, .. } => {
                a.check_params()?;
                b.check_params()?;
                if a.k() != b.k() {
                    return Err(Error::invalid("lottery branches must share k"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Checks that the spec can run on `(g, p)`.
    pub fn validate(&self, g: &NominationGraph, p: &Prediction) -> Result<()> {
        self.check_params()?;
        p.validate_for(g)?;
        if p.k() != self.k() {
            return Err(Error::invalid(format!(
                "{} selects k={} but the prediction has {} vertices",
                self.kind().cli_name(),
                self.k(),
                p.k()
            )));
        }
        if let MechanismSpec::Lottery { a, b, .. } = self {
            a.validate(g, p)?;
            b.validate(g, p)?;
        }
        Ok(())
    }
}

impl fmt::Display for MechanismSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MechanismSpec::RhoPermutation { rho } => write!(f, "rho-permutation(rho={rho})"),
            MechanismSpec::RhoPartition { k, rho } => write!(f, "rho-partition(k={k},rho={rho})"),
            MechanismSpec::DetK { k } | MechanismSpec::KPartitionBaseline { k } | MechanismSpec::TrivialPredicted { k } => {
                write!(f, "{}(k={k})", self.kind().cli_name())
            }
            MechanismSpec::Lottery { weight, a, b } => write!(f, "lottery({weight}: {a} | {b})"),
            other => f.write_str(other.kind().cli_name()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SpecJson {
    kind: MechanismKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho: Option<RationalParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mix_weight: Option<RationalParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<Box<MechanismSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<Box<MechanismSpec>>,
}

impl TryFrom<SpecJson> for MechanismSpec {
    type Error = Error;

    fn try_from(raw: SpecJson) -> Result<Self> {
        if raw.kind == MechanismKind::Lottery {
            if raw.rho.is_some() {
                return Err(Error::invalid("LOTTERY takes no rho"));
            }
            let (Some(weight), Some(a), Some(b)) = (raw.mix_weight, raw.a, raw.b) else {
                return Err(Error::invalid("LOTTERY needs mix_weight, a and b"));
            };
            let spec = MechanismSpec::lottery(weight, *a, *b)?;
            if let Some(k) = raw.k {
                if k != spec.k() {
                    return Err(Error::invalid(format!("LOTTERY k={k} does not match its branches")));
                }
            }
            return Ok(spec);
        }
        if raw.mix_weight.is_some() || raw.a.is_some() || raw.b.is_some() {
            return Err(Error::invalid("mix_weight/a/b are only valid for LOTTERY"));
        }
        MechanismSpec::from_parts(raw.kind, raw.rho, raw.k)
    }
}

impl From<MechanismSpec> for SpecJson {
    fn from(spec: MechanismSpec) -> Self {
        let kind = spec.kind();
        let k = Some(spec.k());
        match spec {
            MechanismSpec::RhoPermutation { rho } => SpecJson { kind, rho: Some(rho), k, mix_weight: None, a: None, b: None },
            MechanismSpec::RhoPartition { rho, .. } => SpecJson { kind, rho: Some(rho), k, mix_weight: None, a: None, b: None },
            MechanismSpec::Lottery { weight, a, b } => {
                SpecJson { kind, rho: None, k, mix_weight: Some(weight), a: Some(a), b: Some(b) }
            }
            _ => SpecJson { kind, rho: None, k, mix_weight: None, a: None, b: None },
        }
    }
}
