//! Closed-form consistency/robustness guarantees, the smoothness bound, the
//! partition-mechanism probability identities and the impossibility regions.

use std::fmt;
use std::str::FromStr;

use num::rational::BigRational;
use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::FamilyId;
use crate::rational::{binomial, from_int, pow, ratio, render};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GuaranteeKind {
    RhoPermutation,
    /// The ρ = 1 permutation mechanism restricted to plurality graphs; depends on Δ.
    OnePermutationPlurality,
    /// Uniform permutation on plurality graphs; depends on Δ.
    UniformPermutationPlurality,
    /// Lottery between the two plurality mechanisms above with weight ρ.
    PluralityMixture,
    UniformPermutation,
    FixedBidirectional,
    /// Lottery between fixed bidirectional (weight ρ) and a 2/3-optimal
    /// prediction-free two-selection mechanism.
    RandomizedK2Mixture,
    DetK,
    RhoPartition,
    KPartitionBaseline,
    TrivialPredicted,
}

impl GuaranteeKind {
    pub const ALL: [GuaranteeKind; 11] = [
        GuaranteeKind::RhoPermutation,
        GuaranteeKind::OnePermutationPlurality,
        GuaranteeKind::UniformPermutationPlurality,
        GuaranteeKind::PluralityMixture,
        GuaranteeKind::UniformPermutation,
        GuaranteeKind::FixedBidirectional,
        GuaranteeKind::RandomizedK2Mixture,
        GuaranteeKind::DetK,
        GuaranteeKind::RhoPartition,
        GuaranteeKind::KPartitionBaseline,
        GuaranteeKind::TrivialPredicted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GuaranteeKind::RhoPermutation => "RHO_PERMUTATION",
            GuaranteeKind::OnePermutationPlurality => "ONE_PERMUTATION_PLURALITY",
            GuaranteeKind::UniformPermutationPlurality => "UNIFORM_PERMUTATION_PLURALITY",
            GuaranteeKind::PluralityMixture => "PLURALITY_MIXTURE",
            GuaranteeKind::UniformPermutation => "UNIFORM_PERMUTATION",
            GuaranteeKind::FixedBidirectional => "FIXED_BIDIRECTIONAL",
            GuaranteeKind::RandomizedK2Mixture => "RANDOMIZED_K2_MIXTURE",
            GuaranteeKind::DetK => "DET_K",
            GuaranteeKind::RhoPartition => "RHO_PARTITION",
            GuaranteeKind::KPartitionBaseline => "K_PARTITION_BASELINE",
            GuaranteeKind::TrivialPredicted => "TRIVIAL_PREDICTED",
        }
    }

    /// The impossibility region the kind's guarantee must respect, if any.
    pub fn setting(self, k: Option<usize>) -> Option<Setting> {
        let by_k = |k: Option<usize>| match k {
            Some(1) => Some(Setting::Sel1),
            Some(2) => Some(Setting::Sel2),
            Some(3) => Some(Setting::Sel3),
            _ => None,
        };
        match self {
            GuaranteeKind::RhoPermutation | GuaranteeKind::UniformPermutation => Some(Setting::Sel1),
            GuaranteeKind::OnePermutationPlurality
            | GuaranteeKind::UniformPermutationPlurality
            | GuaranteeKind::PluralityMixture => Some(Setting::Sel1Plurality),
            GuaranteeKind::FixedBidirectional | GuaranteeKind::RandomizedK2Mixture => Some(Setting::Sel2),
            GuaranteeKind::DetK
            | GuaranteeKind::RhoPartition
            | GuaranteeKind::KPartitionBaseline
            | GuaranteeKind::TrivialPredicted => by_k(k),
        }
    }
}

impl fmt::Display for GuaranteeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GuaranteeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown guarantee kind '{s}'")))
    }
}

/// Parameters a guarantee formula may need.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuaranteeParams {
    #[serde(default, with = "opt_rational")]
    pub rho: Option<BigRational>,
    pub k: Option<usize>,
    pub delta: Option<usize>,
}

impl GuaranteeParams {
    pub fn rho(mut self, rho: BigRational) -> Self {
        self.rho = Some(rho);
        self
    }

    pub fn k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn delta(mut self, delta: usize) -> Self {
        self.delta = Some(delta);
        self
    }
}

mod opt_rational {
    use num::rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => s.serialize_some(&crate::rational::render(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| crate::rational::parse_rational(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuaranteePair {
    #[serde(with = "crate::rational::as_string")]
    pub alpha: BigRational,
    #[serde(with = "crate::rational::as_string")]
    pub beta: BigRational,
    pub kind: GuaranteeKind,
    pub params: GuaranteeParams,
}

fn need_rho(kind: GuaranteeKind, params: &GuaranteeParams, lo: BigRational) -> Result<BigRational> {
    let rho = params.rho.clone().ok_or_else(|| Error::invalid(format!("{kind} needs rho")))?;
    if rho < lo || rho > BigRational::one() {
        return Err(Error::invalid(format!("{kind} needs rho in [{}, 1], got {}", render(&lo), render(&rho))));
    }
    Ok(rho)
}

fn need_k(kind: GuaranteeKind, params: &GuaranteeParams, min: usize) -> Result<usize> {
    match params.k {
        Some(k) if k >= min => Ok(k),
        Some(k) => Err(Error::invalid(format!("{kind} needs k >= {min}, got {k}"))),
        None => Err(Error::invalid(format!("{kind} needs k"))),
    }
}

fn need_delta(kind: GuaranteeKind, params: &GuaranteeParams) -> Result<usize> {
    match params.delta {
        Some(d) if d >= 2 => Ok(d),
        Some(d) => Err(Error::invalid(format!("{kind} needs Δ >= 2, got {d}"))),
        None => Err(Error::invalid(format!("{kind} needs Δ"))),
    }
}

/// Robustness of the ρ = 1 permutation mechanism on plurality graphs with
/// maximum indegree `delta ≥ 2`.
pub fn one_permutation_beta(delta: usize) -> Result<BigRational> {
    if delta < 2 {
        return Err(Error::invalid(format!("Δ must be at least 2, got {delta}")));
    }
    let d = delta as i64;
    Ok(if delta.is_multiple_of(2) {
        ratio(3 * d - 2, 4 * d)
    } else {
        ratio(3 * d * d - 2 * d - 1, 4 * d * d)
    })
}

/// Robustness of the uniform permutation mechanism on plurality graphs with
/// maximum indegree `delta ≥ 2`.
pub fn uniform_permutation_plurality_beta(delta: usize) -> Result<BigRational> {
    if delta < 2 {
        return Err(Error::invalid(format!("Δ must be at least 2, got {delta}")));
    }
    let d = delta as i64;
    Ok(if delta.is_multiple_of(2) { ratio(3 * d + 2, 4 * (d + 1)) } else { ratio(3 * d - 1, 4 * d) })
}

fn plurality_mixture(delta: usize, rho: &BigRational) -> (BigRational, BigRational) {
    let d = delta as i64;
    if delta.is_multiple_of(2) {
        let alpha = ratio(3 * d + 2, 4 * (d + 1)) + ratio(d + 2, 4 * (d + 1)) * rho;
        let beta = ratio(3 * d + 2, 4 * (d + 1)) - ratio(d + 2, 4 * d * (d + 1)) * rho;
        (alpha, beta)
    } else {
        let (alpha, _) = plurality_mixture(delta - 1, rho);
        let beta = ratio(3 * d - 1, 4 * d) - ratio(d + 1, 4 * d * d) * rho;
        (alpha, beta)
    }
}

/// `((k−1)/k)^e` exactly.
fn miss_prob(k: usize, e: usize) -> BigRational {
    pow(&ratio(k as i64 - 1, k as i64), e)
}

pub fn guarantee_pair(kind: GuaranteeKind, params: &GuaranteeParams) -> Result<GuaranteePair> {
    let half = ratio(1, 2);
    let (alpha, beta) = match kind {
        GuaranteeKind::RhoPermutation => {
            let rho = need_rho(kind, params, half)?;
            let beta = BigRational::one() - &rho;
            (rho, beta)
        }
        GuaranteeKind::OnePermutationPlurality => (BigRational::one(), one_permutation_beta(need_delta(kind, params)?)?),
        GuaranteeKind::UniformPermutationPlurality => {
            let b = uniform_permutation_plurality_beta(need_delta(kind, params)?)?;
            (b.clone(), b)
        }
        GuaranteeKind::PluralityMixture => {
            let rho = need_rho(kind, params, BigRational::zero())?;
            plurality_mixture(need_delta(kind, params)?, &rho)
        }
        GuaranteeKind::UniformPermutation => (half.clone(), half),
        GuaranteeKind::FixedBidirectional => (BigRational::one(), half),
        GuaranteeKind::RandomizedK2Mixture => {
            let rho = need_rho(kind, params, BigRational::zero())?;
            (ratio(2, 3) + ratio(1, 3) * &rho, ratio(2, 3) - ratio(1, 6) * &rho)
        }
        GuaranteeKind::DetK => {
            let k = need_k(kind, params, 2)?;
            (BigRational::one(), ratio(1, k as i64))
        }
        GuaranteeKind::RhoPartition => {
            let rho = need_rho(kind, params, half)?;
            let k = need_k(kind, params, 1)?;
            let kq = from_int(k);
            let alpha = BigRational::one() - (BigRational::one() - &rho) / &kq;
            let beta = (BigRational::one() - from_int(2) * &rho / from_int(k + 1)) * (BigRational::one() - miss_prob(k, k));
            (alpha, beta)
        }
        GuaranteeKind::KPartitionBaseline => {
            let k = need_k(kind, params, 1)?;
            let c = ratio(k as i64, k as i64 + 1) * (BigRational::one() - miss_prob(k, k + 1));
            (c.clone(), c)
        }
        GuaranteeKind::TrivialPredicted => (BigRational::one(), BigRational::zero()),
    };
    Ok(GuaranteePair { alpha, beta, kind, params: params.clone() })
}

fn check_unit(name: &str, v: &BigRational) -> Result<()> {
    if *v < BigRational::zero() || *v > BigRational::one() {
        return Err(Error::invalid(format!("{name} = {} outside [0,1]", render(v))));
    }
    Ok(())
}

/// `max{α(1−η), β}`.
pub fn smoothness(alpha: &BigRational, beta: &BigRational, eta: &BigRational) -> Result<BigRational> {
    check_unit("alpha", alpha)?;
    check_unit("beta", beta)?;
    check_unit("eta", eta)?;
    let scaled = alpha * (BigRational::one() - eta);
    Ok(if scaled >= *beta { scaled } else { beta.clone() })
}

fn check_claim_range(k: usize, p: usize) -> Result<()> {
    if k == 0 || p >= k {
        return Err(Error::invalid(format!("need k >= 1 and 0 <= p <= k-1, got k={k}, p={p}")));
    }
    Ok(())
}

/// Closed form of the probability that the main event of the partition
/// analysis occurs, with `p` predicted optimal vertices among `k`.
pub fn claim3_closed(k: usize, p: usize) -> Result<BigRational> {
    check_claim_range(k, p)?;
    let (ki, pi) = (k as i64, p as i64);
    let lead = from_int(ki * (ki - 2 * pi + 1));
    let coef = from_int(ki * ki + ki - 3 * pi * ki + pi * pi);
    let denom = from_int((ki - pi + 1) * (ki - pi));
    Ok((lead - coef * miss_prob(k, k - p)) / denom)
}

/// The same probability as two binomially weighted sums.
pub fn claim3_direct(k: usize, p: usize) -> Result<BigRational> {
    check_claim_range(k, p)?;
    let trials = k - p - 1;
    let hit = ratio(1, k as i64);
    let miss = ratio(k as i64 - 1, k as i64);
    let weight = |l: usize| from_int(binomial(trials, l)) * pow(&hit, l) * pow(&miss, trials - l);
    let first: BigRational = (0..=trials).map(|l| weight(l) / from_int(l + 2)).sum();
    let second: BigRational = (0..=trials).map(|l| weight(l) / from_int(l + 1)).sum();
    Ok(ratio(p as i64, k as i64) * first + ratio((k - p) as i64, k as i64) * second)
}

/// `g_k(p)`, the closed form viewed as a function of `p`.
pub fn g_value(k: usize, p: usize) -> Result<BigRational> {
    claim3_closed(k, p)
}

/// Whether `g_k(p) ≥ g_k(p+1)` for every `p ∈ [0, k−2]`.
pub fn g_monotone_check(k: usize) -> Result<bool> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let values = (0..k).map(|p| g_value(k, p)).collect::<Result<Vec<_>>>()?;
    Ok(values.windows(2).all(|w| w[0] >= w[1]))
}

/// Selection settings with a known impossibility region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Setting {
    Sel1,
    Sel1Plurality,
    Sel2,
    Sel3,
}

impl Setting {
    pub const ALL: [Setting; 4] = [Setting::Sel1, Setting::Sel1Plurality, Setting::Sel2, Setting::Sel3];

    pub fn k(self) -> usize {
        match self {
            Setting::Sel1 | Setting::Sel1Plurality => 1,
            Setting::Sel2 => 2,
            Setting::Sel3 => 3,
        }
    }

    /// The instance family whose graphs prove the region.
    pub fn family(self) -> FamilyId {
        match self {
            Setting::Sel1 => FamilyId::Fig3OneSel,
            Setting::Sel1Plurality => FamilyId::Fig4Plurality,
            Setting::Sel2 => FamilyId::Fig5TwoSel,
            Setting::Sel3 => FamilyId::Fig6ThreeSel,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Setting::Sel1 => "SEL1",
            Setting::Sel1Plurality => "SEL1_PLURALITY",
            Setting::Sel2 => "SEL2",
            Setting::Sel3 => "SEL3",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|st| st.name() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown setting '{s}' (SEL1, SEL1_PLURALITY, SEL2, SEL3)")))
    }
}

/// `c_α·α + c_β·β ≤ bound`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearConstraint {
    #[serde(with = "crate::rational::as_string")]
    pub coef_alpha: BigRational,
    #[serde(with = "crate::rational::as_string")]
    pub coef_beta: BigRational,
    #[serde(with = "crate::rational::as_string")]
    pub bound: BigRational,
}

impl LinearConstraint {
    fn new(a: i64, b: i64, bound: BigRational) -> Self {
        Self { coef_alpha: from_int(a), coef_beta: from_int(b), bound }
    }

    pub fn lhs(&self, alpha: &BigRational, beta: &BigRational) -> BigRational {
        &self.coef_alpha * alpha + &self.coef_beta * beta
    }

    pub fn holds(&self, alpha: &BigRational, beta: &BigRational) -> bool {
        self.lhs(alpha, beta) <= self.bound
    }
}

impl fmt::Display for LinearConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term = |c: &BigRational, name: &str| -> Option<String> {
            if c.is_zero() {
                None
            } else if c.is_one() {
                Some(name.to_string())
            } else {
                Some(format!("{}{name}", render(c)))
            }
        };
        let terms: Vec<String> = [term(&self.coef_alpha, "α"), term(&self.coef_beta, "β")].into_iter().flatten().collect();
        write!(f, "{} <= {}", terms.join(" + "), render(&self.bound))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundRegion {
    pub setting: Setting,
    pub constraints: Vec<LinearConstraint>,
}

impl BoundRegion {
    pub fn contains(&self, alpha: &BigRational, beta: &BigRational) -> bool {
        self.constraints.iter().all(|c| c.holds(alpha, beta))
    }
}

pub fn upper_bound_region(setting: Setting) -> BoundRegion {
    let constraints = match setting {
        Setting::Sel1 => vec![LinearConstraint::new(0, 1, ratio(1, 2)), LinearConstraint::new(1, 1, ratio(1, 1))],
        Setting::Sel1Plurality | Setting::Sel2 => {
            vec![LinearConstraint::new(0, 1, ratio(3, 4)), LinearConstraint::new(1, 1, ratio(3, 2))]
        }
        Setting::Sel3 => vec![
            LinearConstraint::new(0, 1, ratio(4, 5)),
            LinearConstraint::new(4, 3, ratio(6, 1)),
            LinearConstraint::new(4, 21, ratio(20, 1)),
        ],
    };
    BoundRegion { setting, constraints }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(kind: GuaranteeKind, params: GuaranteeParams) -> (BigRational, BigRational) {
        let g = guarantee_pair(kind, &params).unwrap();
        (g.alpha, g.beta)
    }

    #[test]
    fn printed_partition_values() {
        let half = || GuaranteeParams::default().rho(ratio(1, 2));
        let one = || GuaranteeParams::default().rho(ratio(1, 1));
        assert_eq!(pair(GuaranteeKind::RhoPartition, half().k(3)), (ratio(5, 6), ratio(19, 36)));
        assert_eq!(pair(GuaranteeKind::RhoPartition, one().k(2)).1, ratio(1, 4));
        assert_eq!(pair(GuaranteeKind::KPartitionBaseline, GuaranteeParams::default().k(3)).0, ratio(65, 108));
    }

    #[test]
    fn plurality_betas() {
        assert_eq!(one_permutation_beta(2).unwrap(), ratio(1, 2));
        assert_eq!(one_permutation_beta(3).unwrap(), ratio(5, 9));
        assert!(one_permutation_beta(1).is_err());
        for d in 2..=200 {
            assert!(one_permutation_beta(d + 1).unwrap() >= one_permutation_beta(d).unwrap());
        }
    }

    #[test]
    fn plurality_mixture_is_the_convex_combination() {
        // Independent oracle: mix 1-consistency/β₁ with β₂ directly.
        for delta in 2..=30 {
            for rho in [ratio(0, 1), ratio(1, 3), ratio(1, 2), ratio(1, 1)] {
                let b1 = one_permutation_beta(delta).unwrap();
                let b2 = uniform_permutation_plurality_beta(delta).unwrap();
                let rest = BigRational::one() - &rho;
                let (a, b) = pair(GuaranteeKind::PluralityMixture, GuaranteeParams::default().rho(rho.clone()).delta(delta));
                assert_eq!(a, &rho + &b2 * &rest, "alpha at Δ={delta}");
                assert_eq!(b, &rho * b1 + b2 * rest, "beta at Δ={delta}");
            }
        }
    }

    #[test]
    fn rho_range_enforced() {
        let low = GuaranteeParams::default().rho(ratio(1, 3));
        assert!(guarantee_pair(GuaranteeKind::RhoPermutation, &low).is_err());
        assert!(guarantee_pair(GuaranteeKind::RhoPartition, &low.clone().k(2)).is_err());
        assert!(guarantee_pair(GuaranteeKind::RhoPermutation, &GuaranteeParams::default()).is_err());
        assert!(guarantee_pair(GuaranteeKind::DetK, &GuaranteeParams::default().k(1)).is_err());
    }

    #[test]
    fn smoothness_examples() {
        assert_eq!(smoothness(&ratio(1, 1), &ratio(1, 2), &ratio(2, 5)).unwrap(), ratio(3, 5));
        assert_eq!(smoothness(&ratio(3, 4), &ratio(1, 2), &ratio(0, 1)).unwrap(), ratio(3, 4));
        assert_eq!(smoothness(&ratio(3, 4), &ratio(1, 2), &ratio(1, 1)).unwrap(), ratio(1, 2));
        assert!(smoothness(&ratio(3, 2), &ratio(1, 2), &ratio(0, 1)).is_err());
    }

    #[test]
    fn claim3_examples() {
        assert_eq!(claim3_closed(1, 0).unwrap(), ratio(1, 1));
        assert_eq!(claim3_closed(2, 1).unwrap(), ratio(3, 4));
        assert_eq!(claim3_direct(2, 0).unwrap(), ratio(3, 4));
        assert_eq!(claim3_direct(3, 0).unwrap(), ratio(19, 27));
        assert!(claim3_closed(3, 3).is_err());
        assert!(g_monotone_check(1).unwrap());
    }

    #[test]
    fn regions() {
        let r1 = upper_bound_region(Setting::Sel1);
        assert_eq!(r1.constraints.len(), 2);
        assert!(r1.contains(&ratio(2, 3), &ratio(1, 3)));
        assert_eq!(r1.constraints[1].lhs(&ratio(2, 3), &ratio(1, 3)), ratio(1, 1));
        assert!(!r1.contains(&ratio(1, 1), &ratio(1, 2)));
        assert_eq!(upper_bound_region(Setting::Sel3).constraints[2].to_string(), "4α + 21β <= 20");
        assert_eq!("sel1-plurality".parse::<Setting>().unwrap(), Setting::Sel1Plurality);
    }
}
