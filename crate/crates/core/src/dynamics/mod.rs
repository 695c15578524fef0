//! Finite measure-preserving systems with exact rational measures and their
//! recurrence sets.
//!
//! A system is a permutation of `0..m` with an invariant probability mass.
//! Because `T^n` depends only on `n` modulo the order of the permutation,
//! every recurrence set `{ n : μ(⋂ T^{-in} A_i) > 0 }` is periodic and is
//! represented exactly by a [`ReturnSet`]. Product and power systems,
//! dilation preimages and shifts of return sets are all exact, so the
//! closure identities behind multiple-recurrence families can be checked as
//! equalities.
//!
//! Mild mixing is not modelled: no nontrivial finite system is mild mixing,
//! and the defining ε-condition is not decidable from finite data. Only the
//! constructions it is closed under (products and powers) are provided.

mod recurrence;
mod system;

pub use recurrence::{dilation_preimage, multi_return_set, return_set, ReturnSet};
pub use system::{
    mps_power, mps_product, mps_rotation, FiniteMps, MeasurableSet, PERIOD_CAP, SIZE_CAP,
};

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use thiserror::Error;

use crate::sets::{subsets_by_size, FinSeq};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DynamicsError {
    #[error("a system needs at least one point")]
    EmptySystem,
    #[error("system size {size} exceeds the cap of {cap} points")]
    SizeCap { size: u64, cap: u64 },
    #[error("permutation order {period} exceeds the cap of {cap}")]
    PeriodCap { period: u64, cap: u64 },
    #[error("period must be positive")]
    ZeroPeriod,
    #[error("expected {expected} masses, found {found}")]
    MassLength { expected: usize, found: usize },
    #[error("map is not a bijection (image {image} repeated or out of range)")]
    NotBijection { image: usize },
    #[error("mass at point {point} is negative")]
    NegativeMass { point: usize },
    #[error("masses sum to {0}, not 1")]
    MassTotal(String),
    #[error("mass is not invariant: point {point} and its image differ")]
    NotInvariant { point: usize },
    #[error("point {point} is outside a system of size {size}")]
    PointOutOfRange { point: usize, size: usize },
    #[error("set is over {found} points, system has {expected}")]
    SetSize { expected: usize, found: usize },
    #[error("at least one set is required")]
    NoSets,
    #[error("power must be positive")]
    ZeroPower,
    #[error("measure {0} is outside (0, 1]")]
    MeasureOutOfRange(String),
    #[error("trial {trial} has length {len}, expected {r}")]
    TrialLength { trial: usize, len: usize, r: usize },
    #[error("trial {trial} {sequence} misses the return set although r·μ(A) > 1")]
    PigeonholeViolation { trial: usize, sequence: String },
    #[error("malformed system description: {0}")]
    Parse(String),
}

/// Least `r` with `r · μ > 1`, computed exactly as `⌊1/μ⌋ + 1`.
pub fn pigeonhole_r(mu: &BigRational) -> Result<u64, DynamicsError> {
    if !mu.is_positive() || *mu > BigRational::one() {
        return Err(DynamicsError::MeasureOutOfRange(mu.to_string()));
    }
    let (q, _) = mu.denom().div_rem(mu.numer());
    (q + 1u8)
        .to_u64()
        .ok_or_else(|| DynamicsError::MeasureOutOfRange(mu.to_string()))
}

/// Outcome of one trial in [`check_ipr_star`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    pub trial: usize,
    /// First subset (smallest size, then lexicographic) whose sum lies in
    /// the return set, with that sum.
    pub hit: Option<(Vec<usize>, BigUint)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IprStarReport {
    pub r: usize,
    pub outcomes: Vec<TrialOutcome>,
}

impl IprStarReport {
    pub fn hits(&self) -> usize {
        self.outcomes.iter().filter(|o| o.hit.is_some()).count()
    }

    pub fn misses(&self) -> impl Iterator<Item = &TrialOutcome> {
        self.outcomes.iter().filter(|o| o.hit.is_none())
    }

    pub fn all_hit(&self) -> bool {
        self.outcomes.iter().all(|o| o.hit.is_some())
    }
}

/// Tests, for each `r`-term trial, whether `FS(trial)` meets `rs`.
pub fn check_ipr_star(
    rs: &ReturnSet,
    r: usize,
    trials: &[FinSeq],
) -> Result<IprStarReport, DynamicsError> {
    let mut outcomes = Vec::with_capacity(trials.len());
    for (trial, seq) in trials.iter().enumerate() {
        if seq.len() != r {
            return Err(DynamicsError::TrialLength {
                trial,
                len: seq.len(),
                r,
            });
        }
        let hit = subsets_by_size(r).find_map(|subset| {
            let sum = seq
                .sum_over(subset.iter().copied())
                .expect("subset indices within length");
            rs.contains_big(&sum).then_some((subset, sum))
        });
        outcomes.push(TrialOutcome { trial, hit });
    }
    Ok(IprStarReport { r, outcomes })
}

/// Runs [`check_ipr_star`] on `{ n : μ(A ∩ T^{-n}A) > 0 }` with
/// `r = pigeonhole_r(μ(A))`. Any miss contradicts the pigeonhole bound and
/// is returned as an error.
pub fn pigeonhole_check(
    s: &FiniteMps,
    a: &MeasurableSet,
    trials: &[FinSeq],
) -> Result<IprStarReport, DynamicsError> {
    let r = pigeonhole_r(&s.measure(a))? as usize;
    let rs = return_set(s, a, a)?;
    let report = check_ipr_star(&rs, r, trials)?;
    if let Some(miss) = report.misses().next() {
        return Err(DynamicsError::PigeonholeViolation {
            trial: miss.trial,
            sequence: trials[miss.trial].to_string(),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn pigeonhole_values() {
        assert_eq!(pigeonhole_r(&q(1, 4)).unwrap(), 5);
        assert_eq!(pigeonhole_r(&q(1, 1)).unwrap(), 2);
        assert_eq!(pigeonhole_r(&q(2, 3)).unwrap(), 2);
        assert_eq!(pigeonhole_r(&q(3, 10)).unwrap(), 4);
        assert!(pigeonhole_r(&q(0, 1)).is_err());
        assert!(pigeonhole_r(&q(-1, 2)).is_err());
        assert!(pigeonhole_r(&q(3, 2)).is_err());
    }

    #[test]
    fn pigeonhole_r_is_least() {
        for d in 1..40i64 {
            for n in 1..=d {
                let mu = q(n, d);
                let r = pigeonhole_r(&mu).unwrap() as i64;
                assert!(q(r, 1) * &mu > q(1, 1));
                assert!(q(r - 1, 1) * &mu <= q(1, 1));
            }
        }
    }

    #[test]
    fn ipr_star_examples() {
        let four = ReturnSet::multiples(4).unwrap();
        let trials = vec![
            FinSeq::from_u64s(&[1, 1, 1, 1, 1]).unwrap(),
            FinSeq::from_u64s(&[3, 5, 2, 7, 11]).unwrap(),
        ];
        let report = check_ipr_star(&four, 5, &trials).unwrap();
        assert_eq!(
            report.outcomes[0].hit,
            Some((vec![1, 2, 3, 4], BigUint::from(4u8)))
        );
        let (_, sum) = report.outcomes[1].hit.clone().unwrap();
        assert_eq!(sum.clone() % 4u8, BigUint::from(0u8));
        assert_eq!(sum, BigUint::from(8u8));
        let all = check_ipr_star(&ReturnSet::all(), 5, &trials).unwrap();
        assert!(all.all_hit());
    }

    #[test]
    fn ipr_star_reports_misses_and_length_errors() {
        let four = ReturnSet::multiples(4).unwrap();
        let short = vec![FinSeq::from_u64s(&[1, 1, 1]).unwrap()];
        let report = check_ipr_star(&four, 3, &short).unwrap();
        assert_eq!(report.misses().count(), 1);
        assert!(matches!(
            check_ipr_star(&four, 5, &short),
            Err(DynamicsError::TrialLength { .. })
        ));
    }

    #[test]
    fn pigeonhole_check_on_rotation() {
        let s = mps_rotation(4).unwrap();
        let a = MeasurableSet::new(4, [0]).unwrap();
        let trials = vec![FinSeq::from_u64s(&[1, 1, 1, 1, 1]).unwrap()];
        assert!(pigeonhole_check(&s, &a, &trials).unwrap().all_hit());
    }
}
