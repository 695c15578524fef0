use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use super::system::{FiniteMps, MeasurableSet, PERIOD_CAP};
use super::DynamicsError;

/// Periodic subset of `ℕ = {1, 2, …}`: `n` is a member iff `n mod period` is
/// one of the residues (residue 0 standing for the multiples of `period`).
///
/// Equality is semantic: two values are equal when they describe the same
/// subset of `ℕ`, whatever periods they carry.
#[derive(Debug, Clone)]
pub struct ReturnSet {
    period: u64,
    pattern: Vec<bool>,
}

impl ReturnSet {
    pub fn new(
        period: u64,
        residues: impl IntoIterator<Item = u64>,
    ) -> Result<Self, DynamicsError> {
        check_period(period)?;
        let mut pattern = vec![false; period as usize];
        for r in residues {
            pattern[(r % period) as usize] = true;
        }
        Ok(ReturnSet { period, pattern })
    }

    fn from_fn(period: u64, f: impl Fn(u64) -> bool) -> Result<Self, DynamicsError> {
        check_period(period)?;
        Ok(ReturnSet {
            period,
            pattern: (0..period).map(f).collect(),
        })
    }

    /// `dℕ`.
    pub fn multiples(d: u64) -> Result<Self, DynamicsError> {
        ReturnSet::new(d, [0])
    }

    /// All of `ℕ`.
    pub fn all() -> Self {
        ReturnSet {
            period: 1,
            pattern: vec![true],
        }
    }

    pub fn empty() -> Self {
        ReturnSet {
            period: 1,
            pattern: vec![false],
        }
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    /// Residues in `0..period`, ascending.
    pub fn residues(&self) -> Vec<u64> {
        (0..self.period)
            .filter(|&r| self.pattern[r as usize])
            .collect()
    }

    pub fn contains(&self, n: u64) -> bool {
        n != 0 && self.pattern[(n % self.period) as usize]
    }

    pub fn contains_big(&self, n: &BigUint) -> bool {
        if n.is_zero() {
            return false;
        }
        let r = (n % self.period).to_u64().expect("residue below period");
        self.pattern[r as usize]
    }

    pub fn is_empty(&self) -> bool {
        !self.pattern.iter().any(|&b| b)
    }

    pub fn is_all(&self) -> bool {
        self.pattern.iter().all(|&b| b)
    }

    /// Members in `1..=bound`.
    pub fn members_up_to(&self, bound: u64) -> Vec<u64> {
        (1..=bound).filter(|&n| self.contains(n)).collect()
    }

    /// Smallest member, if any.
    pub fn first(&self) -> Option<u64> {
        (1..=self.period).find(|&n| self.contains(n))
    }

    /// `{ n : n + shift ∈ self }`.
    pub fn shift(&self, shift: u64) -> ReturnSet {
        let p = self.period;
        ReturnSet {
            period: p,
            pattern: (0..p)
                .map(|r| self.pattern[((r + shift % p) % p) as usize])
                .collect(),
        }
    }

    /// `m⁻¹E = { n : m·n ∈ E }`.
    pub fn dilation_preimage(&self, m: u64) -> ReturnSet {
        let p = self.period;
        let m = m % p;
        ReturnSet {
            period: p,
            pattern: (0..p)
                .map(|r| self.pattern[((r * m) % p) as usize])
                .collect(),
        }
    }

    pub fn intersect(&self, other: &ReturnSet) -> Result<ReturnSet, DynamicsError> {
        self.combine(other, |a, b| a && b)
    }

    pub fn union(&self, other: &ReturnSet) -> Result<ReturnSet, DynamicsError> {
        self.combine(other, |a, b| a || b)
    }

    fn combine(
        &self,
        other: &ReturnSet,
        op: impl Fn(bool, bool) -> bool,
    ) -> Result<ReturnSet, DynamicsError> {
        let (a, b) = (self.canonical(), other.canonical());
        let period = a.period.lcm(&b.period);
        ReturnSet::from_fn(period, |r| {
            op(
                a.pattern[(r % a.period) as usize],
                b.pattern[(r % b.period) as usize],
            )
        })
    }

    pub fn is_subset(&self, other: &ReturnSet) -> Result<bool, DynamicsError> {
        Ok(self.intersect(other)? == *self)
    }

    /// The same set written with its minimal period.
    pub fn canonical(&self) -> ReturnSet {
        let p = self.period;
        for q in (1..=p).filter(|q| p.is_multiple_of(*q)) {
            if (0..p).all(|r| self.pattern[r as usize] == self.pattern[(r % q) as usize]) {
                return ReturnSet {
                    period: q,
                    pattern: self.pattern[..q as usize].to_vec(),
                };
            }
        }
        unreachable!("q = p always matches")
    }
}

fn check_period(period: u64) -> Result<(), DynamicsError> {
    if period == 0 {
        return Err(DynamicsError::ZeroPeriod);
    }
    if period > PERIOD_CAP {
        return Err(DynamicsError::PeriodCap {
            period,
            cap: PERIOD_CAP,
        });
    }
    Ok(())
}

impl PartialEq for ReturnSet {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (self.canonical(), other.canonical());
        a.period == b.period && a.pattern == b.pattern
    }
}

impl Eq for ReturnSet {}

impl fmt::Display for ReturnSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let residues: Vec<String> = self.residues().iter().map(ToString::to_string).collect();
        write!(
            f,
            "period={} residues={{{}}}",
            self.period,
            residues.join(",")
        )
    }
}

/// `{ n ≥ 1 : μ(A ∩ T^{-n} B) > 0 }`.
pub fn return_set(
    s: &FiniteMps,
    a: &MeasurableSet,
    b: &MeasurableSet,
) -> Result<ReturnSet, DynamicsError> {
    multi_return_set(s, &[a.clone(), b.clone()])
}

/// `{ n ≥ 1 : μ(⋂_{i=0}^{k} T^{-in} A_i) > 0 }` with `k = sets.len() - 1`,
/// reported with period equal to the order of the permutation.
///
/// Mass is constant on each cycle, so the intersection has positive measure
/// iff some point `x ∈ A_0` on a positive-mass cycle of length `c` has
/// `T^{in}x ∈ A_i` for all `i`; that condition depends only on `n mod c`.
pub fn multi_return_set(s: &FiniteMps, sets: &[MeasurableSet]) -> Result<ReturnSet, DynamicsError> {
    let (first, rest) = sets.split_first().ok_or(DynamicsError::NoSets)?;
    for a in sets {
        s.check_set(a)?;
    }
    // cycle length -> residues mod that length that work for some point
    let mut good: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
    for cycle in s.cycles() {
        let c = cycle.len();
        if s.mass()[cycle[0]].is_zero() {
            continue;
        }
        let entry = good.entry(c).or_insert_with(|| vec![false; c]);
        for (pos, &x) in cycle.iter().enumerate() {
            if !first.contains(x) {
                continue;
            }
            for (j, slot) in entry.iter_mut().enumerate() {
                if *slot {
                    continue;
                }
                *slot = rest
                    .iter()
                    .enumerate()
                    .all(|(i, a)| a.contains(cycle[(pos + (i + 1) * j) % c]));
            }
        }
    }
    ReturnSet::from_fn(s.period(), |r| {
        good.iter()
            .any(|(&c, residues)| residues[(r % c as u64) as usize])
    })
}

/// `{ n : m·n ∈ rs }`.
pub fn dilation_preimage(rs: &ReturnSet, m: u64) -> ReturnSet {
    rs.dilation_preimage(m)
}
