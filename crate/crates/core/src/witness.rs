//! The set `A = { Σ_{t∈H₁} 2^{2t} + Σ_{t∈H₂} 2^{2t+1} : H₁ < H₂ }` of block
//! sums of the two canonical sequences `⟨2^{2t}⟩` and `⟨2^{2t+1}⟩`.
//!
//! `A` contains `FS` of an `r`-term sequence for every `r` (see
//! [`ipr_witness`]) but contains no full `FS` of an infinite sequence; its
//! complement `B` is therefore IP* without being IP²*. The functions here
//! decide membership exactly, produce the finite witnesses, search for
//! escaping finite sums, and certify that zigzag sums of any sum subsystems
//! of the canonical sequences land in `A`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::cert::{decimal_strings, CertificateRecord};
use crate::sets::{fs_enumerate, subsets_by_size, Block, BlockChain, FinSeq, SetsError};

/// Default upper limit accepted by [`enumerate_a`].
pub const ENUMERATE_CAP: u64 = 1 << 30;
/// Default largest `r` accepted by [`ipr_witness`].
pub const WITNESS_CAP: usize = 20;
/// Default longest sequence accepted by [`refute_ip`].
pub const REFUTE_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("{what} {requested} exceeds the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        requested: u64,
        cap: u64,
    },
    #[error("witness for r = {r} ({formula}) fails: finite sum {value} is not in A")]
    VerificationFailed {
        r: usize,
        formula: WitnessFormula,
        value: BigUint,
    },
    #[error("sequence entry {index} = {value} is not in A")]
    EntryNotInA { index: usize, value: BigUint },
    #[error(
        "no block of the second chain past index 1 starts after {max_first}; supply a deeper chain"
    )]
    NoSuitableBlock { max_first: usize },
    #[error("chain is empty")]
    EmptyChain,
    #[error("certificate does not verify: {0}")]
    Rejected(String),
    #[error(transparent)]
    Sets(#[from] SetsError),
}

/// Positions of the set bits of `n`, ascending.
pub fn bit_positions(n: &BigUint) -> Vec<usize> {
    let mut out = Vec::new();
    for (word, digit) in n.iter_u64_digits().enumerate() {
        let mut d = digit;
        while d != 0 {
            let b = d.trailing_zeros() as usize;
            out.push(word * 64 + b);
            d &= d - 1;
        }
    }
    out
}

/// `Σ_{t∈block} 2^{2t}`.
pub fn even_block_value(block: &Block) -> BigUint {
    block
        .iter()
        .fold(BigUint::zero(), |acc, t| acc + (BigUint::one() << (2 * t)))
}

/// `Σ_{t∈block} 2^{2t+1}`.
pub fn odd_block_value(block: &Block) -> BigUint {
    block.iter().fold(BigUint::zero(), |acc, t| {
        acc + (BigUint::one() << (2 * t + 1))
    })
}

/// `⟨2^{2t}⟩_{t=1}^{depth}`.
pub fn even_powers(depth: usize) -> FinSeq {
    FinSeq::new((1..=depth).map(|t| BigUint::one() << (2 * t)).collect())
        .expect("depth must be positive")
}

/// `⟨2^{2t+1}⟩_{t=1}^{depth}`.
pub fn odd_powers(depth: usize) -> FinSeq {
    FinSeq::new((1..=depth).map(|t| BigUint::one() << (2 * t + 1)).collect())
        .expect("depth must be positive")
}

/// The pair `(H₁, H₂)` exhibiting `n ∈ A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvenOddDecomp {
    pub h1: Block,
    pub h2: Block,
}

impl EvenOddDecomp {
    /// Reassembles `Σ_{H₁} 2^{2t} + Σ_{H₂} 2^{2t+1}`.
    pub fn value(&self) -> BigUint {
        even_block_value(&self.h1) + odd_block_value(&self.h2)
    }
}

impl fmt::Display for EvenOddDecomp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "H1={}, H2={}", self.h1, self.h2)
    }
}

/// Splits the binary support of `n` into even and odd exponents.
///
/// Returns `None` unless both parts are nonempty, no exponent is 0 or 1, and
/// every even-derived index is below every odd-derived one. Binary expansions
/// are unique, so the decomposition is too.
pub fn decompose(n: &BigUint) -> Option<EvenOddDecomp> {
    let mut evens = Vec::new();
    let mut odds = Vec::new();
    for e in bit_positions(n) {
        match e {
            0 | 1 => return None,
            e if e % 2 == 0 => evens.push(e / 2),
            e => odds.push((e - 1) / 2),
        }
    }
    let (&max_h1, &min_h2) = (evens.last()?, odds.first()?);
    if max_h1 >= min_h2 {
        return None;
    }
    Some(EvenOddDecomp {
        h1: Block::new(evens).ok()?,
        h2: Block::new(odds).ok()?,
    })
}

pub fn member_a(n: &BigUint) -> bool {
    decompose(n).is_some()
}

/// Membership in the complement `B = ℕ ∖ A`; 0 is not a natural number here.
pub fn member_b(n: &BigUint) -> bool {
    !n.is_zero() && !member_a(n)
}

/// Every member of `A` up to `limit`, ascending, with the default cap.
pub fn enumerate_a(limit: u64) -> Result<Vec<BigUint>, WitnessError> {
    enumerate_a_capped(limit, ENUMERATE_CAP)
}

/// Lists `A ∩ [1, limit]` by walking block pairs `H₁ < H₂` directly, without
/// going through [`decompose`].
pub fn enumerate_a_capped(limit: u64, cap: u64) -> Result<Vec<BigUint>, WitnessError> {
    if limit > cap || cap > 1 << 62 {
        return Err(WitnessError::CapExceeded {
            what: "limit",
            requested: limit,
            cap: cap.min(1 << 62),
        });
    }
    let limit = u128::from(limit);
    let mut out: Vec<u128> = Vec::new();
    // a = max H₁; the cheapest completion is H₂ = {a + 1}.
    for a in 1u32.. {
        let top = 1u128 << (2 * a);
        let cheapest_odd = 1u128 << (2 * (a + 1) + 1);
        if top + cheapest_odd > limit {
            break;
        }
        for mask in 0u128..(1u128 << (a - 1)) {
            let mut even = top;
            for t in 1..a {
                if mask >> (t - 1) & 1 == 1 {
                    even += 1u128 << (2 * t);
                }
            }
            if even + cheapest_odd > limit {
                continue;
            }
            push_odd_parts(a + 1, even, false, limit, &mut out);
        }
    }
    out.sort_unstable();
    Ok(out.into_iter().map(BigUint::from).collect())
}

fn push_odd_parts(from: u32, acc: u128, nonempty: bool, limit: u128, out: &mut Vec<u128>) {
    if nonempty {
        out.push(acc);
    }
    for t in from.. {
        let v = 1u128 << (2 * t + 1);
        if acc + v > limit {
            break;
        }
        push_odd_parts(t + 1, acc + v, true, limit, out);
    }
}

/// Which closed form generates the `IP_r` witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessFormula {
    /// `x_i = 2^{2i} + 2^{2(r+i)+1}`.
    Repaired,
    /// `x_i = 2^{2i} + 2^{2(r+1)+i}`; its second exponent is even whenever `i` is.
    AsPrinted,
}

impl WitnessFormula {
    pub fn term(self, r: usize, i: usize) -> BigUint {
        let second = match self {
            WitnessFormula::Repaired => 2 * (r + i) + 1,
            WitnessFormula::AsPrinted => 2 * (r + 1) + i,
        };
        (BigUint::one() << (2 * i)) + (BigUint::one() << second)
    }
}

impl fmt::Display for WitnessFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WitnessFormula::Repaired => "2^(2i) + 2^(2(r+i)+1)",
            WitnessFormula::AsPrinted => "2^(2i) + 2^(2(r+1)+i)",
        })
    }
}

/// An `r`-term sequence whose finite sums all lie in `A`, checked before it
/// is returned.
pub fn ipr_witness(r: usize) -> Result<FinSeq, WitnessError> {
    ipr_witness_with(r, WitnessFormula::Repaired)
}

pub fn ipr_witness_with(r: usize, formula: WitnessFormula) -> Result<FinSeq, WitnessError> {
    if r == 0 || r > WITNESS_CAP {
        return Err(WitnessError::CapExceeded {
            what: "r",
            requested: r as u64,
            cap: WITNESS_CAP as u64,
        });
    }
    let seq = FinSeq::new((1..=r).map(|i| formula.term(r, i)).collect())?;
    if let Some(bad) = fs_enumerate(&seq)?.into_iter().find(|v| !member_a(v)) {
        return Err(WitnessError::VerificationFailed {
            r,
            formula,
            value: bad,
        });
    }
    Ok(seq)
}

/// Why an escaping finite sum leaves `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefutationReason {
    /// Summands have disjoint binary supports and the merged even and odd
    /// index sets are no longer ordered.
    CaseI,
    /// The sum has only odd exponents, so its `H₁` would be empty.
    CaseII,
    /// Anything else, including sums whose carries reshape the support.
    General,
}

impl fmt::Display for RefutationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefutationReason::CaseI => "case-I",
            RefutationReason::CaseII => "case-II",
            RefutationReason::General => "general",
        })
    }
}

/// A finite sum of the input sequence that is not in `A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefutationCertificate {
    pub subset: Block,
    pub value: BigUint,
    pub reason: RefutationReason,
}

impl RefutationCertificate {
    /// Recomputes the subset sum and checks it escapes `A`.
    pub fn verify(&self, seq: &FinSeq) -> Result<(), WitnessError> {
        let sum = seq.sum_over(self.subset.iter())?;
        if sum != self.value {
            return Err(WitnessError::Rejected(format!(
                "subset {} sums to {sum}, certificate claims {}",
                self.subset, self.value
            )));
        }
        if member_a(&sum) {
            return Err(WitnessError::Rejected(format!("{sum} is in A")));
        }
        Ok(())
    }

    pub fn record(&self, seq: &FinSeq) -> CertificateRecord {
        CertificateRecord {
            kind: "ip-refutation".into(),
            inputs: json!({ "sequence": decimal_strings(seq.entries()) }),
            value: self.value.to_string(),
            blocks: vec![self.subset.to_vec()],
            reason: Some(self.reason.to_string()),
            verified: true,
        }
    }
}

fn classify(seq: &FinSeq, subset: &[usize], sum: &BigUint) -> RefutationReason {
    let bits = bit_positions(sum);
    if bits.iter().all(|e| e % 2 == 1) {
        return RefutationReason::CaseII;
    }
    let parts: Vec<&BigUint> = subset.iter().map(|&i| &seq.entries()[i - 1]).collect();
    let disjoint = parts
        .iter()
        .enumerate()
        .all(|(i, a)| parts[i + 1..].iter().all(|b| (*a & *b).is_zero()));
    if disjoint {
        let max_even = bits.iter().filter(|e| *e % 2 == 0).max();
        let min_odd = bits.iter().filter(|e| *e % 2 == 1).min();
        if let (Some(&me), Some(&mo)) = (max_even, min_odd) {
            if me / 2 >= (mo - 1) / 2 {
                return RefutationReason::CaseI;
            }
        }
    }
    RefutationReason::General
}

/// Searches the finite sums of `seq` for one outside `A`: smallest subsets
/// first, lexicographic within a size. Every entry must itself be in `A`.
pub fn refute_ip(seq: &FinSeq) -> Result<Option<RefutationCertificate>, WitnessError> {
    if seq.len() > REFUTE_CAP {
        return Err(WitnessError::CapExceeded {
            what: "sequence length",
            requested: seq.len() as u64,
            cap: REFUTE_CAP as u64,
        });
    }
    for (i, x) in seq.entries().iter().enumerate() {
        if !member_a(x) {
            return Err(WitnessError::EntryNotInA {
                index: i + 1,
                value: x.clone(),
            });
        }
    }
    for subset in subsets_by_size(seq.len()).skip(seq.len()) {
        let sum = seq.sum_over(subset.iter().copied())?;
        if !member_a(&sum) {
            let reason = classify(seq, &subset, &sum);
            return Ok(Some(RefutationCertificate {
                subset: Block::new(subset)?,
                value: sum,
                reason,
            }));
        }
    }
    Ok(None)
}

/// `y^{(1)}_1 + y^{(2)}_k ∈ A` for sum subsystems `y^{(1)}` of `⟨2^{2t}⟩`
/// and `y^{(2)}` of `⟨2^{2t+1}⟩`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZigzagHitCertificate {
    pub index_pair: (usize, usize),
    pub block_a: Block,
    pub block_b: Block,
    pub value: BigUint,
    pub decomp: EvenOddDecomp,
}

impl ZigzagHitCertificate {
    /// Recomputes the block sum and its decomposition.
    pub fn verify(&self) -> Result<(), WitnessError> {
        let (one, k) = self.index_pair;
        if one != 1 || k < 2 {
            return Err(WitnessError::Rejected(format!(
                "index pair ({one}, {k}) is not a two-element zigzag index set starting at 1"
            )));
        }
        if !self.block_a.precedes(&self.block_b) {
            return Err(WitnessError::Rejected(format!(
                "{} does not precede {}",
                self.block_a, self.block_b
            )));
        }
        let recomputed = even_block_value(&self.block_a) + odd_block_value(&self.block_b);
        if recomputed != self.value {
            return Err(WitnessError::Rejected(format!(
                "blocks sum to {recomputed}, certificate claims {}",
                self.value
            )));
        }
        match decompose(&self.value) {
            Some(d) if d == self.decomp && d.value() == self.value => Ok(()),
            Some(d) => Err(WitnessError::Rejected(format!(
                "decomposition is {d}, certificate claims {}",
                self.decomp
            ))),
            None => Err(WitnessError::Rejected(format!(
                "{} is not in A",
                self.value
            ))),
        }
    }

    pub fn record(&self, chain1: &BlockChain, chain2: &BlockChain) -> CertificateRecord {
        CertificateRecord {
            kind: "zigzag-hit".into(),
            inputs: json!({
                "chain1": chain1,
                "chain2": chain2,
                "index_pair": [self.index_pair.0, self.index_pair.1],
            }),
            value: self.value.to_string(),
            blocks: vec![self.block_a.to_vec(), self.block_b.to_vec()],
            reason: None,
            verified: true,
        }
    }
}

/// Exhibits the zigzag sum over `H = {1, k}` (sequence 1 at index 1,
/// sequence 2 at index `k`) for the least `k ≥ 2` whose block in `chain2`
/// starts after the first block of `chain1`.
pub fn zigzag_hit_certificate(
    chain1: &BlockChain,
    chain2: &BlockChain,
) -> Result<ZigzagHitCertificate, WitnessError> {
    let first = chain1.block(1).ok_or(WitnessError::EmptyChain)?;
    if chain2.is_empty() {
        return Err(WitnessError::EmptyChain);
    }
    let (pos, block_b) = chain2
        .blocks()
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, b)| b.min() > first.max())
        .ok_or(WitnessError::NoSuitableBlock {
            max_first: first.max(),
        })?;
    let value = even_block_value(first) + odd_block_value(block_b);
    let decomp = decompose(&value).ok_or_else(|| {
        WitnessError::Rejected(format!("block sum {value} unexpectedly outside A"))
    })?;
    let cert = ZigzagHitCertificate {
        index_pair: (1, pos + 1),
        block_a: first.clone(),
        block_b: block_b.clone(),
        value,
        decomp,
    };
    cert.verify()?;
    Ok(cert)
}
