//! Finite sums and products of finite sequences, together with their zigzag
//! and ordered-block variants.
//!
//! All indices are 1-based. Every enumerator returns a set: duplicate values
//! produced by different index sets collapse. Enumeration is exponential in
//! the sequence length, so each enumerator checks its input against a [`Caps`]
//! value and fails with [`SetsError::CapExceeded`] instead of truncating.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Deduplicated, ascending set of enumerated values.
pub type ValueSet = BTreeSet<BigUint>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SetsError {
    #[error("sequence is empty")]
    EmptySequence,
    #[error("entry {index} is zero; sequence entries must be positive")]
    NonPositiveEntry { index: usize },
    #[error("block is empty")]
    EmptyBlock,
    #[error("block contains index 0; indices start at 1")]
    ZeroIndex,
    #[error("blocks {left} and {right} overlap or are out of order (max {max} >= min {min})")]
    ChainOrder {
        left: usize,
        right: usize,
        max: usize,
        min: usize,
    },
    #[error("index {index} is out of range for a sequence of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("{what} {requested} exceeds the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        cap: usize,
    },
    #[error("at least one sequence is required")]
    NoSequences,
    #[error("sequence {index} has length {len}, shorter than the requested depth {depth}")]
    TooShort {
        index: usize,
        len: usize,
        depth: usize,
    },
}

/// Finite sequence of positive integers, indexed from 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FinSeq {
    entries: Vec<BigUint>,
}

impl FinSeq {
    pub fn new(entries: Vec<BigUint>) -> Result<Self, SetsError> {
        if entries.is_empty() {
            return Err(SetsError::EmptySequence);
        }
        if let Some(pos) = entries.iter().position(Zero::is_zero) {
            return Err(SetsError::NonPositiveEntry { index: pos + 1 });
        }
        Ok(FinSeq { entries })
    }

    pub fn from_u64s(entries: &[u64]) -> Result<Self, SetsError> {
        FinSeq::new(entries.iter().copied().map(BigUint::from).collect())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BigUint] {
        &self.entries
    }

    /// Entry at 1-based `index`.
    pub fn get(&self, index: usize) -> Option<&BigUint> {
        index.checked_sub(1).and_then(|i| self.entries.get(i))
    }

    /// The prefix `x_1, …, x_depth`.
    pub fn truncated(&self, depth: usize) -> Result<FinSeq, SetsError> {
        if depth == 0 {
            return Err(SetsError::EmptySequence);
        }
        if depth > self.len() {
            return Err(SetsError::TooShort {
                index: 1,
                len: self.len(),
                depth,
            });
        }
        Ok(FinSeq {
            entries: self.entries[..depth].to_vec(),
        })
    }

    /// Sum of the entries indexed by `indices`.
    pub fn sum_over(&self, indices: impl IntoIterator<Item = usize>) -> Result<BigUint, SetsError> {
        let mut total = BigUint::zero();
        for i in indices {
            total += self.get(i).ok_or(SetsError::IndexOutOfRange {
                index: i,
                len: self.len(),
            })?;
        }
        Ok(total)
    }
}

impl fmt::Display for FinSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Nonempty finite set of positive indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Block(BTreeSet<usize>);

impl Block {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Result<Self, SetsError> {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        if set.is_empty() {
            return Err(SetsError::EmptyBlock);
        }
        if set.contains(&0) {
            return Err(SetsError::ZeroIndex);
        }
        Ok(Block(set))
    }

    pub fn singleton(index: usize) -> Result<Self, SetsError> {
        Block::new([index])
    }

    /// The consecutive run `first..=last`.
    pub fn run(first: usize, last: usize) -> Result<Self, SetsError> {
        Block::new(first..=last)
    }

    pub fn min(&self) -> usize {
        *self.0.iter().next().expect("blocks are nonempty")
    }

    pub fn max(&self) -> usize {
        *self.0.iter().next_back().expect("blocks are nonempty")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.contains(&index)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.0.iter().copied().collect()
    }

    /// `self < other` in the block order: `max(self) < min(other)`.
    pub fn precedes(&self, other: &Block) -> bool {
        self.max() < other.min()
    }

    /// Whether the indices form one consecutive run.
    pub fn is_run(&self) -> bool {
        self.max() - self.min() + 1 == self.len()
    }
}

impl TryFrom<Vec<usize>> for Block {
    type Error = SetsError;

    fn try_from(v: Vec<usize>) -> Result<Self, Self::Error> {
        Block::new(v)
    }
}

impl From<Block> for Vec<usize> {
    fn from(b: Block) -> Self {
        b.to_vec()
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

/// Blocks `H_1 < H_2 < …` with `max(H_j) < min(H_{j+1})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Block>", into = "Vec<Block>")]
pub struct BlockChain(Vec<Block>);

impl BlockChain {
    pub fn new(blocks: Vec<Block>) -> Result<Self, SetsError> {
        for (j, pair) in blocks.windows(2).enumerate() {
            if !pair[0].precedes(&pair[1]) {
                return Err(SetsError::ChainOrder {
                    left: j + 1,
                    right: j + 2,
                    max: pair[0].max(),
                    min: pair[1].min(),
                });
            }
        }
        Ok(BlockChain(blocks))
    }

    /// Chain of blocks given as index lists.
    pub fn from_indices<I, B>(blocks: I) -> Result<Self, SetsError>
    where
        I: IntoIterator<Item = B>,
        B: IntoIterator<Item = usize>,
    {
        let blocks = blocks
            .into_iter()
            .map(Block::new)
            .collect::<Result<Vec<_>, _>>()?;
        BlockChain::new(blocks)
    }

    /// `({1}, {2}, …, {len})`, the identity subsystem.
    pub fn singletons(len: usize) -> Self {
        BlockChain((1..=len).map(|i| Block(BTreeSet::from([i]))).collect())
    }

    pub fn blocks(&self) -> &[Block] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based access, matching the `H_n` numbering.
    pub fn block(&self, n: usize) -> Option<&Block> {
        n.checked_sub(1).and_then(|i| self.0.get(i))
    }

    pub fn last(&self) -> Option<&Block> {
        self.0.last()
    }

    /// Largest index used by any block, 0 for the empty chain.
    pub fn max_index(&self) -> usize {
        self.0.last().map_or(0, Block::max)
    }

    pub fn push(&mut self, block: Block) -> Result<(), SetsError> {
        if let Some(last) = self.0.last() {
            if !last.precedes(&block) {
                return Err(SetsError::ChainOrder {
                    left: self.0.len(),
                    right: self.0.len() + 1,
                    max: last.max(),
                    min: block.min(),
                });
            }
        }
        self.0.push(block);
        Ok(())
    }

    /// The first `len` blocks.
    pub fn prefix(&self, len: usize) -> BlockChain {
        BlockChain(self.0[..len.min(self.0.len())].to_vec())
    }
}

impl TryFrom<Vec<Block>> for BlockChain {
    type Error = SetsError;

    fn try_from(v: Vec<Block>) -> Result<Self, Self::Error> {
        BlockChain::new(v)
    }
}

impl From<BlockChain> for Vec<Block> {
    fn from(c: BlockChain) -> Self {
        c.0
    }
}

impl fmt::Display for BlockChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

/// `l` sequences sharing the index range `1..=depth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiSeq {
    sequences: Vec<FinSeq>,
}

impl MultiSeq {
    /// Truncates every sequence to the shortest length among them.
    pub fn new(sequences: Vec<FinSeq>) -> Result<Self, SetsError> {
        let depth = sequences
            .iter()
            .map(FinSeq::len)
            .min()
            .ok_or(SetsError::NoSequences)?;
        MultiSeq::with_depth(sequences, depth)
    }

    /// Truncates every sequence to `depth`; all must be at least that long.
    pub fn with_depth(sequences: Vec<FinSeq>, depth: usize) -> Result<Self, SetsError> {
        if sequences.is_empty() {
            return Err(SetsError::NoSequences);
        }
        let sequences = sequences
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.truncated(depth).map_err(|_| SetsError::TooShort {
                    index: i + 1,
                    len: s.len(),
                    depth,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MultiSeq { sequences })
    }

    pub fn width(&self) -> usize {
        self.sequences.len()
    }

    pub fn depth(&self) -> usize {
        self.sequences[0].len()
    }

    pub fn sequences(&self) -> &[FinSeq] {
        &self.sequences
    }

    /// `x_t^{(i)}`, both indices 1-based.
    pub fn get(&self, sequence: usize, t: usize) -> Option<&BigUint> {
        sequence
            .checked_sub(1)
            .and_then(|i| self.sequences.get(i))
            .and_then(|s| s.get(t))
    }
}

/// Additive or multiplicative combination of terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Sum,
    Product,
}

impl Structure {
    fn combine(self, a: &BigUint, b: &BigUint) -> BigUint {
        match self {
            Structure::Sum => a + b,
            Structure::Product => a * b,
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::Sum => "sum",
            Structure::Product => "product",
        })
    }
}

/// Size limits for the exponential enumerators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Maximum sequence length for FS / FP.
    pub fs_len: usize,
    /// Maximum common depth for ZFS / ZFP.
    pub zigzag_depth: usize,
    /// Maximum number of sequences for ZFS / ZFP.
    pub zigzag_width: usize,
    /// Maximum depth for ordered-chain block sums.
    pub ipn_depth: usize,
    /// Maximum number of sequences (chain length) for ordered-chain block sums.
    pub ipn_width: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            fs_len: 24,
            zigzag_depth: 16,
            zigzag_width: 4,
            ipn_depth: 16,
            ipn_width: 4,
        }
    }
}

fn check_cap(what: &'static str, requested: usize, cap: usize) -> Result<(), SetsError> {
    if requested > cap {
        Err(SetsError::CapExceeded {
            what,
            requested,
            cap,
        })
    } else {
        Ok(())
    }
}

/// Closure of a per-index choice list under one structure: every value
/// `combine_{t ∈ H} y_t` with `H` nonempty and `y_t ∈ choices[t]`.
fn choice_closure(choices: &[Vec<&BigUint>], structure: Structure) -> ValueSet {
    let mut acc = ValueSet::new();
    for options in choices {
        let mut next: Vec<BigUint> = Vec::with_capacity((acc.len() + 1) * options.len());
        for &x in options {
            next.push(x.clone());
            next.extend(acc.iter().map(|s| structure.combine(s, x)));
        }
        acc.extend(next);
    }
    acc
}

impl Caps {
    /// `FS(x_1, …, x_r)`: all nonempty-subset sums.
    pub fn fs(&self, seq: &FinSeq) -> Result<ValueSet, SetsError> {
        self.finite(seq, Structure::Sum)
    }

    /// `FP(x_1, …, x_r)`: all nonempty-subset products.
    pub fn fp(&self, seq: &FinSeq) -> Result<ValueSet, SetsError> {
        self.finite(seq, Structure::Product)
    }

    pub fn finite(&self, seq: &FinSeq, structure: Structure) -> Result<ValueSet, SetsError> {
        check_cap("sequence length", seq.len(), self.fs_len)?;
        let choices: Vec<Vec<&BigUint>> = seq.entries().iter().map(|x| vec![x]).collect();
        Ok(choice_closure(&choices, structure))
    }

    /// `ZFS`: sums `Σ_{t∈H} y_t` where each `y_t` is picked from
    /// `x_t^{(1)}, …, x_t^{(l)}` independently per index.
    pub fn zfs(&self, mseq: &MultiSeq) -> Result<ValueSet, SetsError> {
        self.zigzag(mseq, Structure::Sum)
    }

    /// `ZFP`: the multiplicative analogue of [`Caps::zfs`].
    pub fn zfp(&self, mseq: &MultiSeq) -> Result<ValueSet, SetsError> {
        self.zigzag(mseq, Structure::Product)
    }

    pub fn zigzag(&self, mseq: &MultiSeq, structure: Structure) -> Result<ValueSet, SetsError> {
        self.check_zigzag(mseq)?;
        let choices: Vec<Vec<&BigUint>> = (0..mseq.depth())
            .map(|t| mseq.sequences().iter().map(|s| &s.entries()[t]).collect())
            .collect();
        Ok(choice_closure(&choices, structure))
    }

    fn check_zigzag(&self, mseq: &MultiSeq) -> Result<(), SetsError> {
        check_cap("zigzag depth", mseq.depth(), self.zigzag_depth)?;
        check_cap("zigzag width", mseq.width(), self.zigzag_width)
    }

    /// Every zigzag term with its provenance, in canonical order: index
    /// sets by increasing size then lexicographically, and for each index set
    /// the choice vectors lexicographically.
    pub fn zigzag_terms(
        &self,
        mseq: &MultiSeq,
        structure: Structure,
    ) -> Result<Vec<ZigzagTerm>, SetsError> {
        self.check_zigzag(mseq)?;
        let l = mseq.width();
        let mut out = Vec::new();
        for indices in subsets_by_size(mseq.depth()) {
            let mut choices = vec![1usize; indices.len()];
            loop {
                let mut value: Option<BigUint> = None;
                for (&t, &i) in indices.iter().zip(&choices) {
                    let x = mseq.get(i, t).expect("index within depth");
                    value = Some(match value {
                        None => x.clone(),
                        Some(v) => structure.combine(&v, x),
                    });
                }
                out.push(ZigzagTerm {
                    structure,
                    indices: indices.clone(),
                    choices: choices.clone(),
                    value: value.expect("index sets are nonempty"),
                });
                // odometer over choice vectors
                match choices.iter().rposition(|&c| c < l) {
                    Some(pos) => {
                        choices[pos] += 1;
                        for c in &mut choices[pos + 1..] {
                            *c = 1;
                        }
                    }
                    None => break,
                }
            }
        }
        Ok(out)
    }

    /// Block sums `Σ_i Σ_{t∈H_i} x_{i,t}` over chains `H_1 < … < H_n`
    /// inside `1..=depth`, one sequence per chain position.
    pub fn ipn(&self, seqs: &[FinSeq], depth: usize) -> Result<ValueSet, SetsError> {
        if seqs.is_empty() {
            return Err(SetsError::NoSequences);
        }
        if depth == 0 {
            return Err(SetsError::EmptySequence);
        }
        check_cap("chain depth", depth, self.ipn_depth)?;
        check_cap("chain length", seqs.len(), self.ipn_width)?;
        for (i, s) in seqs.iter().enumerate() {
            if s.len() < depth {
                return Err(SetsError::TooShort {
                    index: i + 1,
                    len: s.len(),
                    depth,
                });
            }
        }
        let n = seqs.len();
        // open[k]: sums where blocks 1..=k are started and block k may still grow.
        let mut open: Vec<ValueSet> = vec![ValueSet::new(); n + 1];
        open[0].insert(BigUint::zero());
        for t in 1..=depth {
            let mut next = open.clone();
            for k in 0..=n {
                if open[k].is_empty() {
                    continue;
                }
                if k >= 1 {
                    let x = seqs[k - 1].get(t).expect("length checked");
                    next[k].extend(open[k].iter().map(|s| s + x));
                }
                if k < n {
                    let x = seqs[k].get(t).expect("length checked");
                    let started: Vec<BigUint> = open[k].iter().map(|s| s + x).collect();
                    next[k + 1].extend(started);
                }
            }
            open = next;
        }
        Ok(open.pop().expect("n >= 1"))
    }

    /// `y_n = Σ_{t∈H_n} x_t` for each block of the chain.
    pub fn sum_subsystem(&self, seq: &FinSeq, chain: &BlockChain) -> Result<FinSeq, SetsError> {
        sum_subsystem(seq, chain)
    }
}

/// One zigzag term: index set `H`, the sequence chosen at each index, and the
/// combined value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZigzagTerm {
    pub structure: Structure,
    pub indices: Vec<usize>,
    pub choices: Vec<usize>,
    pub value: BigUint,
}

impl ZigzagTerm {
    /// Compact provenance string such as `H={1,3} pick=[2,1]`.
    pub fn describe(&self) -> String {
        let idx: Vec<String> = self.indices.iter().map(ToString::to_string).collect();
        let pick: Vec<String> = self.choices.iter().map(ToString::to_string).collect();
        format!("H={{{}}} pick=[{}]", idx.join(","), pick.join(","))
    }
}

/// Finite sums with default caps.
pub fn fs_enumerate(seq: &FinSeq) -> Result<ValueSet, SetsError> {
    Caps::default().fs(seq)
}

/// Finite products with default caps.
pub fn fp_enumerate(seq: &FinSeq) -> Result<ValueSet, SetsError> {
    Caps::default().fp(seq)
}

/// Zigzag finite sums with default caps.
pub fn zfs_enumerate(mseq: &MultiSeq) -> Result<ValueSet, SetsError> {
    Caps::default().zfs(mseq)
}

/// Zigzag finite products with default caps.
pub fn zfp_enumerate(mseq: &MultiSeq) -> Result<ValueSet, SetsError> {
    Caps::default().zfp(mseq)
}

/// Ordered-chain block sums with default caps.
pub fn ipn_enumerate(seqs: &[FinSeq], depth: usize) -> Result<ValueSet, SetsError> {
    Caps::default().ipn(seqs, depth)
}

/// The sum subsystem of `seq` along `chain`.
pub fn sum_subsystem(seq: &FinSeq, chain: &BlockChain) -> Result<FinSeq, SetsError> {
    if chain.is_empty() {
        return Err(SetsError::EmptySequence);
    }
    if chain.max_index() > seq.len() {
        return Err(SetsError::IndexOutOfRange {
            index: chain.max_index(),
            len: seq.len(),
        });
    }
    let ys = chain
        .blocks()
        .iter()
        .map(|b| seq.sum_over(b.iter()))
        .collect::<Result<Vec<_>, _>>()?;
    FinSeq::new(ys)
}

/// Nonempty subsets of `{1, …, n}` ordered by size, then lexicographically.
pub fn subsets_by_size(n: usize) -> SubsetsBySize {
    SubsetsBySize {
        n,
        current: if n == 0 { None } else { Some(vec![1]) },
    }
}

/// Iterator returned by [`subsets_by_size`].
#[derive(Debug, Clone)]
pub struct SubsetsBySize {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for SubsetsBySize {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.current.take()?;
        let n = self.n;
        let k = cur.len();
        let mut next = cur.clone();
        // rightmost position that can still advance
        let advance = (0..k).rev().find(|&i| next[i] < n - (k - 1 - i));
        self.current = match advance {
            Some(i) => {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                Some(next)
            }
            None if k < n => Some((1..=k + 1).collect()),
            None => None,
        };
        Some(cur)
    }
}
