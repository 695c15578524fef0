use std::fmt::Write as _;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::DynamicsError;

/// Largest number of points a system may have.
pub const SIZE_CAP: usize = 1_000_000;
/// Largest permutation order a system may have.
pub const PERIOD_CAP: u64 = 1_000_000;

/// Measure-preserving permutation of the points `0..m` carrying an exact
/// probability mass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMps {
    perm: Vec<usize>,
    mass: Vec<BigRational>,
    cycles: Vec<Vec<usize>>,
    cycle_of: Vec<usize>,
    position: Vec<usize>,
    period: u64,
}

impl FiniteMps {
    /// Checks that `perm` is a bijection, the masses are nonnegative and sum
    /// to 1, and mass is constant along `perm`.
    pub fn new(perm: Vec<usize>, mass: Vec<BigRational>) -> Result<Self, DynamicsError> {
        let m = perm.len();
        if m == 0 {
            return Err(DynamicsError::EmptySystem);
        }
        if m > SIZE_CAP {
            return Err(DynamicsError::SizeCap {
                size: m as u64,
                cap: SIZE_CAP as u64,
            });
        }
        if mass.len() != m {
            return Err(DynamicsError::MassLength {
                expected: m,
                found: mass.len(),
            });
        }
        let mut seen = vec![false; m];
        for &y in &perm {
            if y >= m || seen[y] {
                return Err(DynamicsError::NotBijection { image: y });
            }
            seen[y] = true;
        }
        if let Some(x) = mass.iter().position(Signed::is_negative) {
            return Err(DynamicsError::NegativeMass { point: x });
        }
        let total: BigRational = mass.iter().sum();
        if !total.is_one() {
            return Err(DynamicsError::MassTotal(total.to_string()));
        }
        if let Some(x) = (0..m).find(|&x| mass[perm[x]] != mass[x]) {
            return Err(DynamicsError::NotInvariant { point: x });
        }

        let mut cycle_of = vec![usize::MAX; m];
        let mut position = vec![0; m];
        let mut cycles = Vec::new();
        let mut period = 1u64;
        for start in 0..m {
            if cycle_of[start] != usize::MAX {
                continue;
            }
            let id = cycles.len();
            let mut cycle = Vec::new();
            let mut x = start;
            loop {
                cycle_of[x] = id;
                position[x] = cycle.len();
                cycle.push(x);
                x = perm[x];
                if x == start {
                    break;
                }
            }
            period = period.lcm(&(cycle.len() as u64));
            if period > PERIOD_CAP {
                return Err(DynamicsError::PeriodCap {
                    period,
                    cap: PERIOD_CAP,
                });
            }
            cycles.push(cycle);
        }

        Ok(FiniteMps {
            perm,
            mass,
            cycles,
            cycle_of,
            position,
            period,
        })
    }

    /// Permutation with uniform mass `1/m`.
    pub fn uniform(perm: Vec<usize>) -> Result<Self, DynamicsError> {
        let m = perm.len();
        let each = BigRational::new(1.into(), m.max(1).into());
        FiniteMps::new(perm, vec![each; m])
    }

    /// The identity map on `m` points with uniform mass.
    pub fn identity(m: usize) -> Result<Self, DynamicsError> {
        FiniteMps::uniform((0..m).collect())
    }

    pub fn size(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn mass(&self) -> &[BigRational] {
        &self.mass
    }

    /// Order of the permutation (lcm of its cycle lengths).
    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    /// `T^n(x)`.
    pub fn apply(&self, x: usize, n: u64) -> usize {
        let cycle = &self.cycles[self.cycle_of[x]];
        let len = cycle.len() as u64;
        let pos = (self.position[x] as u64 + n % len) % len;
        cycle[pos as usize]
    }

    pub fn measure(&self, set: &MeasurableSet) -> BigRational {
        set.points().map(|x| self.mass[x].clone()).sum()
    }

    /// `μ(⋂_{i=0}^{k} T^{-in} A_i)`, summed point by point.
    pub fn intersection_measure(&self, sets: &[MeasurableSet], n: u64) -> BigRational {
        (0..self.size())
            .filter(|&x| {
                sets.iter().enumerate().all(|(i, a)| {
                    let steps = (i as u64 % self.period) * (n % self.period);
                    a.contains(self.apply(x, steps))
                })
            })
            .map(|x| self.mass[x].clone())
            .sum()
    }

    /// `T^{-n} B = { x : T^n(x) ∈ B }`.
    pub fn preimage(&self, set: &MeasurableSet, n: u64) -> MeasurableSet {
        MeasurableSet {
            members: (0..self.size())
                .map(|x| set.contains(self.apply(x, n)))
                .collect(),
        }
    }

    pub(crate) fn check_set(&self, set: &MeasurableSet) -> Result<(), DynamicsError> {
        if set.size() != self.size() {
            return Err(DynamicsError::SetSize {
                expected: self.size(),
                found: set.size(),
            });
        }
        Ok(())
    }

    /// Plain-text form: size, images, masses as `p/q`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.size());
        let images: Vec<String> = self.perm.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "{}", images.join(" "));
        let masses: Vec<String> = self
            .mass
            .iter()
            .map(|q| format!("{}/{}", q.numer(), q.denom()))
            .collect();
        let _ = writeln!(out, "{}", masses.join(" "));
        out
    }

    /// Parses the three-line text form written by [`FiniteMps::to_text`].
    /// Blank lines and lines starting with `#` are skipped.
    pub fn from_text(text: &str) -> Result<Self, DynamicsError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| DynamicsError::Parse(format!("missing {what} line")))
        };
        let size_line = next("size")?;
        let m: usize = size_line
            .parse()
            .map_err(|_| DynamicsError::Parse(format!("bad size {size_line:?}")))?;
        let perm = next("permutation")?
            .split_whitespace()
            .map(|w| {
                w.parse::<usize>()
                    .map_err(|_| DynamicsError::Parse(format!("bad image {w:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mass = next("mass")?
            .split_whitespace()
            .map(|w| {
                w.parse::<BigRational>()
                    .map_err(|_| DynamicsError::Parse(format!("bad mass {w:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if perm.len() != m {
            return Err(DynamicsError::Parse(format!(
                "size line says {m} points but {} images given",
                perm.len()
            )));
        }
        FiniteMps::new(perm, mass)
    }
}

/// Subset of the points of a system.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MeasurableSet {
    members: Vec<bool>,
}

impl MeasurableSet {
    pub fn new(
        size: usize,
        points: impl IntoIterator<Item = usize>,
    ) -> Result<Self, DynamicsError> {
        let mut members = vec![false; size];
        for p in points {
            if p >= size {
                return Err(DynamicsError::PointOutOfRange { point: p, size });
            }
            members[p] = true;
        }
        Ok(MeasurableSet { members })
    }

    pub fn full(size: usize) -> Self {
        MeasurableSet {
            members: vec![true; size],
        }
    }

    pub fn empty(size: usize) -> Self {
        MeasurableSet {
            members: vec![false; size],
        }
    }

    /// Number of points of the ambient system.
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.get(x).copied().unwrap_or(false)
    }

    pub fn points(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(x, _)| x)
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn intersection(&self, other: &MeasurableSet) -> MeasurableSet {
        MeasurableSet {
            members: self
                .members
                .iter()
                .zip(&other.members)
                .map(|(&a, &b)| a && b)
                .collect(),
        }
    }

    /// `A × B` inside the product of systems of sizes `self.size()` and
    /// `other.size()`, with `(x, y)` stored at `x · other.size() + y`.
    pub fn rectangle(&self, other: &MeasurableSet) -> MeasurableSet {
        let m2 = other.size();
        let mut members = vec![false; self.size() * m2];
        for x in self.points() {
            for y in other.points() {
                members[x * m2 + y] = true;
            }
        }
        MeasurableSet { members }
    }

    /// Parses a comma-separated point list such as `0,2,5`.
    pub fn parse(size: usize, text: &str) -> Result<Self, DynamicsError> {
        let text = text.trim();
        let text = text
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .unwrap_or(text);
        let points = text
            .split(',')
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .map(|w| {
                w.parse::<usize>()
                    .map_err(|_| DynamicsError::Parse(format!("bad point {w:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        MeasurableSet::new(size, points)
    }
}

/// Rotation `x ↦ x + 1 mod d` with uniform mass.
pub fn mps_rotation(d: usize) -> Result<FiniteMps, DynamicsError> {
    FiniteMps::uniform((0..d).map(|x| (x + 1) % d.max(1)).collect())
}

/// `T × S` with product mass; `(x, y)` lives at `x · m₂ + y`.
pub fn mps_product(s1: &FiniteMps, s2: &FiniteMps) -> Result<FiniteMps, DynamicsError> {
    let (m1, m2) = (s1.size(), s2.size());
    let size = m1 as u64 * m2 as u64;
    if size > SIZE_CAP as u64 {
        return Err(DynamicsError::SizeCap {
            size,
            cap: SIZE_CAP as u64,
        });
    }
    let mut perm = Vec::with_capacity(m1 * m2);
    let mut mass = Vec::with_capacity(m1 * m2);
    for x in 0..m1 {
        for y in 0..m2 {
            perm.push(s1.perm[x] * m2 + s2.perm[y]);
            mass.push(&s1.mass[x] * &s2.mass[y]);
        }
    }
    FiniteMps::new(perm, mass)
}

/// `T^m` on the same points and masses.
pub fn mps_power(s: &FiniteMps, m: u64) -> Result<FiniteMps, DynamicsError> {
    if m == 0 {
        return Err(DynamicsError::ZeroPower);
    }
    let perm = (0..s.size()).map(|x| s.apply(x, m)).collect();
    FiniteMps::new(perm, s.mass.clone())
}
