#![allow(dead_code)]

use ipstar::dynamics::{FiniteMps, MeasurableSet};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;

/// Random system on at most `max_points` points built from cycles of length
/// at most `max_cycle`, so the period stays below `lcm(1..=max_cycle)`.
/// Cycle weights are random and occasionally zero.
pub fn random_system(rng: &mut impl Rng, max_points: usize, max_cycle: usize) -> FiniteMps {
    let target = rng.gen_range(1..=max_points);
    let mut lengths = Vec::new();
    let mut total = 0;
    while total < target {
        let len = rng.gen_range(1..=max_cycle).min(target - total);
        lengths.push(len);
        total += len;
    }
    let mut labels: Vec<usize> = (0..total).collect();
    labels.shuffle(rng);
    let mut weights: Vec<u64> = lengths.iter().map(|_| rng.gen_range(0..=4)).collect();
    if weights.iter().all(|&w| w == 0) {
        weights[0] = 1;
    }
    let denom: u64 = lengths
        .iter()
        .zip(&weights)
        .map(|(l, w)| *l as u64 * w)
        .sum();
    let mut perm = vec![0; total];
    let mut mass = vec![BigRational::from_integer(BigInt::from(0)); total];
    let mut at = 0;
    for (len, w) in lengths.iter().zip(&weights) {
        let cycle = &labels[at..at + len];
        for (i, &x) in cycle.iter().enumerate() {
            perm[x] = cycle[(i + 1) % len];
            mass[x] = BigRational::new(BigInt::from(*w), BigInt::from(denom));
        }
        at += len;
    }
    FiniteMps::new(perm, mass).expect("valid random system")
}

/// Random subset with positive measure.
pub fn random_set(rng: &mut impl Rng, s: &FiniteMps) -> MeasurableSet {
    loop {
        let points: Vec<usize> = (0..s.size()).filter(|_| rng.gen_bool(0.5)).collect();
        let set = MeasurableSet::new(s.size(), points).expect("points in range");
        if s.measure(&set) > BigRational::from_integer(BigInt::from(0)) {
            return set;
        }
    }
}
