//! Acceptance suite. Each test is one criterion; run with
//! `cargo test -p ipstar --test acceptance -- --nocapture` to see the
//! per-criterion detail lines. Time budgets are asserted in release builds
//! only (`cargo test --release --test acceptance`).

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use ipstar::cli::{run_args, EXIT_OK};
use ipstar::dynamics::{
    check_ipr_star, dilation_preimage, mps_power, mps_product, mps_rotation, multi_return_set,
    pigeonhole_check, pigeonhole_r, FiniteMps, MeasurableSet,
};
use ipstar::families::{modular_family, verify_certificate, zigzag_construct};
use ipstar::sets::{fs_enumerate, zfp_enumerate, zfs_enumerate, FinSeq, MultiSeq};
use ipstar::witness::{enumerate_a, ipr_witness, member_a, refute_ip};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn report(id: u32, what: &str, started: Instant, budget: Duration, detail: &str) {
    let elapsed = started.elapsed();
    println!("criterion {id} PASS: {what} ({detail}; {elapsed:.2?})");
    if !cfg!(debug_assertions) {
        assert!(
            elapsed < budget,
            "criterion {id} took {elapsed:?}, budget {budget:?}"
        );
    }
}

#[test]
fn c1_membership_matches_independent_enumeration() {
    let started = Instant::now();
    let limit: u64 = 1 << 20;
    let listed: BTreeSet<u64> = enumerate_a(limit)
        .unwrap()
        .into_iter()
        .map(|v| u64::try_from(v).unwrap())
        .collect();
    let mut disagreements = Vec::new();
    for n in 1..=limit {
        if member_a(&BigUint::from(n)) != listed.contains(&n) {
            disagreements.push(n);
        }
    }
    assert!(disagreements.is_empty(), "disagree at {disagreements:?}");
    report(
        1,
        "member_A agrees with enumerate_A on [1, 2^20]",
        started,
        Duration::from_secs(10),
        &format!("{} members", listed.len()),
    );
}

#[test]
fn c2_witness_sums_lie_in_a() {
    let started = Instant::now();
    let mut total = 0;
    for r in 1..=8 {
        let w = ipr_witness(r).unwrap();
        let sums = fs_enumerate(&w).unwrap();
        assert_eq!(sums.len(), (1 << r) - 1, "r={r}: sums collide");
        for v in &sums {
            assert!(member_a(v), "r={r}: {v} not in A");
        }
        total += sums.len();
    }
    report(
        2,
        "FS(ipr_witness(r)) ⊆ A for r = 1..8",
        started,
        Duration::from_secs(1),
        &format!("{total} sums checked"),
    );
}

#[test]
fn c3_random_sequences_from_a_are_refuted() {
    let started = Instant::now();
    let pool = enumerate_a(1 << 24).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut misses = Vec::new();
    for trial in 0..100 {
        let entries: Vec<BigUint> = (0..10)
            .map(|_| pool[rng.gen_range(0..pool.len())].clone())
            .collect();
        let seq = FinSeq::new(entries).unwrap();
        match refute_ip(&seq).unwrap() {
            Some(cert) => cert.verify(&seq).unwrap(),
            None => misses.push(format!("trial {trial}: {seq}")),
        }
    }
    assert!(misses.is_empty(), "unrefuted sequences: {misses:#?}");
    report(
        3,
        "refute_ip finds a finite sum outside A",
        started,
        Duration::from_secs(30),
        &format!("100/100 refuted, pool of {}", pool.len()),
    );
}

#[test]
fn c4_pigeonhole_on_rotations() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for d in 2..=12usize {
        let s = mps_rotation(d).unwrap();
        let a = MeasurableSet::new(d, [0]).unwrap();
        let r = pigeonhole_r(&s.measure(&a)).unwrap() as usize;
        assert_eq!(r, d + 1);
        let trials: Vec<FinSeq> = (0..200)
            .map(|_| {
                let v: Vec<u64> = (0..r).map(|_| rng.gen_range(1..=100)).collect();
                FinSeq::from_u64s(&v).unwrap()
            })
            .collect();
        let checked = pigeonhole_check(&s, &a, &trials).unwrap();
        assert_eq!(checked.hits(), 200, "d={d}");
        let multiples = ipstar::dynamics::ReturnSet::multiples(d as u64).unwrap();
        let direct = check_ipr_star(&multiples, r, &trials).unwrap();
        assert!(direct.all_hit(), "d={d}");
        for o in &direct.outcomes {
            let (_, sum) = o.hit.as_ref().unwrap();
            assert!((sum % d).is_zero());
        }
    }
    report(
        4,
        "FS of (d+1)-term sequences meets dℕ",
        started,
        Duration::from_secs(10),
        "d = 2..12, 200/200 each",
    );
}

fn lcm(a: u64, b: u64) -> u64 {
    a / num_integer::gcd(a, b) * b
}

/// Pointwise return set by direct measure recomputation.
fn direct_returns(s: &FiniteMps, sets: &[MeasurableSet], upto: u64) -> Vec<bool> {
    (1..=upto)
        .map(|n| !s.intersection_measure(sets, n).is_zero())
        .collect()
}

#[test]
fn c5_recurrence_identities_on_random_systems() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut shifts_checked = 0usize;
    for _ in 0..50 {
        let s = common::random_system(&mut rng, 64, 8);
        let k = rng.gen_range(1..=2);
        let sets: Vec<MeasurableSet> = (0..=k).map(|_| common::random_set(&mut rng, &s)).collect();
        let rs = multi_return_set(&s, &sets).unwrap();
        let p = s.period();

        for m in 1..=6u64 {
            let powered = mps_power(&s, m).unwrap();
            let via_power = multi_return_set(&powered, &sets).unwrap();
            let via_dilation = dilation_preimage(&rs, m);
            assert_eq!(via_dilation, via_power, "m={m}");
            let direct = direct_returns(&powered, &sets, 2 * p);
            for n in 1..=2 * p {
                assert_eq!(
                    via_dilation.contains(n),
                    direct[n as usize - 1],
                    "m={m} n={n}"
                );
            }
        }

        let t = common::random_system(&mut rng, 64, 8);
        let other: Vec<MeasurableSet> = (0..=k).map(|_| common::random_set(&mut rng, &t)).collect();
        let product = mps_product(&s, &t).unwrap();
        let rects: Vec<MeasurableSet> = sets
            .iter()
            .zip(&other)
            .map(|(a, b)| a.rectangle(b))
            .collect();
        let joint = multi_return_set(&product, &rects).unwrap();
        let factors = rs
            .intersect(&multi_return_set(&t, &other).unwrap())
            .unwrap();
        assert_eq!(joint, factors);
        let horizon = 2 * lcm(p, t.period());
        for n in 1..=horizon {
            assert_eq!(joint.contains(n), factors.contains(n), "product n={n}");
        }

        for n in (1..=2 * p).filter(|&n| rs.contains(n)) {
            let c = sets
                .iter()
                .enumerate()
                .map(|(j, a)| s.preimage(a, j as u64 * n))
                .reduce(|x, y| x.intersection(&y))
                .unwrap();
            let inner = multi_return_set(&s, &vec![c; k + 1]).unwrap();
            for q in 1..=2 * p {
                if inner.contains(q) {
                    assert!(rs.contains(n + q), "n={n} q={q}");
                }
            }
            shifts_checked += 1;
        }
    }
    report(
        5,
        "power, product and shift identities hold exactly",
        started,
        Duration::from_secs(30),
        &format!("50 systems, {shifts_checked} shifts"),
    );
}

#[test]
fn c6_zigzag_construction_for_modular_families() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut elements = 0;
    for d in 2..=6u64 {
        let seqs: Vec<FinSeq> = (0..3)
            .map(|_| {
                let v: Vec<u64> = (0..64).map(|_| rng.gen_range(1..=100)).collect();
                FinSeq::from_u64s(&v).unwrap()
            })
            .collect();
        let mseq = MultiSeq::new(seqs).unwrap();
        let o = modular_family(d).unwrap();
        let cert = zigzag_construct(&o, &mseq, 4, 10_000).unwrap();
        assert_eq!(cert.depth(), 4);
        let outcome = verify_certificate(&cert, &o).unwrap();
        assert!(outcome.passed, "d={d}: {:?}", outcome.failure);

        // exhaustive membership, recomputed here from the subsystems
        let subs: Vec<FinSeq> = cert
            .subsystems
            .iter()
            .map(|s| FinSeq::new(s.clone()).unwrap())
            .collect();
        let sub = MultiSeq::new(subs).unwrap();
        let all: BTreeSet<BigUint> = zfs_enumerate(&sub)
            .unwrap()
            .into_iter()
            .chain(zfp_enumerate(&sub).unwrap())
            .collect();
        for v in &all {
            assert!((v % d).is_zero(), "d={d}: {v}");
        }
        assert_eq!(outcome.checked, cert.elements.len());
        elements += outcome.checked;
    }
    report(
        6,
        "zigzag subsystems inside dℕ construct and verify",
        started,
        Duration::from_secs(20),
        &format!("d = 2..6, {elements} elements"),
    );
}

fn cli(args: &[&str]) -> ipstar::cli::Outcome {
    run_args(std::iter::once("ipstar").chain(args.iter().copied()))
}

#[test]
fn c7_counterexample_certificates() {
    let started = Instant::now();
    let out = cli(&[
        "counterexample",
        "50",
        "--depth",
        "20",
        "--seed",
        "7",
        "--format",
        "json",
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["certified"], 50);
    let certs = v["certificates"].as_array().unwrap();
    assert_eq!(certs.len(), 50);
    for c in certs {
        let value: BigUint = c["value"].as_str().unwrap().parse().unwrap();
        assert!(member_a(&value));
    }
    assert!(v["summary"].as_str().unwrap().ends_with("50/50 certified"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cx.json");
    std::fs::write(&path, &out.stdout).unwrap();
    let checked = cli(&["verify", path.to_str().unwrap()]);
    assert_eq!(checked.code, EXIT_OK, "{}", checked.stderr);
    report(
        7,
        "zigzag sums of sum subsystems of 4^t, 2·4^t land in A",
        started,
        Duration::from_secs(5),
        "50/50 certified and re-verified",
    );
}

#[test]
fn c8_identical_arguments_give_identical_json() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    std::fs::write(p("seq.txt"), "516\n2064\n8256\n36\n").unwrap();
    std::fs::write(p("rot4.txt"), mps_rotation(4).unwrap().to_text()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let groups: Vec<String> = (0..3)
        .map(|_| {
            (0..24)
                .map(|_| rng.gen_range(1..=50u32).to_string())
                .collect::<Vec<_>>()
                .join("\n")
        })
        .collect();
    std::fs::write(p("seqs.txt"), groups.join("\n\n")).unwrap();
    let wit = cli(&["witness", "3", "--format", "json"]);
    std::fs::write(p("w.json"), &wit.stdout).unwrap();

    let rot = p("rot4.txt");
    let (seq, seqs, w) = (p("seq.txt"), p("seqs.txt"), p("w.json"));
    let dynamic = format!("dyn:{rot}:0");
    let commands: Vec<Vec<&str>> = vec![
        vec!["member", "148"],
        vec!["enumerate", "5000"],
        vec!["witness", "4"],
        vec!["refute", &seq],
        vec!["recurrence", &rot, "0,1", "--k", "2"],
        vec!["zigzag", "mod:3", &seqs, "3", "10000"],
        vec!["zigzag", &dynamic, &seqs, "2", "10000"],
        vec!["counterexample", "20", "--depth", "12", "--seed", "99"],
        vec!["verify", &w],
        vec!["check-family", "mod:5", "--bound", "300", "--seed", "11"],
    ];
    for args in &commands {
        let mut full = args.clone();
        full.extend(["--format", "json"]);
        let first = cli(&full);
        let second = cli(&full);
        assert_eq!(first.code, EXIT_OK, "{args:?}: {}", first.stderr);
        assert!(!first.stdout.is_empty());
        serde_json::from_str::<Value>(&first.stdout).unwrap();
        assert_eq!(first.stdout, second.stdout, "{args:?} differs between runs");
    }
    let a = cli(&["counterexample", "5", "--seed", "1", "--format", "json"]);
    let b = cli(&["counterexample", "5", "--seed", "2", "--format", "json"]);
    assert_ne!(a.stdout, b.stdout, "seed must matter");
    report(
        8,
        "repeated runs produce byte-identical JSON",
        started,
        Duration::from_secs(30),
        &format!("{} commands", commands.len()),
    );
}

#[test]
fn c5_measures_are_exact_rationals() {
    // guards the identities above against silent floating-point use
    let s = mps_rotation(7).unwrap();
    let a = MeasurableSet::new(7, [0, 3]).unwrap();
    assert_eq!(s.measure(&a), BigRational::new(2.into(), 7.into()));
}
