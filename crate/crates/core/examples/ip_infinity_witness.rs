//! The set A = { Σ_{H1} 4^t + Σ_{H2} 2·4^t : H1 < H2 } holds an r-term
//! sequence with all finite sums inside for every r, yet no infinite one.
//!
//!     cargo run --example ip_infinity_witness

use ipstar::sets::{fs_enumerate, FinSeq};
use ipstar::witness::{
    decompose, enumerate_a, ipr_witness, ipr_witness_with, refute_ip, WitnessFormula,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let small: Vec<String> = enumerate_a(1000)?.iter().map(|v| v.to_string()).collect();
    println!("A ∩ [1,1000] = {{{}}}", small.join(", "));
    for n in [36u32, 132, 148, 40] {
        match decompose(&n.into()) {
            Some(d) => println!("{n} ∈ A with {d}"),
            None => println!("{n} ∉ A"),
        }
    }

    for r in 1..=5 {
        let w = ipr_witness(r)?;
        println!(
            "r={r}: {w} ({} finite sums, all in A)",
            fs_enumerate(&w)?.len()
        );
    }
    match ipr_witness_with(3, WitnessFormula::AsPrinted) {
        Ok(w) => println!("alternative formula at r=3: {w}"),
        Err(e) => println!("alternative formula at r=3 rejected: {e}"),
    }

    // extend a witness by any further element of A and some sum escapes
    let mut entries = ipr_witness(3)?.entries().to_vec();
    entries.push(36u32.into());
    let seq = FinSeq::new(entries)?;
    if let Some(cert) = refute_ip(&seq)? {
        println!(
            "{seq}: subset {} sums to {} ∉ A ({})",
            cert.subset, cert.value, cert.reason
        );
    }
    Ok(())
}
