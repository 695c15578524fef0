//! Any sum subsystems of ⟨4^t⟩ and ⟨2·4^t⟩ have a two-term zigzag sum in A,
//! so their zigzag sums never all land in the complement of A.
//!
//!     cargo run --example zigzag_counterexample -- [depth] [trials] [seed]

use ipstar::cli::counterexample_report;
use ipstar::sets::BlockChain;
use ipstar::witness::zigzag_hit_certificate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>());
    let depth = args.next().transpose()?.unwrap_or(12) as usize;
    let trials = args.next().transpose()?.unwrap_or(8) as usize;
    let seed = args.next().transpose()?.unwrap_or(0);

    let c1 = BlockChain::from_indices([1..=1])?;
    let c2 = BlockChain::from_indices([1..=1, 2..=2])?;
    let cert = zigzag_hit_certificate(&c1, &c2)?;
    println!("chains {c1} and {c2}: {} with {}", cert.value, cert.decomp);

    let report = counterexample_report(depth, trials, seed)
        .map_err(|e| format!("exit {}: {}", e.code, e.message))?;
    for (i, (a, b, cert)) in report.iter().enumerate() {
        cert.verify()?;
        println!(
            "trial {:>2}: {a} and {b} -> {} + {} = {}",
            i + 1,
            cert.block_a,
            cert.block_b,
            cert.value
        );
    }
    println!("{}/{} certified", report.len(), trials);
    Ok(())
}
