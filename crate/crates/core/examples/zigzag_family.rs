//! Zigzag sum subsystems inside a member of a ZFSP family, with an
//! independent re-verification of the certificate.
//!
//!     cargo run --example zigzag_family

use ipstar::dynamics::{mps_rotation, MeasurableSet};
use ipstar::families::{
    check_zfsp_properties, dynamical_family, modular_family, verify_certificate, zigzag_construct,
};
use ipstar::sets::{FinSeq, MultiSeq};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let o = modular_family(4)?;
    let report = check_zfsp_properties(&o, 1000, 8);
    for p in &report.properties {
        println!("{}: {}", p.label, if p.passed { "pass" } else { "FAIL" });
    }

    let mseq = MultiSeq::new(vec![
        FinSeq::from_u64s(&[1; 24])?,
        FinSeq::from_u64s(&[3; 24])?,
        FinSeq::from_u64s(&[
            2, 7, 5, 1, 6, 3, 9, 4, 8, 2, 5, 7, 1, 3, 6, 2, 4, 9, 7, 5, 3, 1, 8, 6,
        ])?,
    ])?;
    let cert = zigzag_construct(&o, &mseq, 3, 10_000)?;
    for (i, ys) in cert.subsystems.iter().enumerate() {
        let ys: Vec<String> = ys.iter().map(|v| v.to_string()).collect();
        println!(
            "subsystem {}: ({}) from {}",
            i + 1,
            ys.join(","),
            cert.chains[i]
        );
    }
    let outcome = verify_certificate(&cert, &o)?;
    println!(
        "{} zigzag sums and products re-verified: {}",
        outcome.checked, outcome.passed
    );

    let rot = mps_rotation(6)?;
    let dyn_family = dynamical_family(&rot, &MeasurableSet::new(6, [0, 3])?)?;
    let cert = zigzag_construct(&dyn_family, &mseq, 2, 10_000)?;
    println!(
        "{}: depth {} with {} elements",
        dyn_family,
        cert.depth(),
        cert.elements.len()
    );
    Ok(())
}
