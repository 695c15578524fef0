//! Oracle algebra: shifts, dilation preimages and intersections simplify
//! exactly for modular and dynamical members and compose lazily otherwise.
//!
//!     cargo run --example closure_identities

use ipstar::dynamics::{mps_rotation, MeasurableSet};
use ipstar::families::{dynamical_family, modular_family, witness_b_family, FamilyOracle};

fn members(o: &FamilyOracle, bound: u64) -> Vec<u64> {
    (1..=bound).filter(|&n| o.member_u64(n)).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let six = modular_family(6)?;
    println!("{} dilated by 4 -> {}", six, six.dilate(&4u32.into()));
    println!("{} ∩ mod:4 -> {}", six, six.intersect(&modular_family(4)?));
    println!(
        "shift(mod:6, 2) ∩ [1,30]: {:?}",
        members(&six.shift(&2u32.into()), 30)
    );

    let rot = mps_rotation(6)?;
    let o = dynamical_family(&rot, &MeasurableSet::new(6, [0, 1, 3])?)?;
    println!("{o}: {:?}", members(&o, 24));
    println!("refined: {:?}", members(&o.refine(), 24));
    println!("dilated by 2: {:?}", members(&o.dilate(&2u32.into()), 24));

    let b = witness_b_family().shift(&36u32.into()).intersect(&six);
    println!("{b}: {:?}", members(&b, 60));
    Ok(())
}
