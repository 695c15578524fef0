//! Return sets of finite measure-preserving systems and the pigeonhole
//! bound for single recurrence.
//!
//!     cargo run --example recurrence

use ipstar::dynamics::{
    check_ipr_star, dilation_preimage, mps_power, mps_product, mps_rotation, multi_return_set,
    pigeonhole_r, return_set, FiniteMps, MeasurableSet,
};
use ipstar::sets::FinSeq;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rot6 = mps_rotation(6)?;
    let a = MeasurableSet::new(6, [0, 1])?;
    let rs = return_set(&rot6, &a, &a)?;
    let mu = rot6.measure(&a);
    let r = pigeonhole_r(&mu)?;
    println!("rotation 6, A={{0,1}}: {rs}; μ(A)={mu}; r={r}");

    let trials = vec![FinSeq::from_u64s(&[7, 9, 11, 13])?];
    let report = check_ipr_star(&rs, r as usize, &trials)?;
    println!("FS(7,9,11,13) meets it at {:?}", report.outcomes[0].hit);

    let triple = multi_return_set(&rot6, &[a.clone(), a.clone(), a.clone()])?;
    println!("triple recurrence: {triple}");

    let squared = mps_power(&rot6, 2)?;
    let via_power = return_set(&squared, &a, &a)?;
    println!("2⁻¹R = R(T²): {}", dilation_preimage(&rs, 2) == via_power);

    let rot4 = mps_rotation(4)?;
    let b = MeasurableSet::new(4, [0])?;
    let product = mps_product(&rot6, &rot4)?;
    let joint = return_set(&product, &a.rectangle(&b), &a.rectangle(&b))?;
    let factors = rs.intersect(&return_set(&rot4, &b, &b)?)?;
    println!(
        "product system: {joint} (equals intersection: {})",
        joint == factors
    );

    let identity = FiniteMps::identity(2)?;
    let (x, y) = (MeasurableSet::new(2, [0])?, MeasurableSet::new(2, [1])?);
    println!(
        "identity, disjoint sets: empty = {}",
        return_set(&identity, &x, &y)?.is_empty()
    );
    Ok(())
}
