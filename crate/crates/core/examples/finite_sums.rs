//! FS, FP, zigzag and ordered-chain sums of small sequences.
//!
//!     cargo run --example finite_sums

use ipstar::sets::{
    fp_enumerate, fs_enumerate, ipn_enumerate, sum_subsystem, zfp_enumerate, zfs_enumerate,
    BlockChain, Caps, FinSeq, MultiSeq, Structure,
};

fn show(label: &str, values: impl IntoIterator<Item = impl ToString>) {
    let v: Vec<String> = values.into_iter().map(|x| x.to_string()).collect();
    println!("{label:<28} {{{}}}", v.join(", "));
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = FinSeq::from_u64s(&[1, 2, 4])?;
    let y = FinSeq::from_u64s(&[3, 5, 7])?;
    show("FS(1,2,4)", fs_enumerate(&x)?);
    show("FP(1,2,4)", fp_enumerate(&x)?);

    let pair = MultiSeq::new(vec![x.clone(), y.clone()])?;
    show("ZFS((1,2,4),(3,5,7))", zfs_enumerate(&pair)?);
    show("ZFP((1,2,4),(3,5,7))", zfp_enumerate(&pair)?);
    show("IP^2 over both", ipn_enumerate(&[x.clone(), y], 3)?);

    let chain = BlockChain::from_indices([1..=2, 3..=3])?;
    let sub = sum_subsystem(&x, &chain)?;
    println!("sum subsystem over {chain}: {sub}");

    println!("\nfirst zigzag sums with their choices:");
    for term in Caps::default()
        .zigzag_terms(&pair, Structure::Sum)?
        .iter()
        .take(6)
    {
        println!("  {} = {}", term.describe(), term.value);
    }
    Ok(())
}
