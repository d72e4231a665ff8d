//! Sequences on the unit interval whose norms diverge while the entropic and
//! monotone mean-variance risks stay bounded.

use condrisk::counterexamples::{
    discretize_unit_interval, entropic_table, example311_sequence, example312_sequence, mmv_table,
    PiecewiseDensityRv,
};
use condrisk::risk::mmv;
use condrisk::{MmvParams, Result};

fn main() -> Result<()> {
    let ent = example311_sequence(20, 2.0, 1.0)?;
    println!("entropic, p = 2, gamma = 1 (bounded: {})", ent.bounded);
    print!("{}", entropic_table(&ent, '\t'));

    for beta in [2.0, 1.0, 0.2, 0.05] {
        let seq = example312_sequence(20, beta)?;
        println!(
            "\nmonotone mean-variance, beta = {beta} (envelope {:?}, bounded: {}, first crossing n: {:?})",
            seq.envelope, seq.bounded, seq.first_crossing_n
        );
        print!("{}", mmv_table(&seq, '\t'));
    }

    // the closed form against the finite engine on a fine grid
    let x = PiecewiseDensityRv::new(6, 2.0)?;
    let (f, xs) = discretize_unit_interval(100_000, &x)?;
    let v = mmv(&xs, &MmvParams::scalar(1.0)?, &f)?;
    let closed = condrisk::counterexamples::example312_report(6, 1.0)?;
    println!("\nn = 6, beta = 1: grid {:.6}, closed form {:.6}", v[0], closed.v_beta);
    Ok(())
}
