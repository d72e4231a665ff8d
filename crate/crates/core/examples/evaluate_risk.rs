//! Conditional entropic, mean-variance and monotone mean-variance risk of one
//! payoff on a two-atom partition.

use condrisk::risk::{
    entropic, entropic_gradient, in_monotonicity_domain, mean_variance, mmv, mmv_gradient, solve_kx,
};
use condrisk::{EntropicParams, FiniteSpace, MmvParams, Partition, RandomVariable, Result};

fn main() -> Result<()> {
    let space = FiniteSpace::new(vec![0.1, 0.2, 0.2, 0.25, 0.25])?;
    let f = Partition::new(space, vec![0, 0, 0, 1, 1])?;
    let x = RandomVariable::new(vec![-0.5, 1.0, 3.5, 0.8, 1.4]);

    let gamma = EntropicParams::scalar(1.5)?;
    let beta = MmvParams::scalar(1.0)?;

    println!("x                = {:?}", x.values());
    println!("E[x|F]           = {:?}", f.expect(&x)?.values());
    println!("entropic         = {:?}", entropic(&x, &gamma, &f)?.values());
    println!("mean-variance    = {:?}", mean_variance(&x, &beta, &f)?.values());
    println!("monotone MV      = {:?}", mmv(&x, &beta, &f)?.values());
    println!("k_x              = {:?}", solve_kx(&x, &beta, &f)?.values());
    println!("x in G_beta      = {:?}", in_monotonicity_domain(&x, &beta, &f)?);
    println!("entropic grad    = {:?}", entropic_gradient(&x, &gamma, &f)?.values());
    println!("monotone MV grad = {:?}", mmv_gradient(&x, &beta, &f)?.values());

    // per-atom parameters are F-measurable too
    let per_atom = MmvParams::new(vec![0.5, 4.0].into())?;
    println!("mmv, beta=(0.5,4) = {:?}", mmv(&x, &per_atom, &f)?.values());
    Ok(())
}
