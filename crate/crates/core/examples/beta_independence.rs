//! The optimal return shrinks toward the risk-free return as β grows, while
//! the gradient at the optimum, which prices the traded payoffs, stays put.

use condrisk::optimizer::{solve_mmv, SolverOptions};
use condrisk::risk::mmv_gradient;
use condrisk::{MarketModel, MmvParams, Result};

fn main() -> Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/three_asset_model.json");
    let m = MarketModel::load(path)?;
    let f = m.partition();
    for beta in [0.25, 1.0, 2.0, 8.0] {
        let b = MmvParams::scalar(beta)?;
        let sol = solve_mmv(&m, &b, &SolverOptions::default())?;
        let grad = mmv_gradient(&sol.x_star, &b, f)?;
        println!("beta = {beta:<5} x* = {:?}", sol.x_star.values());
        println!("             V'  = {:?}", grad.values());
    }
    Ok(())
}
