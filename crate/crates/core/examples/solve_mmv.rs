//! Minimal monotone mean-variance risk over the return set, its first-order
//! certificate and pricing kernel, compared against a grid search.

use condrisk::axioms::RiskMeasureKind;
use condrisk::optimizer::{
    brute_force_minimize, pricing_kernel, solve_mmv, BruteConstraints, GridSpec, SolverOptions,
};
use condrisk::{MarketModel, MmvParams, Result};

fn main() -> Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/demo_model.json");
    let m = MarketModel::load(path)?;
    let opts = SolverOptions::default();

    for beta in [0.5, 1.0, 4.0] {
        let b = MmvParams::scalar(beta)?;
        let sol = solve_mmv(&m, &b, &opts)?;
        let kernel = pricing_kernel(&m, &b, &sol, 1e-8)?;
        println!("beta = {beta}");
        println!("  value               = {:?}", sol.value.values());
        println!("  x*                  = {:?}", sol.x_star.values());
        println!("  certificate residual= {:.2e}", sol.certificate_residual);
        println!("  grad V              = {:?}", kernel.nabla_v.values());
        println!("  pricing residual    = {:.2e}", kernel.pricing_residual);

        let grid = brute_force_minimize(
            &m,
            RiskMeasureKind::Mmv { beta },
            &BruteConstraints::default(),
            GridSpec { lo: -3.0, hi: 3.0, step: 1e-3 },
        )?;
        println!("  grid minimum        = {:?}", grid.value);
    }
    Ok(())
}
