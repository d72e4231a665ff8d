//! Entropic risk minimized over returns with a prescribed conditional mean
//! and a conditional p-norm bound, from several random starts.

use condrisk::optimizer::{feasibility_check, solve_entropic, EntropicProblemSpec, SolverOptions};
use condrisk::{EntropicParams, Error, MarketModel, Result};

fn main() -> Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/three_asset_model.json");
    let m = MarketModel::load(path)?;
    let g = EntropicParams::scalar(2.0)?;
    let opts = SolverOptions::default();

    for (p, r) in [(2.0, vec![1.5, 1.5]), (3.0, vec![1.16, 1.19]), (3.0, vec![1.0, 1.0])] {
        let spec = EntropicProblemSpec::new(vec![1.05].into(), r.clone().into(), p)?;
        println!("p = {p}, r = {r:?}");
        for c in feasibility_check(&m, &spec)? {
            println!("  atom {}: min norm {:.4}, feasible {}", c.atom, c.min_norm, c.feasible);
        }
        match solve_entropic(&m, &g, &spec, &opts) {
            Ok(sol) => {
                println!("  value             = {:?}", sol.value.values());
                println!("  ball active       = {:?}", sol.ball_active);
                println!("  multiplier        = {:?}", sol.ball_multiplier);
                println!("  starts agreement  = {:.2e}", sol.starts_agreement);
                println!("  feasibility resid = {:.2e}", sol.max_feasibility_residual());
            }
            Err(Error::Infeasible { atoms }) => println!("  infeasible on atoms {atoms:?}"),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}
