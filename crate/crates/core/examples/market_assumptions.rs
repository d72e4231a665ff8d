//! Building a market, checking the risk-free and rank assumptions, pricing
//! and projecting onto the traded span.

use condrisk::{FiniteSpace, MarketModel, Partition, PortfolioCoefficients, RandomVariable, Result};

fn main() -> Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/three_asset_model.json");
    let m = MarketModel::load(path)?;
    let f = m.partition();

    let a41 = m.assumption_41(1e-10);
    let a48 = m.assumption_48(1e-10);
    println!("1 in span per atom     = {:?}", a41.constant_in_span);
    println!("pi(1)                  = {:?}", a41.unit_price.values());
    println!("risk-free return       = {:?}", m.risk_free_return()?.values());
    println!("rank of (pi, E[.|F])   = {:?}", a48.ranks);
    if let Some(z) = &a48.witness {
        println!("witness z0             = {:?}", z.values());
        println!("  pi(z0)               = {:?}", m.price(z)?.values());
        println!("  E[z0|F]              = {:?}", f.expect(z)?.values());
    }

    let x = m.synthesize(&PortfolioCoefficients::broadcast(&[0.2, 0.5, 0.3], f.atom_count()))?;
    println!("price of 0.2,0.5,0.3   = {:?}", m.price(&x)?.values());

    let outside = RandomVariable::new((0..f.outcome_count()).map(|o| (o as f64).sin()).collect());
    println!("sin(o) traded?         = {:?}", m.membership(&outside, 1e-10)?);
    let proj = m.project(&outside)?;
    println!("projection traded?     = {:?}", m.membership(&proj, 1e-10)?);

    // a market without the constant payoff has no risk-free return
    let f2 = Partition::trivial(FiniteSpace::uniform(3)?);
    let bad = MarketModel::new(f2, vec![vec![1.0, 2.0, 3.0].into()], RandomVariable::constant(1.0, 3))?;
    println!("without constants      = {}", bad.risk_free_return().unwrap_err());
    Ok(())
}
