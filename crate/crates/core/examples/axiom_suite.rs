//! Randomized axiom checks. The plain mean-variance measure is not monotone,
//! and the checker prints the witness it found.

use condrisk::axioms::{axiom_check, RiskMeasureKind};

fn main() -> condrisk::Result<()> {
    for measure in [
        RiskMeasureKind::Entropic { gamma: 1.0 },
        RiskMeasureKind::Mmv { beta: 1.0 },
        RiskMeasureKind::MeanVariance { beta: 1.0 },
    ] {
        let report = axiom_check(measure, 200, 7)?;
        println!("{}", measure.name());
        for r in &report.results {
            println!(
                "  {:<16} passed={:<5} failures={:<4} max violation={:.2e}",
                format!("{:?}", r.axiom),
                r.passed,
                r.failures,
                r.max_violation
            );
            if let Some(w) = &r.witness {
                println!("    witness: x={:?}", w.x);
                println!("             y={:?}", w.y);
                println!("             lhs={} rhs={}", w.lhs, w.rhs);
            }
        }
    }
    Ok(())
}
