//! Randomized checker for the axioms of a conditional convex risk measure:
//! monotonicity, F-cash invariance, L⁰-convexity with F-measurable weights
//! and locality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::prob::{ConditionalValue, FiniteSpace, Partition, RandomVariable, EXACT_TOL};
use crate::risk::{
    entropic, entropic_on_atom, mean_variance, mean_variance_on_atom, mmv, mmv_on_atom,
    EntropicParams, MmvParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "measure", rename_all = "snake_case")]
pub enum RiskMeasureKind {
    Entropic { gamma: f64 },
    Mmv { beta: f64 },
    MeanVariance { beta: f64 },
}

impl RiskMeasureKind {
    pub fn evaluate(&self, x: &RandomVariable, f: &Partition) -> Result<ConditionalValue> {
        match *self {
            Self::Entropic { gamma } => entropic(x, &EntropicParams::scalar(gamma)?, f),
            Self::Mmv { beta } => mmv(x, &MmvParams::scalar(beta)?, f),
            Self::MeanVariance { beta } => mean_variance(x, &MmvParams::scalar(beta)?, f),
        }
    }

    /// Value on one atom from its values and conditional weights.
    pub fn evaluate_on_atom(&self, values: &[f64], weights: &[f64]) -> Result<f64> {
        Ok(match *self {
            Self::Entropic { gamma } => entropic_on_atom(values, weights, gamma)?.0,
            Self::Mmv { beta } => mmv_on_atom(values, weights, beta).0,
            Self::MeanVariance { beta } => mean_variance_on_atom(values, weights, beta),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Entropic { .. } => "entropic",
            Self::Mmv { .. } => "mmv",
            Self::MeanVariance { .. } => "mean_variance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Monotonicity,
    CashInvariance,
    Convexity,
    Locality,
}

impl Axiom {
    pub const ALL: [Axiom; 4] = [
        Axiom::Monotonicity,
        Axiom::CashInvariance,
        Axiom::Convexity,
        Axiom::Locality,
    ];
}

/// A failing instance: the inequality `lhs ≤ rhs` (or equality) broke on `atom`.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub trial: usize,
    pub atom: usize,
    pub probs: Vec<f64>,
    pub atoms: Vec<usize>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomResult {
    pub axiom: Axiom,
    pub passed: bool,
    pub failures: usize,
    pub max_violation: f64,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub measure: RiskMeasureKind,
    pub trials: usize,
    pub tolerance: f64,
    pub results: Vec<AxiomResult>,
}

impl AxiomReport {
    pub fn result(&self, axiom: Axiom) -> &AxiomResult {
        self.results
            .iter()
            .find(|r| r.axiom == axiom)
            .expect("every axiom is reported")
    }

    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

struct Tally {
    axiom: Axiom,
    failures: usize,
    max_violation: f64,
    witness: Option<Witness>,
}

impl Tally {
    fn new(axiom: Axiom) -> Self {
        Self {
            axiom,
            failures: 0,
            max_violation: 0.0,
            witness: None,
        }
    }

    /// Records `lhs - rhs` as a violation when it exceeds the tolerance.
    fn record(&mut self, violation: f64, tol: f64, witness: impl FnOnce() -> Witness) {
        self.max_violation = self.max_violation.max(violation);
        if violation > tol {
            self.failures += 1;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }

    fn finish(self) -> AxiomResult {
        AxiomResult {
            axiom: self.axiom,
            passed: self.failures == 0,
            failures: self.failures,
            max_violation: self.max_violation,
            witness: self.witness,
        }
    }
}

fn random_partition(rng: &mut ChaCha8Rng) -> Partition {
    let n = rng.random_range(2..=12);
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let head: f64 = probs[..n - 1].iter().sum();
    probs[n - 1] = 1.0 - head;
    let atoms = rng.random_range(1..=n.min(4));
    // first `atoms` outcomes seed the atoms so none is empty
    let atom_of: Vec<usize> = (0..n)
        .map(|o| if o < atoms { o } else { rng.random_range(0..atoms) })
        .collect();
    Partition::new(FiniteSpace::new(probs).expect("normalized"), atom_of).expect("seeded atoms")
}

fn random_rv(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> RandomVariable {
    RandomVariable::new((0..n).map(|_| rng.random_range(-scale..scale)).collect())
}

fn random_cv(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> ConditionalValue {
    ConditionalValue::new((0..n).map(|_| rng.random_range(lo..hi)).collect())
}

/// Runs `trials` randomized checks of every axiom on freshly drawn spaces
/// and partitions.
pub fn axiom_check(measure: RiskMeasureKind, trials: usize, seed: u64) -> Result<AxiomReport> {
    let tol = EXACT_TOL;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tallies: Vec<Tally> = Axiom::ALL.iter().map(|&a| Tally::new(a)).collect();

    for trial in 0..trials.max(1) {
        let f = random_partition(&mut rng);
        let n = f.outcome_count();
        let na = f.atom_count();
        let x = random_rv(&mut rng, n, 3.0);
        let y = random_rv(&mut rng, n, 3.0);
        let fx = measure.evaluate(&x, &f)?;
        let fy = measure.evaluate(&y, &f)?;
        let witness = |x: &RandomVariable, y: &RandomVariable, atom, lhs, rhs| Witness {
            trial,
            atom,
            probs: f.probs().to_vec(),
            atoms: f.atom_map().to_vec(),
            x: x.to_vec(),
            y: y.to_vec(),
            lhs,
            rhs,
        };

        // monotonicity: x_up ≥ y pointwise, using sparse nonnegative spikes
        let spikes = RandomVariable::new(
            (0..n)
                .map(|_| {
                    if rng.random_bool(0.3) {
                        rng.random_range(0.0..8.0)
                    } else {
                        0.0
                    }
                })
                .collect(),
        );
        let x_up = y.add(&spikes)?;
        let f_up = measure.evaluate(&x_up, &f)?;
        for a in 0..na {
            tallies[0].record(f_up[a] - fy[a], tol, || {
                witness(&x_up, &y, a, f_up[a], fy[a])
            });
        }

        // cash invariance
        let m = random_cv(&mut rng, na, -5.0, 5.0);
        let shifted = x.add(&f.lift(&m)?)?;
        let fs = measure.evaluate(&shifted, &f)?;
        for a in 0..na {
            let expected = fx[a] - m[a];
            tallies[1].record((fs[a] - expected).abs(), tol, || {
                witness(&shifted, &x, a, fs[a], expected)
            });
        }

        // L⁰-convexity with F-measurable weights
        let lambda = random_cv(&mut rng, na, 0.0, 1.0);
        let l = f.lift(&lambda)?;
        let mix = RandomVariable::new(
            (0..n)
                .map(|o| l[o] * x[o] + (1.0 - l[o]) * y[o])
                .collect(),
        );
        let fm = measure.evaluate(&mix, &f)?;
        for a in 0..na {
            let rhs = lambda[a] * fx[a] + (1.0 - lambda[a]) * fy[a];
            tallies[2].record(fm[a] - rhs, tol, || witness(&x, &y, a, fm[a], rhs));
        }

        // locality: f(1_A x) = f(x) on A, for each atom and a random union
        let mut events: Vec<Vec<usize>> = (0..na).map(|a| vec![a]).collect();
        events.push((0..na).filter(|_| rng.random_bool(0.5)).collect());
        for event in events {
            let restricted = f.restrict(&x, &event)?;
            let fr = measure.evaluate(&restricted, &f)?;
            for &a in &event {
                tallies[3].record((fr[a] - fx[a]).abs(), tol, || {
                    witness(&restricted, &x, a, fr[a], fx[a])
                });
            }
        }
    }

    Ok(AxiomReport {
        measure,
        trials: trials.max(1),
        tolerance: tol,
        results: tallies.into_iter().map(Tally::finish).collect(),
    })
}
