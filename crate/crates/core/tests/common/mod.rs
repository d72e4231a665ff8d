//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use condrisk::{FiniteSpace, MarketModel, Partition, RandomVariable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_probs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let head: f64 = probs[..n - 1].iter().sum();
    probs[n - 1] = 1.0 - head;
    probs
}

/// A partition of `n` outcomes into `atoms` nonempty atoms.
pub fn random_partition(rng: &mut ChaCha8Rng, n: usize, atoms: usize) -> Partition {
    let atom_of = (0..n)
        .map(|o| if o < atoms { o } else { rng.random_range(0..atoms) })
        .collect();
    Partition::new(FiniteSpace::new(random_probs(rng, n)).unwrap(), atom_of).unwrap()
}

/// Market with the constant payoff and `d - 1` random payoffs, positive state
/// prices, every atom holding at least `min_per_atom` outcomes.
pub fn random_market(rng: &mut ChaCha8Rng, d: usize, atoms: usize, min_per_atom: usize) -> MarketModel {
    let n = atoms * min_per_atom + rng.random_range(0..=3);
    let atom_of: Vec<usize> = (0..n)
        .map(|o| if o < atoms * min_per_atom { o % atoms } else { rng.random_range(0..atoms) })
        .collect();
    let f = Partition::new(FiniteSpace::new(random_probs(rng, n)).unwrap(), atom_of).unwrap();
    let mut payoffs = vec![RandomVariable::constant(1.0, n)];
    for _ in 1..d {
        payoffs.push(RandomVariable::new((0..n).map(|_| rng.random_range(0.0..2.0)).collect()));
    }
    let psi = RandomVariable::new((0..n).map(|_| rng.random_range(0.5..1.5)).collect());
    MarketModel::new(f, payoffs, psi).unwrap()
}

/// Random variable with entries uniform in `[-scale, scale]`.
pub fn random_rv(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> RandomVariable {
    RandomVariable::new((0..n).map(|_| rng.random_range(-scale..scale)).collect())
}

/// `y = -w/E[w|F]` for random weights, about a quarter of them zero.
pub fn random_dual(rng: &mut ChaCha8Rng, f: &Partition) -> condrisk::DualElement {
    loop {
        let w: Vec<f64> = (0..f.outcome_count())
            .map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.0..3.0) })
            .collect();
        if let Ok(y) = condrisk::DualElement::from_weights(&w.into(), f) {
            return y;
        }
    }
}

/// Conditionally orthonormal basis of the traded zero-price payoffs, one
/// random variable per direction, each supported on a single atom.
pub fn zero_price_directions(m: &MarketModel) -> Vec<(usize, RandomVariable)> {
    use condrisk::optimizer::affine::AffineSlice;
    use nalgebra::{DMatrix, DVector};
    let f = m.partition();
    let mut out = Vec::new();
    for a in 0..f.atom_count() {
        let basis = m.atom_basis(a);
        let pi_c = basis.coordinates(&basis.gather(m.state_price()));
        let rows = DMatrix::from_row_slice(1, pi_c.len(), pi_c.as_slice());
        let slice = AffineSlice::new(&rows, &DVector::from_element(1, 1.0));
        for col in slice.null_basis().column_iter() {
            let local = basis.synthesize(&col.into_owned());
            let mut z = vec![0.0; f.outcome_count()];
            for (i, &o) in basis.members().iter().enumerate() {
                z[o] = local[i];
            }
            out.push((a, RandomVariable::new(z)));
        }
    }
    out
}

/// Root of `Σ q (k - v)^+ = target` by plain bisection.
pub fn bisect_truncation_level(values: &[f64], weights: &[f64], target: f64) -> f64 {
    let shortfall = |k: f64| -> f64 {
        values.iter().zip(weights).map(|(v, q)| q * (k - v).max(0.0)).sum()
    };
    let lo0 = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi0 = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + target;
    let (mut lo, mut hi) = (lo0, hi0 + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if shortfall(mid) < target { lo = mid } else { hi = mid }
    }
    0.5 * (lo + hi)
}
