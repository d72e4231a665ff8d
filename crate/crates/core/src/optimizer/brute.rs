//! Dense grid search over the free parameters of a small constrained
//! problem. Slow and crude, but independent of the descent machinery.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::affine::AffineSlice;
use super::mmv::assemble;
use crate::axioms::RiskMeasureKind;
use crate::error::{Error, Result};
use crate::market::MarketModel;
use crate::prob::{ConditionalValue, RandomVariable};
use crate::risk::broadcast;

/// Axis-aligned grid `lo, lo + step, …, ≤ hi` in every free direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.hi >= self.lo && self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad grid {self:?}")));
        }
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.lo + i as f64 * self.step).collect())
    }
}

/// Constraints on top of `π(x) = 1`.
#[derive(Debug, Clone, Default)]
pub struct BruteConstraints {
    /// Conditional mean target.
    pub mean: Option<ConditionalValue>,
    /// Norm order and radius.
    pub norm: Option<(f64, ConditionalValue)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BruteForceResult {
    /// Grid minimum per atom (∞ if no grid point is feasible).
    pub value: Vec<f64>,
    /// Free parameters of the minimizer per atom.
    pub argmin: Vec<Vec<f64>>,
    pub x: RandomVariable,
}

/// Grid minimum of the risk measure over returns satisfying `constraints`.
///
/// Each atom is parametrized by orthonormal coordinates of the equality
/// slice; at most two free directions are supported.
pub fn brute_force_minimize(
    m: &MarketModel,
    objective: RiskMeasureKind,
    constraints: &BruteConstraints,
    grid: GridSpec,
) -> Result<BruteForceResult> {
    let f = m.partition();
    let axis = grid.points()?;
    let mean = constraints.mean.as_ref().map(|w| broadcast(w, f, "mean")).transpose()?;
    let norm = match &constraints.norm {
        Some((p, r)) => Some((*p, broadcast(r, f, "radius")?)),
        None => None,
    };

    let mut value = Vec::with_capacity(f.atom_count());
    let mut argmin = Vec::with_capacity(f.atom_count());
    let mut coords = Vec::with_capacity(f.atom_count());
    for a in 0..f.atom_count() {
        let basis = m.atom_basis(a);
        let pi_c = basis.coordinates(&basis.gather(m.state_price()));
        let mut rows = vec![pi_c];
        let mut rhs = vec![1.0];
        if let Some(w) = &mean {
            rows.push(basis.coordinates(&DVector::from_element(basis.members().len(), 1.0)));
            rhs.push(w[a]);
        }
        let mat = DMatrix::from_fn(rows.len(), basis.rank(), |i, j| rows[i][j]);
        let slice = AffineSlice::new(&mat, &DVector::from_vec(rhs));
        if !slice.is_consistent() {
            return Err(Error::Infeasible { atoms: vec![a] });
        }
        let dim = slice.free_dim();
        if dim > 2 {
            return Err(Error::Unsupported(format!(
                "grid search needs at most 2 free parameters, atom {a} has {dim}"
            )));
        }
        let candidates: Vec<Vec<f64>> = match dim {
            0 => vec![vec![]],
            1 => axis.iter().map(|&s| vec![s]).collect(),
            _ => axis
                .iter()
                .flat_map(|&s| axis.iter().map(move |&u| vec![s, u]))
                .collect(),
        };
        let weights = basis.weights();
        let mut best = (f64::INFINITY, vec![0.0; dim]);
        for t in candidates {
            let x = slice.payoff(basis, &DVector::from_column_slice(&t));
            if let Some((p, r)) = &norm {
                let moment: f64 = x.iter().zip(weights).map(|(v, q)| q * v.abs().powf(*p)).sum();
                if moment.powf(1.0 / p) > r[a] {
                    continue;
                }
            }
            // overflowing points are simply not candidates
            let Ok(v) = objective.evaluate_on_atom(x.as_slice(), weights) else {
                continue;
            };
            if v < best.0 {
                best = (v, t);
            }
        }
        coords.push(slice.point(&DVector::from_column_slice(&best.1)));
        value.push(best.0);
        argmin.push(best.1);
    }
    let (_, x) = assemble(m, &coords)?;
    Ok(BruteForceResult { value, argmin, x })
}
