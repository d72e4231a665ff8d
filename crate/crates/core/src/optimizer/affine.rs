//! Per-atom elimination of linear equality constraints.
//!
//! On an atom, payoffs in M are written `x = Q c` with `Q` orthonormal for
//! the conditional inner product. Linear equalities `C c = b` are solved once
//! as `c = c₀ + N t`, where `c₀` is the minimum-norm particular solution and
//! `N` an orthonormal basis of ker C. Because `Q` is orthonormal and `c₀ ⊥
//! range N`, the free directions `Q N` are conditionally orthonormal and
//! orthogonal to the particular payoff `Q c₀`.

use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::market::{AtomBasis, RANK_TOL};

#[derive(Debug, Clone)]
pub struct AffineSlice {
    origin: DVector<f64>,
    null_basis: DMatrix<f64>,
    consistent: bool,
    inconsistency: f64,
}

impl AffineSlice {
    /// Solves `rows · c = rhs` in basis coordinates.
    pub fn new(rows: &DMatrix<f64>, rhs: &DVector<f64>) -> Self {
        let dim = rows.ncols();
        if dim == 0 {
            let inconsistency = rhs.norm();
            return Self {
                origin: DVector::zeros(0),
                null_basis: DMatrix::zeros(0, 0),
                consistent: inconsistency == 0.0,
                inconsistency,
            };
        }
        let svd = linalg::svd(rows);
        let sv = &svd.singular_values;
        let rank = svd.rank(RANK_TOL);

        let mut origin = DVector::zeros(dim);
        for i in 0..rank {
            let coef = svd.u.column(i).dot(rhs) / sv[i];
            origin += svd.v.column(i) * coef;
        }
        let residual = rows * &origin - rhs;
        let inconsistency = residual.norm();
        let consistent = inconsistency <= 1e-9 * (1.0 + rhs.norm());
        // trailing right singular vectors span ker C
        let null_basis = svd.v.columns(rank, dim - rank).into_owned();
        Self {
            origin,
            null_basis,
            consistent,
            inconsistency,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.consistent
    }

    pub fn inconsistency(&self) -> f64 {
        self.inconsistency
    }

    /// Number of free parameters.
    pub fn free_dim(&self) -> usize {
        self.null_basis.ncols()
    }

    pub fn origin(&self) -> &DVector<f64> {
        &self.origin
    }

    /// Orthonormal basis of the constraint nullspace, one column per parameter.
    pub fn null_basis(&self) -> &DMatrix<f64> {
        &self.null_basis
    }

    /// Basis coordinates of the point with parameters `t`.
    pub fn point(&self, t: &DVector<f64>) -> DVector<f64> {
        &self.origin + &self.null_basis * t
    }

    /// Parameters of the point closest to basis coordinates `c`.
    pub fn parameters(&self, c: &DVector<f64>) -> DVector<f64> {
        self.null_basis.tr_mul(&(c - &self.origin))
    }

    /// Atom-restricted payoff `Q (c₀ + N t)`.
    pub fn payoff(&self, basis: &AtomBasis, t: &DVector<f64>) -> DVector<f64> {
        basis.synthesize(&self.point(t))
    }

    /// Chain rule: parameter gradient of a function whose derivative in
    /// direction `h` is `E[z·h | A]`.
    pub fn pull_back(&self, basis: &AtomBasis, representer: &DVector<f64>) -> DVector<f64> {
        self.null_basis.tr_mul(&basis.coordinates(representer))
    }
}
