//! Minimizing the monotone mean–variance risk over the return set, with the
//! first-order optimality certificate and the induced pricing kernel.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::affine::AffineSlice;
use super::descent::projected_gradient;
use super::SolverOptions;
use crate::error::{Error, Result};
use crate::market::{MarketModel, PortfolioCoefficients};
use crate::prob::{ConditionalValue, RandomVariable, SOLVER_TOL};
use crate::risk::{mmv, mmv_gradient, mmv_on_atom, solve_kx, MmvParams};

#[derive(Debug, Clone, Serialize)]
pub struct MmvSolution {
    pub x_star: RandomVariable,
    pub alpha_star: PortfolioCoefficients,
    pub k_star: ConditionalValue,
    pub value: ConditionalValue,
    /// Largest defect of `-(1/r^f)·E[V'(x*)·y_j | F] = π(y_j)` over atoms and payoffs.
    pub certificate_residual: f64,
    pub converged: bool,
    pub iterations: Vec<usize>,
    pub stationarity: Vec<f64>,
    #[serde(skip)]
    pub objective_history: Vec<Vec<f64>>,
}

/// Return-set constraint `π(x)_A = 1` on one atom, in basis coordinates.
pub(crate) fn return_slice(m: &MarketModel, atom: usize) -> AffineSlice {
    let basis = m.atom_basis(atom);
    let pi_c = basis.coordinates(&basis.gather(m.state_price()));
    let rows = DMatrix::from_row_slice(1, pi_c.len(), pi_c.as_slice());
    AffineSlice::new(&rows, &DVector::from_element(1, 1.0))
}

pub(crate) fn assemble(
    m: &MarketModel,
    coords: &[DVector<f64>],
) -> Result<(PortfolioCoefficients, RandomVariable)> {
    let atoms = m.partition().atom_count();
    let mut alpha = PortfolioCoefficients::zeros(m.payoff_count(), atoms);
    for (a, c) in coords.iter().enumerate() {
        let coeffs = m.atom_basis(a).coefficients(c);
        for (j, v) in coeffs.iter().enumerate() {
            alpha.alpha[j].0[a] = *v;
        }
    }
    let x = m.synthesize(&alpha)?;
    Ok((alpha, x))
}

/// Minimizes V_β over R_π atom by atom.
pub fn solve_mmv(m: &MarketModel, b: &MmvParams, opts: &SolverOptions) -> Result<MmvSolution> {
    m.risk_free_return()?;
    let f = m.partition();
    let beta = b.resolve(f)?;
    let mut coords = Vec::with_capacity(f.atom_count());
    let mut iterations = Vec::with_capacity(f.atom_count());
    let mut stationarity = Vec::with_capacity(f.atom_count());
    let mut histories = Vec::with_capacity(f.atom_count());
    let mut converged = true;

    for a in 0..f.atom_count() {
        let basis = m.atom_basis(a);
        let slice = return_slice(m, a);
        if !slice.is_consistent() {
            return Err(Error::Infeasible { atoms: vec![a] });
        }
        let weights = basis.weights();
        let out = projected_gradient(
            DVector::zeros(slice.free_dim()),
            |t| {
                let x = slice.payoff(basis, t);
                let (value, grad) = mmv_on_atom(x.as_slice(), weights, beta[a]);
                Ok((value, slice.pull_back(basis, &DVector::from_vec(grad))))
            },
            |t| t.clone(),
            opts.tol,
            opts.max_iter,
        )?;
        converged &= out.converged;
        iterations.push(out.iterations);
        stationarity.push(out.stationarity);
        histories.push(out.history);
        coords.push(slice.point(&out.t));
    }

    let (alpha_star, x_star) = assemble(m, &coords)?;
    let k_star = solve_kx(&x_star, b, f)?;
    let value = mmv(&x_star, b, f)?;
    let certificate_residual = verify_thm46(m, b, &x_star)?;
    Ok(MmvSolution {
        x_star,
        alpha_star,
        k_star,
        value,
        certificate_residual,
        converged,
        iterations,
        stationarity,
        objective_history: histories,
    })
}

fn check_return(m: &MarketModel, x: &RandomVariable) -> Result<()> {
    let price = m.price(x)?;
    match price.iter().position(|p| (p - 1.0).abs() > SOLVER_TOL) {
        Some(atom) => Err(Error::NotAReturn {
            atom,
            price: price[atom],
        }),
        None => Ok(()),
    }
}

/// max over atoms and payoffs of |E[-(1/r^f)·V'_β(x)·y_j | F] - π(y_j)|.
///
/// Zero exactly at the minimizers of V_β over R_π.
pub fn verify_thm46(m: &MarketModel, b: &MmvParams, x: &RandomVariable) -> Result<f64> {
    check_return(m, x)?;
    let f = m.partition();
    let rf = m.risk_free_return()?;
    let grad = mmv_gradient(x, b, f)?;
    let prices = m.payoff_prices();
    let mut worst: f64 = 0.0;
    for (y, py) in m.payoffs().iter().zip(&prices) {
        let pairing = f.inner(&grad, y)?;
        for a in 0..f.atom_count() {
            worst = worst.max((-pairing[a] / rf[a] - py[a]).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct PricingKernel {
    /// ∇V = β(k* - x*)^+, nonnegative.
    pub nabla_v: RandomVariable,
    /// Riesz representer of π in M: the projection of ∇V / r^f onto M.
    pub riesz: RandomVariable,
    /// max |π(y_j) - (1/r^f)·E[∇V·y_j | F]|.
    pub pricing_residual: f64,
}

/// Pricing rule induced by a certified optimum.
pub fn pricing_kernel(
    m: &MarketModel,
    b: &MmvParams,
    sol: &MmvSolution,
    tol: f64,
) -> Result<PricingKernel> {
    if !(sol.certificate_residual <= tol) {
        return Err(Error::Uncertified {
            residual: sol.certificate_residual,
            tol,
        });
    }
    let f = m.partition();
    let rf = m.risk_free_return()?;
    let nabla_v = mmv_gradient(&sol.x_star, b, f)?.scale(-1.0);
    let scaled = nabla_v.mul(&f.lift(&rf.map(|r| 1.0 / r))?)?;
    let riesz = m.project(&scaled)?;
    let prices = m.payoff_prices();
    let mut pricing_residual: f64 = 0.0;
    for (y, py) in m.payoffs().iter().zip(&prices) {
        let implied = f.inner(&scaled, y)?;
        for a in 0..f.atom_count() {
            pricing_residual = pricing_residual.max((implied[a] - py[a]).abs());
        }
    }
    Ok(PricingKernel {
        nabla_v,
        riesz,
        pricing_residual,
    })
}
