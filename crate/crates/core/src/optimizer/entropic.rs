//! Minimizing the entropic risk over returns with a prescribed conditional
//! mean and a conditional p-norm bound.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::affine::AffineSlice;
use super::descent::projected_gradient;
use super::mmv::assemble;
use super::pball::AtomBall;
use super::SolverOptions;
use crate::error::{Error, Result};
use crate::market::{AtomBasis, MarketModel, PortfolioCoefficients};
use crate::prob::{ConditionalValue, NormOrder, RandomVariable};
use crate::risk::{broadcast, entropic, entropic_on_atom, EntropicParams};

/// Largest pairwise spread of multi-start solutions accepted as agreement.
pub const UNIQUENESS_TOL: f64 = 1e-6;
const MAX_START_HALVINGS: usize = 64;
/// Each start descends this much below the requested stationarity, so that
/// flat directions do not show up as disagreement between starts.
const POLISH_FACTOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropicProblemSpec {
    /// Target conditional mean, scalar or one per atom.
    pub w: ConditionalValue,
    /// Conditional norm radius, scalar or one per atom.
    pub r: ConditionalValue,
    pub p: f64,
}

impl EntropicProblemSpec {
    pub fn new(w: ConditionalValue, r: ConditionalValue, p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "norm order must satisfy 1 < p < ∞, got {p}"
            )));
        }
        if w.is_empty() || r.is_empty() {
            return Err(Error::InvalidParameter("w and r must be nonempty".into()));
        }
        if !w.is_finite() {
            return Err(Error::NonFinite("target mean w".into()));
        }
        if let Some(v) = r.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {v}")));
        }
        Ok(Self { w, r, p })
    }

    pub fn scalar(w: f64, r: f64, p: f64) -> Result<Self> {
        Self::new(ConditionalValue::new(vec![w]), ConditionalValue::new(vec![r]), p)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AtomFeasibility {
    pub atom: usize,
    /// Price and mean equalities are jointly solvable in M.
    pub consistent: bool,
    /// Smallest conditional norm on the equality slice (∞ if inconsistent).
    pub min_norm: f64,
    pub radius: f64,
    pub feasible: bool,
}

struct AtomProblem<'a> {
    basis: &'a AtomBasis,
    slice: AffineSlice,
    ball: AtomBall,
    min_t: DVector<f64>,
    min_norm: f64,
}

fn atom_problem<'a>(m: &'a MarketModel, atom: usize, w: f64, r: f64, p: f64) -> AtomProblem<'a> {
    let basis = m.atom_basis(atom);
    let pi_c = basis.coordinates(&basis.gather(m.state_price()));
    let mean_c = basis.coordinates(&DVector::from_element(basis.members().len(), 1.0));
    let d = pi_c.len();
    let rows = DMatrix::from_fn(2, d, |i, j| if i == 0 { pi_c[j] } else { mean_c[j] });
    let slice = AffineSlice::new(&rows, &DVector::from_vec(vec![1.0, w]));
    let origin = basis.synthesize(slice.origin());
    let dirs = basis.basis() * slice.null_basis();
    let ball = AtomBall::new(origin, dirs, basis.weights().to_vec(), p, r);
    let (min_t, min_norm) = if slice.is_consistent() {
        ball.min_norm()
    } else {
        (DVector::zeros(slice.free_dim()), f64::INFINITY)
    };
    AtomProblem {
        basis,
        slice,
        ball,
        min_t,
        min_norm,
    }
}

/// Per atom, whether {x ∈ M : π(x) = 1, E[x|F] = w, ‖x‖_p ≤ r} is nonempty.
pub fn feasibility_check(m: &MarketModel, spec: &EntropicProblemSpec) -> Result<Vec<AtomFeasibility>> {
    let f = m.partition();
    let w = broadcast(&spec.w, f, "w")?;
    let r = broadcast(&spec.r, f, "r")?;
    Ok((0..f.atom_count())
        .map(|a| {
            let prob = atom_problem(m, a, w[a], r[a], spec.p);
            AtomFeasibility {
                atom: a,
                consistent: prob.slice.is_consistent(),
                min_norm: prob.min_norm,
                radius: r[a],
                feasible: prob.min_norm <= r[a],
            }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropicSolution {
    pub x_star: RandomVariable,
    pub alpha_star: PortfolioCoefficients,
    pub value: ConditionalValue,
    /// |π(x*) - 1| per atom.
    pub price_residual: Vec<f64>,
    /// |E[x*|F] - w| per atom.
    pub mean_residual: Vec<f64>,
    /// r - ‖x*‖_p per atom; nonnegative up to rounding.
    pub norm_slack: Vec<f64>,
    /// Largest max-|difference| between solutions from different starts.
    pub starts_agreement: f64,
    pub unique: bool,
    /// KKT multiplier of the norm constraint (0 where inactive).
    pub ball_multiplier: Vec<f64>,
    pub ball_active: Vec<bool>,
    pub converged: bool,
    pub iterations: Vec<usize>,
    pub stationarity: Vec<f64>,
}

impl EntropicSolution {
    pub fn max_feasibility_residual(&self) -> f64 {
        self.price_residual
            .iter()
            .chain(&self.mean_residual)
            .copied()
            .chain(self.norm_slack.iter().map(|s| (-s).max(0.0)))
            .fold(0.0, f64::max)
    }
}

struct AtomRun {
    t: DVector<f64>,
    value: f64,
    gradient: DVector<f64>,
    iterations: usize,
    stationarity: f64,
    converged: bool,
}

fn run_start(
    prob: &AtomProblem,
    gamma: f64,
    start: DVector<f64>,
    opts: &SolverOptions,
) -> Result<AtomRun> {
    let weights = prob.basis.weights();
    let project = |t: &DVector<f64>| prob.ball.project(t).unwrap_or_else(|_| prob.min_t.clone());
    let objective = |t: &DVector<f64>| {
        let x = prob.ball.point(t);
        let (value, z) = entropic_on_atom(x.as_slice(), weights, gamma)?;
        Ok((value, prob.slice.pull_back(prob.basis, &DVector::from_vec(z))))
    };
    // pull starts where the objective overflows toward the min-norm point
    let mut start = start;
    for _ in 0..MAX_START_HALVINGS {
        match objective(&project(&start)) {
            Err(Error::NonFinite(_)) => start = &prob.min_t + (&start - &prob.min_t) * 0.5,
            _ => break,
        }
    }
    let out = projected_gradient(
        start,
        objective,
        project,
        opts.tol * POLISH_FACTOR,
        opts.max_iter,
    )?;
    Ok(AtomRun {
        t: out.t,
        value: out.value,
        gradient: out.gradient,
        iterations: out.iterations,
        stationarity: out.stationarity,
        converged: out.stationarity <= opts.tol,
    })
}

/// Per-atom seed, so that an atom's runs do not depend on the other atoms.
fn atom_rng(seed: u64, atom: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (atom as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Minimizes ρ_γ over G atom by atom from `opts.starts` initial points.
pub fn solve_entropic(
    m: &MarketModel,
    g: &EntropicParams,
    spec: &EntropicProblemSpec,
    opts: &SolverOptions,
) -> Result<EntropicSolution> {
    let f = m.partition();
    let gamma = g.resolve(f)?;
    let w = broadcast(&spec.w, f, "w")?;
    let r = broadcast(&spec.r, f, "r")?;
    let atoms = f.atom_count();

    let problems: Vec<AtomProblem> = (0..atoms)
        .map(|a| atom_problem(m, a, w[a], r[a], spec.p))
        .collect();
    let infeasible: Vec<usize> = problems
        .iter()
        .enumerate()
        .filter(|(a, prob)| !(prob.min_norm <= r[*a]))
        .map(|(a, _)| a)
        .collect();
    if !infeasible.is_empty() {
        return Err(Error::Infeasible { atoms: infeasible });
    }

    let starts = opts.starts.max(1);
    let mut coords = Vec::with_capacity(atoms);
    let mut iterations = Vec::with_capacity(atoms);
    let mut stationarity = Vec::with_capacity(atoms);
    let mut ball_multiplier = Vec::with_capacity(atoms);
    let mut ball_active = Vec::with_capacity(atoms);
    let mut converged = true;
    let mut starts_agreement: f64 = 0.0;

    for (a, prob) in problems.iter().enumerate() {
        let dim = prob.slice.free_dim();
        let mut rng = atom_rng(opts.seed, a);
        let spread = 2.0 * r[a];
        let mut runs = Vec::with_capacity(starts);
        for s in 0..starts {
            let start = if s == 0 {
                prob.min_t.clone()
            } else {
                DVector::from_fn(dim, |_, _| rng.random_range(-spread..=spread))
            };
            runs.push(run_start(prob, gamma[a], start, opts)?);
        }
        let points: Vec<DVector<f64>> = runs.iter().map(|run| prob.ball.point(&run.t)).collect();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                starts_agreement = starts_agreement.max((&points[i] - &points[j]).amax());
            }
        }
        // lowest objective, earliest start on ties
        let best = runs
            .iter()
            .enumerate()
            .min_by(|(i, x), (j, y)| x.value.total_cmp(&y.value).then(i.cmp(j)))
            .map(|(i, _)| i)
            .expect("at least one start");
        let run = &runs[best];
        converged &= runs.iter().all(|run| run.converged);
        iterations.push(runs.iter().map(|run| run.iterations).sum());
        stationarity.push(run.stationarity);

        let active = dim > 0 && prob.ball.norm(&run.t) >= r[a] * (1.0 - 1e-9);
        let lambda = if active {
            let normal = prob.ball.norm_gradient(&run.t);
            let nn = normal.norm_squared();
            if nn > 0.0 {
                -run.gradient.dot(&normal) / nn
            } else {
                0.0
            }
        } else {
            0.0
        };
        ball_active.push(active);
        ball_multiplier.push(lambda);
        coords.push(prob.slice.point(&run.t));
    }

    let (alpha_star, x_star) = assemble(m, &coords)?;
    let value = entropic(&x_star, g, f)?;
    let price = m.price(&x_star)?;
    let mean = f.expect(&x_star)?;
    let norm = f.norm(&x_star, NormOrder::Finite(spec.p))?;
    Ok(EntropicSolution {
        price_residual: price.iter().map(|v| (v - 1.0).abs()).collect(),
        mean_residual: mean.iter().zip(w.iter()).map(|(v, t)| (v - t).abs()).collect(),
        norm_slack: r.iter().zip(norm.iter()).map(|(r, n)| r - n).collect(),
        unique: starts_agreement <= UNIQUENESS_TOL,
        x_star,
        alpha_star,
        value,
        starts_agreement,
        ball_multiplier,
        ball_active,
        converged,
        iterations,
        stationarity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{FiniteSpace, Partition};

    fn two_state() -> MarketModel {
        let f = Partition::trivial(FiniteSpace::uniform(2).unwrap());
        MarketModel::new(
            f,
            vec![RandomVariable::constant(1.0, 2), vec![0.0, 1.0].into()],
            RandomVariable::constant(1.0, 2),
        )
        .unwrap()
    }

    #[test]
    fn price_and_mean_coincide() {
        // ψ = 1 makes price and mean coincide, leaving a line of returns
        let m = two_state();
        let spec = EntropicProblemSpec::scalar(1.0, 10.0, 2.0).unwrap();
        for gamma in [0.1, 1.0, 5.0] {
            let sol = solve_entropic(&m, &EntropicParams::scalar(gamma).unwrap(), &spec, &SolverOptions::default());
            let sol = sol.unwrap();
            assert!(sol.max_feasibility_residual() < 1e-10);
            assert!(sol.starts_agreement <= 1e-8);
        }
    }

    #[test]
    fn zero_dimensional_slice() {
        let f = Partition::trivial(FiniteSpace::uniform(2).unwrap());
        let m = MarketModel::new(
            f,
            vec![RandomVariable::constant(1.0, 2), vec![0.0, 1.0].into()],
            vec![0.5, 1.5].into(),
        )
        .unwrap();
        // (x0 + 3 x1)/4 = 1 and (x0 + x1)/2 = 2 pin x = (4, 0)
        let spec = EntropicProblemSpec::scalar(2.0, 100.0, 2.0).unwrap();
        let sol = solve_entropic(&m, &EntropicParams::scalar(1.0).unwrap(), &spec, &SolverOptions::default()).unwrap();
        assert!((sol.x_star[0] - 4.0).abs() < 1e-12);
        assert!(sol.x_star[1].abs() < 1e-12);
        assert!(sol.converged);
    }

    #[test]
    fn infeasible_radius_and_inconsistent_mean() {
        let m = two_state();
        let tight = EntropicProblemSpec::scalar(1.0, 0.9, 2.0).unwrap();
        let report = feasibility_check(&m, &tight).unwrap();
        assert!(report[0].consistent && !report[0].feasible);
        assert!(matches!(
            solve_entropic(&m, &EntropicParams::scalar(1.0).unwrap(), &tight, &SolverOptions::default()),
            Err(Error::Infeasible { .. })
        ));
        // with ψ = 1 every return has mean 1
        let unreachable = EntropicProblemSpec::scalar(3.0, 1e6, 2.0).unwrap();
        let report = feasibility_check(&m, &unreachable).unwrap();
        assert!(!report[0].consistent && !report[0].feasible);
    }

    #[test]
    fn rejects_norm_orders_outside_open_interval() {
        for p in [1.0, 0.5, f64::INFINITY, f64::NAN] {
            assert!(EntropicProblemSpec::scalar(1.0, 1.0, p).is_err());
        }
        assert!(EntropicProblemSpec::scalar(1.0, 0.0, 2.0).is_err());
    }
}
