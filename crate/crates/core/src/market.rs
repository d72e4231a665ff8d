//! The payoff module M, the pricing functional π and the checks of the
//! standing market assumptions.
//!
//! M is the L⁰(F)-span of a finite list of payoffs. Pricing uses a
//! state-price density ψ, so `π(x) = E[ψ·x | F]`. For every atom the
//! restricted payoffs are factored once (weighted SVD); the left factor gives
//! a basis of M on that atom which is orthonormal for the conditional L²
//! inner product, and all projections, rank tests and solver
//! parametrizations work in those coordinates.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::prob::{ConditionalValue, FiniteSpace, Partition, RandomVariable, EXACT_TOL};

/// Relative singular-value threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-10;
/// Largest Gram condition number accepted by [`MarketModel::project`].
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Per-atom factorization of the payoff block.
#[derive(Debug, Clone)]
pub struct AtomBasis {
    members: Vec<usize>,
    weights: Vec<f64>,
    /// Orthonormal basis of M restricted to the atom, one column per retained
    /// singular value, outcome rows in member order.
    q: DMatrix<f64>,
    /// Maps basis coordinates to payoff coefficients: α = V Σ⁻¹ c.
    coeff_map: DMatrix<f64>,
    singular_values: Vec<f64>,
    rank: usize,
}

impl AtomBasis {
    fn new(members: Vec<usize>, weights: Vec<f64>, payoffs: &[RandomVariable]) -> Self {
        let n = members.len();
        let d = payoffs.len();
        let scaled = DMatrix::from_fn(n, d, |i, j| weights[i].sqrt() * payoffs[j][members[i]]);
        let svd = linalg::svd(&scaled);
        let rank = svd.rank(RANK_TOL);
        let sv = svd.singular_values;
        let q = DMatrix::from_fn(n, rank, |i, k| svd.u[(i, k)] / weights[i].sqrt());
        let coeff_map = DMatrix::from_fn(d, rank, |j, k| svd.v[(j, k)] / sv[k]);
        Self {
            members,
            weights,
            q,
            coeff_map,
            singular_values: sv,
            rank,
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Conditional outcome weights p_ω / P(A).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Condition number of the Gram matrix of the retained directions.
    pub fn gram_condition(&self) -> f64 {
        if self.rank == 0 {
            return 1.0;
        }
        let r = self.singular_values[0] / self.singular_values[self.rank - 1];
        r * r
    }

    /// Restriction of `x` to the atom.
    pub fn gather(&self, x: &RandomVariable) -> DVector<f64> {
        DVector::from_iterator(self.members.len(), self.members.iter().map(|&o| x[o]))
    }

    /// Coordinates of the projection of an atom-restricted vector onto M:
    /// `c_k = E[q_k · v | A]`.
    pub fn coordinates(&self, v: &DVector<f64>) -> DVector<f64> {
        let wv = DVector::from_iterator(v.len(), v.iter().zip(&self.weights).map(|(a, w)| a * w));
        self.q.tr_mul(&wv)
    }

    /// Atom-restricted payoff with basis coordinates `c`.
    pub fn synthesize(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.q * c
    }

    /// Payoff coefficients producing basis coordinates `c`.
    pub fn coefficients(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.coeff_map * c
    }

    /// Conditional expectation on the atom of an atom-restricted vector.
    pub fn expect(&self, v: &DVector<f64>) -> f64 {
        v.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    pub fn norm2(&self, v: &DVector<f64>) -> f64 {
        v.iter()
            .zip(&self.weights)
            .map(|(a, w)| w * a * a)
            .sum::<f64>()
            .sqrt()
    }
}

/// One F-measurable coefficient per payoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PortfolioCoefficients {
    pub alpha: Vec<ConditionalValue>,
}

impl PortfolioCoefficients {
    pub fn zeros(payoffs: usize, atoms: usize) -> Self {
        Self {
            alpha: vec![ConditionalValue::constant(0.0, atoms); payoffs],
        }
    }

    /// Unit weight on payoff `j` on every atom.
    pub fn unit(j: usize, payoffs: usize, atoms: usize) -> Self {
        let mut c = Self::zeros(payoffs, atoms);
        c.alpha[j] = ConditionalValue::constant(1.0, atoms);
        c
    }

    /// The same scalar weights on every atom.
    pub fn broadcast(weights: &[f64], atoms: usize) -> Self {
        Self {
            alpha: weights
                .iter()
                .map(|&w| ConditionalValue::constant(w, atoms))
                .collect(),
        }
    }
}

/// On-disk description of a space and partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceFile {
    pub probs: Vec<f64>,
    pub atoms: Vec<usize>,
}

impl SpaceFile {
    pub fn into_partition(self) -> Result<Partition> {
        Partition::new(FiniteSpace::new(self.probs)?, self.atoms)
    }
}

/// On-disk description of a market.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub probs: Vec<f64>,
    pub atoms: Vec<usize>,
    pub state_price: Vec<f64>,
    pub payoffs: Vec<Vec<f64>>,
}

/// Per-atom outcome of the risk-free return check.
#[derive(Debug, Clone, Serialize)]
pub struct Assumption41Report {
    pub constant_in_span: Vec<bool>,
    pub unit_price: ConditionalValue,
    pub satisfied: Vec<bool>,
}

impl Assumption41Report {
    pub fn holds(&self) -> bool {
        self.satisfied.iter().all(|&b| b)
    }
}

/// Per-atom rank of the pair (π, E[·|F]) on M, with a witness z₀ ∈ Z_π whose
/// conditional mean is nonzero on every atom when the rank is two everywhere.
#[derive(Debug, Clone, Serialize)]
pub struct Assumption48Report {
    pub ranks: Vec<usize>,
    pub satisfied: Vec<bool>,
    pub witness: Option<RandomVariable>,
}

impl Assumption48Report {
    pub fn holds(&self) -> bool {
        self.satisfied.iter().all(|&b| b)
    }
}

#[derive(Debug, Clone)]
pub struct MarketModel {
    partition: Partition,
    payoffs: Vec<RandomVariable>,
    state_price: RandomVariable,
    bases: Vec<AtomBasis>,
}

impl MarketModel {
    pub fn new(
        partition: Partition,
        payoffs: Vec<RandomVariable>,
        state_price: RandomVariable,
    ) -> Result<Self> {
        if payoffs.is_empty() {
            return Err(Error::Model("at least one payoff is required".into()));
        }
        partition.check_rv(&state_price)?;
        if !state_price.is_finite() {
            return Err(Error::NonFinite("state price density".into()));
        }
        for (j, y) in payoffs.iter().enumerate() {
            partition.check_rv(y)?;
            if !y.is_finite() {
                return Err(Error::NonFinite(format!("payoff {j}")));
            }
        }
        let bases = (0..partition.atom_count())
            .map(|a| {
                AtomBasis::new(
                    partition.members(a).to_vec(),
                    partition.atom_weights(a),
                    &payoffs,
                )
            })
            .collect();
        Ok(Self {
            partition,
            payoffs,
            state_price,
            bases,
        })
    }

    pub fn from_file_contents(file: ModelFile) -> Result<Self> {
        let partition = SpaceFile {
            probs: file.probs,
            atoms: file.atoms,
        }
        .into_partition()?;
        Self::new(
            partition,
            file.payoffs.into_iter().map(RandomVariable::new).collect(),
            RandomVariable::new(file.state_price),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file_contents(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_file_contents(&self) -> ModelFile {
        ModelFile {
            probs: self.partition.probs().to_vec(),
            atoms: self.partition.atom_map().to_vec(),
            state_price: self.state_price.to_vec(),
            payoffs: self.payoffs.iter().map(|y| y.to_vec()).collect(),
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn payoffs(&self) -> &[RandomVariable] {
        &self.payoffs
    }

    pub fn payoff_count(&self) -> usize {
        self.payoffs.len()
    }

    pub fn state_price(&self) -> &RandomVariable {
        &self.state_price
    }

    pub fn atom_basis(&self, atom: usize) -> &AtomBasis {
        &self.bases[atom]
    }

    fn check_coefficients(&self, a: &PortfolioCoefficients) -> Result<()> {
        Error::check_len("portfolio coefficients", self.payoffs.len(), a.alpha.len())?;
        for c in &a.alpha {
            self.partition.check_cv(c)?;
        }
        Ok(())
    }

    /// x = Σ_j α_j·y_j with F-measurable α_j.
    pub fn synthesize(&self, a: &PortfolioCoefficients) -> Result<RandomVariable> {
        self.check_coefficients(a)?;
        let f = &self.partition;
        Ok(RandomVariable::new(
            (0..f.outcome_count())
                .map(|o| {
                    let atom = f.atom_of(o);
                    self.payoffs
                        .iter()
                        .zip(&a.alpha)
                        .map(|(y, al)| al[atom] * y[o])
                        .sum()
                })
                .collect(),
        ))
    }

    /// π(x) = E[ψ·x | F].
    pub fn price(&self, x: &RandomVariable) -> Result<ConditionalValue> {
        self.partition.inner(&self.state_price, x)
    }

    /// Prices of every payoff, indexed `[payoff][atom]`.
    pub fn payoff_prices(&self) -> Vec<ConditionalValue> {
        self.payoffs
            .iter()
            .map(|y| self.price(y).expect("payoffs match the space"))
            .collect()
    }

    /// Per atom, whether `x` restricted to the atom lies in the span of the
    /// restricted payoffs (weighted least-squares residual ≤ tol·(1 + ‖x‖)).
    pub fn membership(&self, x: &RandomVariable, tol: f64) -> Result<Vec<bool>> {
        self.partition.check_rv(x)?;
        Ok(self
            .bases
            .iter()
            .map(|b| {
                let v = b.gather(x);
                let proj = b.synthesize(&b.coordinates(&v));
                b.norm2(&(&v - proj)) <= tol * (1.0 + b.norm2(&v))
            })
            .collect())
    }

    pub fn assumption_41(&self, tol: f64) -> Assumption41Report {
        let one = RandomVariable::constant(1.0, self.partition.outcome_count());
        let constant_in_span = self.membership(&one, tol).expect("dimension matches");
        let unit_price = self.price(&one).expect("dimension matches");
        let satisfied = constant_in_span
            .iter()
            .zip(unit_price.iter())
            .map(|(&inside, &p)| inside && p > 0.0)
            .collect();
        Assumption41Report {
            constant_in_span,
            unit_price,
            satisfied,
        }
    }

    /// r^f = 1/π(1) per atom, after checking that constants are traded and
    /// carry a positive price.
    pub fn risk_free_return(&self) -> Result<ConditionalValue> {
        let report = self.assumption_41(EXACT_TOL);
        for a in 0..self.partition.atom_count() {
            if !report.constant_in_span[a] {
                return Err(Error::NoRiskFreeReturn {
                    atom: a,
                    reason: "the constant payoff 1 is not spanned".into(),
                });
            }
            if report.unit_price[a] <= 0.0 {
                return Err(Error::NoRiskFreeReturn {
                    atom: a,
                    reason: format!("pi(1) = {} is not positive", report.unit_price[a]),
                });
            }
        }
        Ok(report.unit_price.map(|p| 1.0 / p))
    }

    /// Checks that the functionals α ↦ π(x)_A and α ↦ E[x|F]_A are linearly
    /// independent on every atom and builds a witness z₀ ∈ Z_π with
    /// `E[z₀|F] ≠ 0` everywhere when they are.
    pub fn assumption_48(&self, tol: f64) -> Assumption48Report {
        let prices = self.payoff_prices();
        let f = &self.partition;
        let mut ranks = Vec::with_capacity(f.atom_count());
        let mut pieces = Vec::with_capacity(f.atom_count());
        for (a, b) in self.bases.iter().enumerate() {
            let d = self.payoffs.len();
            let means: Vec<f64> = self
                .payoffs
                .iter()
                .map(|y| b.expect(&b.gather(y)))
                .collect();
            let rows = DMatrix::from_fn(2, d, |i, j| if i == 0 { prices[j][a] } else { means[j] });
            let rank = linalg::svd(&rows).rank(tol);
            ranks.push(rank);

            // witness in basis coordinates: the mean functional with its
            // component along the price functional removed
            let psi = b.gather(&self.state_price);
            let pi_c = b.coordinates(&psi);
            let mean_c = b.coordinates(&DVector::from_element(b.members.len(), 1.0));
            let pn = pi_c.norm_squared();
            let c = if pn > 0.0 {
                &mean_c - &pi_c * (mean_c.dot(&pi_c) / pn)
            } else {
                mean_c.clone()
            };
            pieces.push(b.synthesize(&c));
        }
        let satisfied: Vec<bool> = ranks.iter().map(|&r| r == 2).collect();
        let witness = satisfied.iter().all(|&s| s).then(|| {
            let mut z = vec![0.0; f.outcome_count()];
            for (b, piece) in self.bases.iter().zip(&pieces) {
                for (i, &o) in b.members.iter().enumerate() {
                    z[o] = piece[i];
                }
            }
            RandomVariable::new(z)
        });
        Assumption48Report {
            ranks,
            satisfied,
            witness,
        }
    }

    /// Conditional-L² orthogonal projection onto M.
    pub fn project(&self, z: &RandomVariable) -> Result<RandomVariable> {
        self.partition.check_rv(z)?;
        let mut out = vec![0.0; z.len()];
        for (a, b) in self.bases.iter().enumerate() {
            let condition = b.gram_condition();
            if condition > MAX_GRAM_CONDITION {
                return Err(Error::IllConditioned { atom: a, condition });
            }
            let proj = b.synthesize(&b.coordinates(&b.gather(z)));
            for (i, &o) in b.members.iter().enumerate() {
                out[o] = proj[i];
            }
        }
        Ok(RandomVariable::new(out))
    }
}
