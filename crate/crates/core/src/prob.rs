//! Finite probability spaces, sub-σ-algebras given by partitions, and the
//! conditional operators acting on them.
//!
//! Every outcome carries strictly positive mass, so almost-sure statements
//! become pointwise ones. A sub-σ-algebra is represented by the map
//! `outcome -> atom`; an F-measurable quantity is one real per atom
//! ([`ConditionalValue`]), a general random variable is one real per outcome
//! ([`RandomVariable`]).

use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for exact algebraic identities.
pub const EXACT_TOL: f64 = 1e-10;
/// Absolute tolerance for solver outputs.
pub const SOLVER_TOL: f64 = 1e-8;

const PROB_SUM_TOL: f64 = 1e-12;

/// Neumaier summation, so long uniform vectors pass the sum check.
fn compensated_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let t = sum + x;
        comp += if f64::abs(sum) >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    probs: Vec<f64>,
}

impl FiniteSpace {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidProbabilities("no outcomes".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::InvalidProbabilities(format!(
                    "outcome {i} has probability {p}; every outcome must carry strictly positive mass"
                )));
            }
        }
        let total = compensated_sum(&probs);
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidProbabilities(format!(
                "probabilities sum to {total:.15}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// `n` equally likely outcomes.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidProbabilities("no outcomes".into()));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn outcome_count(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn expect(&self, x: &RandomVariable) -> Result<f64> {
        Error::check_len("random variable", self.probs.len(), x.len())?;
        Ok(self.probs.iter().zip(x.iter()).map(|(p, v)| p * v).sum())
    }
}

/// Order of a conditional norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormOrder {
    Finite(f64),
    Infinity,
}

/// A sub-σ-algebra generated by a finite partition, bound to its space.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    space: FiniteSpace,
    atom_of: Vec<usize>,
    members: Vec<Vec<usize>>,
    atom_prob: Vec<f64>,
}

impl Partition {
    pub fn new(space: FiniteSpace, atom_of: Vec<usize>) -> Result<Self> {
        Error::check_len("atom map", space.outcome_count(), atom_of.len())?;
        let atom_count = atom_of.iter().copied().max().map_or(0, |m| m + 1);
        let mut members = vec![Vec::new(); atom_count];
        for (omega, &a) in atom_of.iter().enumerate() {
            members[a].push(omega);
        }
        if let Some(empty) = members.iter().position(Vec::is_empty) {
            return Err(Error::InvalidPartition(format!(
                "atom {empty} owns no outcome; atom indices must be contiguous from 0"
            )));
        }
        let atom_prob = members
            .iter()
            .map(|m| m.iter().map(|&o| space.probs[o]).sum())
            .collect();
        Ok(Self {
            space,
            atom_of,
            members,
            atom_prob,
        })
    }

    /// The trivial σ-algebra {∅, Ω}.
    pub fn trivial(space: FiniteSpace) -> Self {
        let n = space.outcome_count();
        Self::new(space, vec![0; n]).expect("single atom is always valid")
    }

    /// The full power set: every outcome is its own atom.
    pub fn discrete(space: FiniteSpace) -> Self {
        let n = space.outcome_count();
        Self::new(space, (0..n).collect()).expect("singleton atoms are always valid")
    }

    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.space.probs
    }

    pub fn outcome_count(&self) -> usize {
        self.atom_of.len()
    }

    pub fn atom_count(&self) -> usize {
        self.members.len()
    }

    pub fn atom_of(&self, outcome: usize) -> usize {
        self.atom_of[outcome]
    }

    pub fn atom_map(&self) -> &[usize] {
        &self.atom_of
    }

    pub fn members(&self, atom: usize) -> &[usize] {
        &self.members[atom]
    }

    pub fn atom_prob(&self, atom: usize) -> f64 {
        self.atom_prob[atom]
    }

    /// P(ω | A) for the atom A containing ω.
    pub fn cond_prob(&self, outcome: usize) -> f64 {
        self.space.probs[outcome] / self.atom_prob[self.atom_of[outcome]]
    }

    /// Conditional weights of the outcomes of one atom, in member order.
    pub fn atom_weights(&self, atom: usize) -> Vec<f64> {
        let pa = self.atom_prob[atom];
        self.members[atom]
            .iter()
            .map(|&o| self.space.probs[o] / pa)
            .collect()
    }

    pub(crate) fn check_rv(&self, x: &RandomVariable) -> Result<()> {
        Error::check_len("random variable", self.outcome_count(), x.len())
    }

    pub(crate) fn check_cv(&self, c: &ConditionalValue) -> Result<()> {
        Error::check_len("conditional value", self.atom_count(), c.len())
    }

    fn per_atom(&self, f: impl Fn(usize, &[usize]) -> f64) -> ConditionalValue {
        ConditionalValue(
            self.members
                .iter()
                .enumerate()
                .map(|(a, m)| f(a, m))
                .collect(),
        )
    }

    /// E[x | F].
    pub fn expect(&self, x: &RandomVariable) -> Result<ConditionalValue> {
        self.check_rv(x)?;
        let p = self.probs();
        Ok(self.per_atom(|a, m| {
            m.iter().map(|&o| p[o] * x[o]).sum::<f64>() / self.atom_prob[a]
        }))
    }

    /// E[x·y | F].
    pub fn inner(&self, x: &RandomVariable, y: &RandomVariable) -> Result<ConditionalValue> {
        self.check_rv(x)?;
        self.check_rv(y)?;
        let p = self.probs();
        Ok(self.per_atom(|a, m| {
            m.iter().map(|&o| p[o] * x[o] * y[o]).sum::<f64>() / self.atom_prob[a]
        }))
    }

    /// D[x | F] = E[(x - E[x|F])² | F], computed by centring first.
    pub fn variance(&self, x: &RandomVariable) -> Result<ConditionalValue> {
        let mean = self.expect(x)?;
        let p = self.probs();
        Ok(self.per_atom(|a, m| {
            let v = m
                .iter()
                .map(|&o| {
                    let d = x[o] - mean[a];
                    p[o] * d * d
                })
                .sum::<f64>()
                / self.atom_prob[a];
            v.max(0.0)
        }))
    }

    /// |||x|||_p = E[|x|^p | F]^{1/p}, or the atom-wise max of |x| for p = ∞.
    pub fn norm(&self, x: &RandomVariable, order: NormOrder) -> Result<ConditionalValue> {
        self.check_rv(x)?;
        let pw = match order {
            NormOrder::Finite(pw) if pw.is_finite() && pw >= 1.0 => Some(pw),
            NormOrder::Finite(pw) => {
                return Err(Error::InvalidParameter(format!(
                    "norm order {pw} must be at least 1"
                )))
            }
            NormOrder::Infinity => None,
        };
        let p = self.probs();
        Ok(self.per_atom(|a, m| {
            let scale = m.iter().map(|&o| x[o].abs()).fold(0.0, f64::max);
            match pw {
                None => scale,
                Some(_) if scale == 0.0 => 0.0,
                Some(pw) => {
                    let s = m
                        .iter()
                        .map(|&o| p[o] * (x[o].abs() / scale).powf(pw))
                        .sum::<f64>()
                        / self.atom_prob[a];
                    scale * s.powf(1.0 / pw)
                }
            }
        }))
    }

    /// Embeds an F-measurable value as a random variable constant on atoms.
    pub fn lift(&self, c: &ConditionalValue) -> Result<RandomVariable> {
        self.check_cv(c)?;
        Ok(RandomVariable(self.atom_of.iter().map(|&a| c[a]).collect()))
    }

    /// Finds α ∈ L⁰(F) with x = α·y, provided the conditional Cauchy–Schwarz
    /// inequality is an equality on every atom.
    ///
    /// Atoms where x vanishes get α = 0.
    pub fn colinearity(
        &self,
        x: &RandomVariable,
        y: &RandomVariable,
        tol: f64,
    ) -> Result<ConditionalValue> {
        let xy = self.inner(x, y)?;
        let nx = self.norm(x, NormOrder::Finite(2.0))?;
        let ny = self.norm(y, NormOrder::Finite(2.0))?;
        let mut alpha = Vec::with_capacity(self.atom_count());
        for (a, m) in self.members.iter().enumerate() {
            if ny[a] == 0.0 {
                return Err(Error::ZeroNorm { atom: a });
            }
            if nx[a] == 0.0 {
                alpha.push(0.0);
                continue;
            }
            let bound = nx[a] * ny[a];
            let defect = bound - xy[a].abs();
            if defect > tol * (1.0 + bound) {
                return Err(Error::NotColinear { atom: a, defect });
            }
            let al = xy[a] / (ny[a] * ny[a]);
            let xmax = m.iter().map(|&o| x[o].abs()).fold(0.0, f64::max);
            let resid = m
                .iter()
                .map(|&o| (x[o] - al * y[o]).abs())
                .fold(0.0, f64::max);
            if resid > tol * (1.0 + xmax) {
                return Err(Error::NotColinear {
                    atom: a,
                    defect: resid,
                });
            }
            alpha.push(al);
        }
        Ok(ConditionalValue(alpha))
    }

    /// 1_A·x for the union A of the given atoms.
    pub fn restrict(&self, x: &RandomVariable, atoms: &[usize]) -> Result<RandomVariable> {
        self.check_rv(x)?;
        let mut keep = vec![false; self.atom_count()];
        for &a in atoms {
            keep[a] = true;
        }
        Ok(RandomVariable(
            x.iter()
                .zip(&self.atom_of)
                .map(|(&v, &a)| if keep[a] { v } else { 0.0 })
                .collect(),
        ))
    }
}

macro_rules! vector_newtype {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn new(values: Vec<f64>) -> Self {
                Self(values)
            }

            pub fn constant(value: f64, len: usize) -> Self {
                Self(vec![value; len])
            }

            pub fn values(&self) -> &[f64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
                Self(self.0.iter().map(|&v| f(v)).collect())
            }

            fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
                Error::check_len(stringify!($name), self.len(), other.len())?;
                Ok(Self(
                    self.0
                        .iter()
                        .zip(&other.0)
                        .map(|(&a, &b)| f(a, b))
                        .collect(),
                ))
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                self.zip_with(other, |a, b| a + b)
            }

            pub fn sub(&self, other: &Self) -> Result<Self> {
                self.zip_with(other, |a, b| a - b)
            }

            pub fn mul(&self, other: &Self) -> Result<Self> {
                self.zip_with(other, |a, b| a * b)
            }

            pub fn min(&self, other: &Self) -> Result<Self> {
                self.zip_with(other, f64::min)
            }

            pub fn max(&self, other: &Self) -> Result<Self> {
                self.zip_with(other, f64::max)
            }

            pub fn scale(&self, s: f64) -> Self {
                self.map(|v| s * v)
            }

            pub fn positive_part(&self) -> Self {
                self.map(|v| v.max(0.0))
            }

            pub fn max_abs(&self) -> f64 {
                self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
            }

            /// Largest pointwise |self - other|.
            pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
                Ok(self.sub(other)?.max_abs())
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}

vector_newtype!(RandomVariable);
vector_newtype!(ConditionalValue);

#[cfg(test)]
mod tests {
    use super::*;

    fn four_outcomes() -> Partition {
        Partition::new(FiniteSpace::uniform(4).unwrap(), vec![0, 0, 1, 1]).unwrap()
    }

    fn two_point(p: f64) -> Partition {
        Partition::trivial(FiniteSpace::new(vec![p, 1.0 - p]).unwrap())
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert!(FiniteSpace::new(vec![0.5, 0.4]).is_err());
        assert!(FiniteSpace::new(vec![1.0, 0.0]).is_err());
        assert!(FiniteSpace::new(vec![1.5, -0.5]).is_err());
        assert!(FiniteSpace::new(vec![]).is_err());
    }

    #[test]
    fn rejects_gappy_atoms() {
        let s = FiniteSpace::uniform(3).unwrap();
        assert!(Partition::new(s.clone(), vec![0, 2, 2]).is_err());
        assert!(Partition::new(s, vec![0, 1]).is_err());
    }

    #[test]
    fn cond_expect_examples() {
        let f = four_outcomes();
        let e = f.expect(&vec![1.0, 3.0, 2.0, 6.0].into()).unwrap();
        assert_eq!(e.values(), &[2.0, 4.0]);
        let c = f.expect(&RandomVariable::constant(7.5, 4)).unwrap();
        assert_eq!(c.values(), &[7.5, 7.5]);
        let g = Partition::trivial(FiniteSpace::new(vec![0.1, 0.9]).unwrap());
        let v = g.expect(&vec![10.0, 0.0].into()).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15);
        assert!(f.expect(&vec![1.0, 2.0].into()).is_err());
    }

    #[test]
    fn cond_variance_examples() {
        let f = four_outcomes();
        assert_eq!(
            f.variance(&RandomVariable::constant(3.0, 4)).unwrap().values(),
            &[0.0, 0.0]
        );
        let v = two_point(0.5).variance(&vec![0.0, 1.0].into()).unwrap();
        assert!((v[0] - 0.25).abs() < 1e-15);
        let v = f.variance(&vec![1.0, 3.0, 2.0, 6.0].into()).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn cond_norm_examples() {
        let f = four_outcomes();
        for p in [1.0, 2.0, 3.5] {
            let n = f
                .norm(&RandomVariable::constant(-2.5, 4), NormOrder::Finite(p))
                .unwrap();
            assert!((n[0] - 2.5).abs() < 1e-14 && (n[1] - 2.5).abs() < 1e-14);
        }
        let g = two_point(0.5);
        let n = g.norm(&vec![0.0, 1.0].into(), NormOrder::Finite(2.0)).unwrap();
        assert!((n[0] - 0.5f64.sqrt()).abs() < 1e-12);
        let n = g.norm(&vec![1.0, -3.0].into(), NormOrder::Infinity).unwrap();
        assert_eq!(n[0], 3.0);
        assert!(g.norm(&vec![1.0, 1.0].into(), NormOrder::Finite(0.5)).is_err());
    }

    #[test]
    fn lift_examples() {
        let f = four_outcomes();
        let x = f.lift(&vec![2.0, 4.0].into()).unwrap();
        assert_eq!(x.values(), &[2.0, 2.0, 4.0, 4.0]);
        let g = Partition::trivial(FiniteSpace::uniform(3).unwrap());
        assert_eq!(g.lift(&vec![5.0].into()).unwrap().values(), &[5.0; 3]);
        assert!(f.lift(&vec![1.0].into()).is_err());
    }

    #[test]
    fn lattice_examples() {
        let x = RandomVariable::from(vec![-1.0, 2.0]);
        assert_eq!(x.positive_part().values(), &[0.0, 2.0]);
        let m = RandomVariable::from(vec![1.0, 5.0])
            .min(&vec![3.0, 2.0].into())
            .unwrap();
        assert_eq!(m.values(), &[1.0, 2.0]);
        assert!(x.min(&vec![1.0].into()).is_err());
    }

    #[test]
    fn colinearity_examples() {
        let f = four_outcomes();
        let y = RandomVariable::from(vec![1.0, -2.0, 0.5, 3.0]);
        let a = f.colinearity(&y.scale(3.0), &y, 1e-10).unwrap();
        assert!((a[0] - 3.0).abs() < 1e-12 && (a[1] - 3.0).abs() < 1e-12);
        let z = f
            .colinearity(&RandomVariable::constant(0.0, 4), &y, 1e-10)
            .unwrap();
        assert_eq!(z.values(), &[0.0, 0.0]);
        // per-atom different multipliers are still colinear in L⁰(F)
        let x = f.lift(&vec![2.0, -1.0].into()).unwrap().mul(&y).unwrap();
        let a = f.colinearity(&x, &y, 1e-10).unwrap();
        assert!((a[0] - 2.0).abs() < 1e-12 && (a[1] + 1.0).abs() < 1e-12);
        let bad = RandomVariable::from(vec![1.0, 1.0, 0.5, 3.0]);
        assert!(matches!(
            f.colinearity(&bad, &y, 1e-10),
            Err(Error::NotColinear { atom: 0, .. })
        ));
        let zero_y = RandomVariable::from(vec![0.0, 0.0, 1.0, 1.0]);
        assert!(matches!(
            f.colinearity(&y, &zero_y, 1e-10),
            Err(Error::ZeroNorm { atom: 0 })
        ));
    }

    #[test]
    fn restrict_zeroes_other_atoms() {
        let f = four_outcomes();
        let x = f.restrict(&vec![1.0, 2.0, 3.0, 4.0].into(), &[1]).unwrap();
        assert_eq!(x.values(), &[0.0, 0.0, 3.0, 4.0]);
    }
}
