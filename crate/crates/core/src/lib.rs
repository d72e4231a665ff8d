//! Conditional convex risk measures on finite probability spaces.
//!
//! The crate evaluates the conditional entropic risk measure and the
//! (monotone) conditional mean–variance risk measure with respect to a
//! sub-σ-algebra given by a finite partition, solves the associated
//! portfolio problems over return sets with optimality certificates, and
//! reproduces the classical non-coercivity sequences on the unit interval.

pub mod axioms;
pub mod cli;
pub mod counterexamples;
pub mod error;
pub mod linalg;
pub mod market;
pub mod optimizer;
pub mod prob;
pub mod quadrature;
pub mod risk;

pub use error::{Error, Result};
pub use market::{MarketModel, PortfolioCoefficients};
pub use prob::{ConditionalValue, FiniteSpace, NormOrder, Partition, RandomVariable};
pub use risk::{DualElement, EntropicParams, MmvParams};
