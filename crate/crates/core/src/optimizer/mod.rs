//! Portfolio problems over the return set R_π = {x ∈ M : π(x) = 1}.
//!
//! Both risk measures are local, so every problem splits into independent
//! per-atom problems. On each atom the linear equality constraints are
//! eliminated by an affine parametrization ([`affine::AffineSlice`]) and the
//! remaining problem is solved by projected gradient descent.

pub mod affine;
pub mod brute;
mod descent;
pub mod entropic;
pub mod mmv;
pub mod pball;

use serde::Serialize;

pub use brute::{brute_force_minimize, BruteConstraints, BruteForceResult, GridSpec};
pub use entropic::{
    feasibility_check, solve_entropic, AtomFeasibility, EntropicProblemSpec, EntropicSolution,
};
pub use mmv::{pricing_kernel, solve_mmv, verify_thm46, MmvSolution, PricingKernel};

pub const DEFAULT_SEED: u64 = 0x5EED_C0DE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Stationarity tolerance on the projected-gradient norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Random starting points for the entropic problem.
    pub starts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 10_000,
            starts: 5,
            seed: DEFAULT_SEED,
        }
    }
}
