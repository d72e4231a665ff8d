use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("not colinear on atom {atom}: Cauchy-Schwarz defect {defect:e}")]
    NotColinear { atom: usize, defect: f64 },

    #[error("reference variable has zero conditional norm on atom {atom}")]
    ZeroNorm { atom: usize },

    #[error("not a dual element on atom {atom}: {reason}")]
    NotDualElement { atom: usize, reason: String },

    #[error("risk-free return unavailable on atom {atom}: {reason}")]
    NoRiskFreeReturn { atom: usize, reason: String },

    #[error("ill-conditioned payoff Gram matrix on atom {atom} (condition number {condition:e})")]
    IllConditioned { atom: usize, condition: f64 },

    #[error("payoff does not lie in the return set on atom {atom}: price {price}")]
    NotAReturn { atom: usize, price: f64 },

    #[error("infeasible constraints on atoms {atoms:?}")]
    Infeasible { atoms: Vec<usize> },

    #[error("solution is not certified: residual {residual:e} exceeds {tol:e}")]
    Uncertified { residual: f64, tol: f64 },

    #[error(
        "beta = {beta} is not covered: supported ranges are [2, inf), (4/5, 2) and (0, {case3_upper:.6})"
    )]
    UncoveredBeta { beta: f64, case3_upper: f64 },

    #[error("quadrature did not converge: estimated error {error:e}")]
    Quadrature { error: f64 },

    #[error("{0}")]
    Unsupported(String),

    #[error("model file: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what,
                expected,
                found,
            })
        }
    }
}
