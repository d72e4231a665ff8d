//! Non-coercive return sequences on ([0, 1], Lebesgue).
//!
//! `x_n` is 0 on `[0, 2^-(n+1))`, `c_n ω^{-1/p}` on `(2^-(n+1), 1/2]` and
//! -1 on `(1/2, 1]`, with `c_n` normalizing `E[x_n] = 1`. Its p-th moment
//! grows like `n ln 2` while the entropic and monotone mean–variance risks
//! stay bounded. Closed forms are primary; quadrature and finite
//! discretizations serve as checks.

use std::f64::consts::{LN_2, SQRT_2};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{FiniteSpace, Partition, RandomVariable};
use crate::quadrature::integrate;

pub const QUAD_TOL: f64 = 1e-10;
/// Tolerance on the quadrature normalization `E[x_n] = 1`.
pub const MEAN_TOL: f64 = 1e-8;
pub const CASE2_LOWER: f64 = 0.8;
pub const CASE1_LOWER: f64 = 2.0;

/// Upper end of the small-β range, `1/((3/2)(√5-√2)(√2+1) + 1/2)`.
pub fn case3_upper() -> f64 {
    1.0 / (1.5 * (5f64.sqrt() - SQRT_2) * (SQRT_2 + 1.0) + 0.5)
}

fn check_np(n: u32, p: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("sequence index n must be ≥ 1".into()));
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidParameter(format!("p must satisfy 1 < p < ∞, got {p}")));
    }
    Ok(())
}

/// Normalizing constant of `x_n`.
pub fn c_n(n: u32, p: f64) -> Result<f64> {
    check_np(n, p)?;
    let e = 1.0 - 1.0 / p;
    Ok(1.5 * e / (0.5f64.powf(e) - 0.5f64.powf((n as f64 + 1.0) * e)))
}

/// The piecewise random variable `x_n` on the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PiecewiseDensityRv {
    pub n: u32,
    pub p: f64,
    pub c: f64,
}

impl PiecewiseDensityRv {
    pub fn new(n: u32, p: f64) -> Result<Self> {
        Ok(Self { n, p, c: c_n(n, p)? })
    }

    /// Left end `2^-(n+1)` of the region where `x_n` is positive.
    pub fn cutoff(&self) -> f64 {
        0.5f64.powi(self.n as i32 + 1)
    }

    pub fn eval(&self, omega: f64) -> f64 {
        if omega < self.cutoff() {
            0.0
        } else if omega <= 0.5 {
            self.c * omega.powf(-1.0 / self.p)
        } else {
            -1.0
        }
    }

    /// Integral of `g(x_n(ω))` over the positive region, after the
    /// substitution `ω = t^{p/(p-1)}` that turns `x_n` into `c·t^{-1/(p-1)}`
    /// and the mean integrand into a constant.
    fn integrate_positive(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let q = self.p / (self.p - 1.0);
        let lo = self.cutoff().powf(1.0 / q);
        let hi = 0.5f64.powf(1.0 / q);
        let c = self.c;
        let p = self.p;
        let r = integrate(
            |t| g(c * t.powf(-1.0 / (p - 1.0))) * q * t.powf(q - 1.0),
            lo,
            hi,
            QUAD_TOL,
        )?;
        Ok(r.value)
    }

    /// E[x_n] by quadrature.
    pub fn mean(&self) -> Result<f64> {
        Ok(self.integrate_positive(|x| x)? - 0.5)
    }

    /// `c_n^p · n · ln 2`, the p-th moment over the positive region.
    pub fn moment_lower_bound(&self) -> f64 {
        self.c.powf(self.p) * self.n as f64 * LN_2
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropicRow {
    pub n: u32,
    pub p: f64,
    pub gamma: f64,
    pub c_n: f64,
    pub norm_lower_bound: f64,
    /// (1/γ) ln E[e^{-γ x_n}] by quadrature.
    pub entropic_value: f64,
    pub mean: f64,
    /// E[e^{-γ x_n}] ≤ e^γ, i.e. the value is at most 1.
    pub within_bound: bool,
}

/// Moment bound, entropic risk and normalization check for one term.
pub fn example311_report(n: u32, p: f64, gamma: f64) -> Result<EntropicRow> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let x = PiecewiseDensityRv::new(n, p)?;
    let mean = x.mean()?;
    if (mean - 1.0).abs() > MEAN_TOL {
        return Err(Error::Quadrature { error: (mean - 1.0).abs() });
    }
    let mgf = x.cutoff() + x.integrate_positive(|v| (-gamma * v).exp())? + 0.5 * gamma.exp();
    let entropic_value = mgf.ln() / gamma;
    Ok(EntropicRow {
        n,
        p,
        gamma,
        c_n: x.c,
        norm_lower_bound: x.moment_lower_bound(),
        entropic_value,
        mean,
        within_bound: entropic_value <= 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaCase {
    /// β ≥ 2.
    Large,
    /// 4/5 < β < 2.
    Moderate,
    /// β below [`case3_upper`].
    Small,
}

impl BetaCase {
    pub fn classify(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        if beta >= CASE1_LOWER {
            Ok(Self::Large)
        } else if beta > CASE2_LOWER {
            Ok(Self::Moderate)
        } else if beta < case3_upper() {
            Ok(Self::Small)
        } else {
            Err(Error::UncoveredBeta {
                beta,
                case3_upper: case3_upper(),
            })
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Large => "case1",
            Self::Moderate => "case2",
            Self::Small => "case3",
        }
    }
}

/// Where the level `k_n` falls relative to the values of `x_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// k_n ≤ 0: only the -1 region lies below k_n.
    BelowZero,
    /// 0 < k_n < √2·c_n: the zero and -1 regions lie below k_n.
    BelowPositive,
    /// k_n cuts through the positive region.
    Crossing,
    /// k_n ≥ max x_n, so x_n ∈ G_β and no truncation happens.
    Untruncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KnSolution {
    pub k: f64,
    pub case: BetaCase,
    pub regime: Regime,
}

/// The level k_n with E[(k_n - x_n)^+] = 1/β.
///
/// The β-range fixes the case; within the small-β case the regime is read
/// off the shortfall at the breakpoints √2·c_n and c_n/√a, since the
/// quadratic root is only valid between them.
pub fn example312_kn(n: u32, beta: f64) -> Result<KnSolution> {
    let case = BetaCase::classify(beta)?;
    let c = c_n(n, 2.0)?;
    let a = 0.5f64.powi(n as i32 + 1);
    let target = 1.0 / beta;
    let below_positive = || ((target - 0.5) / (0.5 + a), Regime::BelowPositive);
    let (k, regime) = match case {
        BetaCase::Large => (2.0 / beta - 1.0, Regime::BelowZero),
        BetaCase::Moderate => below_positive(),
        BetaCase::Small => {
            let k1 = SQRT_2 * c;
            let k2 = c / a.sqrt();
            if target <= 0.5 * (k1 + 1.0) + k1 * a {
                below_positive()
            } else if target >= k2 - 1.0 {
                (1.0 + target, Regime::Untruncated)
            } else {
                let an = SQRT_2 * c + target - 0.5;
                let bn = 2.0 * c * (1.0 + a).sqrt();
                ((an + (an * an - bn * bn).sqrt()) / (2.0 * (1.0 + a)), Regime::Crossing)
            }
        }
    };
    Ok(KnSolution { k, case, regime })
}

#[derive(Debug, Clone, Serialize)]
pub struct MmvRow {
    pub n: u32,
    pub beta: f64,
    pub c_n: f64,
    pub k_n: f64,
    pub case: BetaCase,
    pub regime: Regime,
    pub v_beta: f64,
    /// `c_n² · n · ln 2`, a lower bound on E[x_n²].
    pub norm_sq: f64,
}

/// V_β(x_n) from the closed forms, with the crossing-regime integral of
/// `(k - c ω^{-1/2})²` computed by quadrature.
pub fn example312_report(n: u32, beta: f64) -> Result<MmvRow> {
    let sol = example312_kn(n, beta)?;
    let x = PiecewiseDensityRv::new(n, 2.0)?;
    let (c, a, k) = (x.c, x.cutoff(), sol.k);
    let second_moment = match sol.regime {
        Regime::BelowZero => (k + 1.0).powi(2) / 2.0,
        Regime::BelowPositive => k * k * a + (k + 1.0).powi(2) / 2.0,
        Regime::Crossing => {
            let lo = (c / k).powi(2);
            let tail = integrate(|w| (k - c / w.sqrt()).powi(2), lo, 0.5, QUAD_TOL)?;
            (k + 1.0).powi(2) / 2.0 + k * k * a + tail.value
        }
        Regime::Untruncated => {
            // U_β(x_n) itself: E[(k - x)²] with k = E[x] + 1/β
            c * c * n as f64 * LN_2 + 0.5 - 1.0 + 1.0 / (beta * beta)
        }
    };
    let v_beta = 1.0 / beta - k + 0.5 * beta * (second_moment - 1.0 / (beta * beta));
    Ok(MmvRow {
        n,
        beta,
        c_n: c,
        k_n: k,
        case: sol.case,
        regime: sol.regime,
        v_beta,
        norm_sq: x.moment_lower_bound(),
    })
}

/// Interval `[lo, hi]` containing V_β(x_n) for every n ≥ 1.
///
/// The lower end is V_β(x) ≥ -E[x] = -1. The upper end bounds each regime
/// using `c_n ∈ [3√2/4, (3/2)(√2+1)]` and the resulting bounds on k_n.
pub fn example312_envelope(beta: f64) -> Result<(f64, f64)> {
    let case = BetaCase::classify(beta)?;
    let c_lo = 0.75 * SQRT_2;
    let c_hi = 1.5 * (SQRT_2 + 1.0);
    let hi = match case {
        BetaCase::Large => 1.0 - 0.5 / beta,
        BetaCase::Moderate => {
            let s = 1.0 / beta - 0.5;
            let (k_lo, k_hi) = (s / 0.75, s / 0.5);
            1.0 / beta - k_lo + 0.5 * beta * (k_hi * k_hi / 4.0 + (k_hi + 1.0).powi(2) / 2.0)
        }
        BetaCase::Small => {
            // crossing: k ∈ [√2 c, a_n/(1+a)], E[((k-x)^+)²] ≤ (k+1)²/2 + k²/4 + k²/2
            let k_hi = SQRT_2 * c_hi + 1.0 / beta - 0.5;
            let crossing = 1.0 / beta - SQRT_2 * c_lo
                + 0.5 * beta * ((k_hi + 1.0).powi(2) / 2.0 + 0.75 * k_hi * k_hi);
            // untruncated: c_n² 2^{n+1} ≤ (1+1/β)² and n 2^{-(n+1)} ≤ 1/4
            let untruncated = -1.0 + 0.5 * beta * ((1.0 + 1.0 / beta).powi(2) * LN_2 / 4.0 - 0.5);
            let s = 1.0 / beta - 0.5;
            let (k_lo, k_hi) = (s / 0.75, s / 0.5);
            let below = 1.0 / beta - k_lo + 0.5 * beta * (k_hi * k_hi / 4.0 + (k_hi + 1.0).powi(2) / 2.0);
            crossing.max(untruncated).max(below)
        }
    };
    Ok((-1.0, hi))
}

#[derive(Debug, Clone, Serialize)]
pub struct MmvSequence {
    pub beta: f64,
    pub rows: Vec<MmvRow>,
    pub envelope: (f64, f64),
    /// Every V_β(x_n) lies inside the envelope.
    pub bounded: bool,
    /// Smallest n whose level cuts through the positive region.
    pub first_crossing_n: Option<u32>,
}

pub fn example312_sequence(n_max: u32, beta: f64) -> Result<MmvSequence> {
    let envelope = example312_envelope(beta)?;
    let rows = (1..=n_max)
        .map(|n| example312_report(n, beta))
        .collect::<Result<Vec<_>>>()?;
    let bounded = rows
        .iter()
        .all(|r| r.v_beta >= envelope.0 - 1e-12 && r.v_beta <= envelope.1 + 1e-12);
    let first_crossing_n = rows.iter().find(|r| r.regime == Regime::Crossing).map(|r| r.n);
    Ok(MmvSequence {
        beta,
        rows,
        envelope,
        bounded,
        first_crossing_n,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropicSequence {
    pub p: f64,
    pub gamma: f64,
    pub rows: Vec<EntropicRow>,
    /// `c_∞^p ln 2` with `c_∞ = lim c_n`; every moment bound exceeds this
    /// times n, so the moments diverge.
    pub growth_rate: f64,
    pub bounded: bool,
}

pub fn example311_sequence(n_max: u32, p: f64, gamma: f64) -> Result<EntropicSequence> {
    let rows = (1..=n_max)
        .map(|n| example311_report(n, p, gamma))
        .collect::<Result<Vec<_>>>()?;
    let e = 1.0 - 1.0 / p;
    let c_inf = 1.5 * e / 0.5f64.powf(e);
    let growth_rate = c_inf.powf(p) * LN_2;
    let bounded = rows.iter().all(|r| r.within_bound);
    Ok(EntropicSequence {
        p,
        gamma,
        rows,
        growth_rate,
        bounded,
    })
}

/// Midpoint samples of `x_n` on `m` equally likely cells, with the trivial
/// partition.
pub fn discretize_unit_interval(m: usize, x: &PiecewiseDensityRv) -> Result<(Partition, RandomVariable)> {
    discretize(m, |w| x.eval(w))
}

/// Midpoint samples of any function on `m ≥ 100` cells.
pub fn discretize(m: usize, f: impl Fn(f64) -> f64) -> Result<(Partition, RandomVariable)> {
    if m < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 cells, got {m}")));
    }
    let space = FiniteSpace::uniform(m)?;
    let values = (0..m).map(|i| f((i as f64 + 0.5) / m as f64)).collect();
    Ok((Partition::trivial(space), RandomVariable::new(values)))
}

/// Delimited per-n table.
pub fn entropic_table(seq: &EntropicSequence, sep: char) -> String {
    let mut out = format!("n{sep}c_n{sep}norm_lower_bound{sep}entropic_value{sep}mean\n");
    for r in &seq.rows {
        let _ = writeln!(
            out,
            "{}{sep}{:.12}{sep}{:.12}{sep}{:.12}{sep}{:.12}",
            r.n, r.c_n, r.norm_lower_bound, r.entropic_value, r.mean
        );
    }
    out
}

pub fn mmv_table(seq: &MmvSequence, sep: char) -> String {
    let mut out = format!("n{sep}c_n{sep}k_n{sep}regime{sep}v_beta{sep}norm_sq\n");
    for r in &seq.rows {
        let regime = serde_json::to_value(r.regime)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{}{sep}{:.12}{sep}{:.12}{sep}{regime}{sep}{:.12}{sep}{:.12}",
            r.n, r.c_n, r.k_n, r.v_beta, r.norm_sq
        );
    }
    out
}
