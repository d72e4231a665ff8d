//! Conditional entropic and (monotone) mean–variance risk measures.
//!
//! All measures act atom by atom: the value on an atom depends only on the
//! restriction of the argument to that atom. Gradients are returned as
//! outcome-indexed representers `z`, paired with a direction `h` through
//! `E[z·h | F]`.

use crate::error::{Error, Result};
use crate::prob::{ConditionalValue, Partition, RandomVariable, EXACT_TOL};

/// Largest magnitude of `γ·x` accepted by the entropic measure after the
/// per-atom shift.
pub const MAX_EXPONENT: f64 = 700.0;

pub(crate) fn broadcast(
    param: &ConditionalValue,
    f: &Partition,
    name: &'static str,
) -> Result<ConditionalValue> {
    let v = match param.len() {
        1 => ConditionalValue::constant(param[0], f.atom_count()),
        n => {
            Error::check_len(name, f.atom_count(), n)?;
            param.clone()
        }
    };
    Ok(v)
}

fn positive_param(values: ConditionalValue, name: &str) -> Result<ConditionalValue> {
    if values.is_empty() {
        return Err(Error::InvalidParameter(format!("{name} is empty")));
    }
    if let Some((a, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v > 0.0))
    {
        return Err(Error::InvalidParameter(format!(
            "{name} must be strictly positive, got {v} on atom {a}"
        )));
    }
    Ok(values)
}

/// Risk aversion γ of the entropic measure, one value per atom or a scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropicParams {
    gamma: ConditionalValue,
}

impl EntropicParams {
    pub fn new(gamma: ConditionalValue) -> Result<Self> {
        Ok(Self {
            gamma: positive_param(gamma, "gamma")?,
        })
    }

    pub fn scalar(gamma: f64) -> Result<Self> {
        Self::new(ConditionalValue::new(vec![gamma]))
    }

    pub fn gamma(&self) -> &ConditionalValue {
        &self.gamma
    }

    pub fn resolve(&self, f: &Partition) -> Result<ConditionalValue> {
        broadcast(&self.gamma, f, "gamma")
    }
}

/// Risk aversion β of the mean–variance measures, one value per atom or a scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct MmvParams {
    beta: ConditionalValue,
}

impl MmvParams {
    pub fn new(beta: ConditionalValue) -> Result<Self> {
        Ok(Self {
            beta: positive_param(beta, "beta")?,
        })
    }

    pub fn scalar(beta: f64) -> Result<Self> {
        Self::new(ConditionalValue::new(vec![beta]))
    }

    pub fn beta(&self) -> &ConditionalValue {
        &self.beta
    }

    pub fn resolve(&self, f: &Partition) -> Result<ConditionalValue> {
        broadcast(&self.beta, f, "beta")
    }
}

/// An element of P⁰_c ∩ D: `y ≤ 0` and `E[y|F] = -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualElement {
    y: RandomVariable,
}

impl DualElement {
    pub fn new(y: RandomVariable, f: &Partition) -> Result<Self> {
        check_in_d(&y, f)?;
        if let Some(o) = y.iter().position(|&v| v > EXACT_TOL) {
            return Err(Error::NotDualElement {
                atom: f.atom_of(o),
                reason: format!("y = {} > 0 at outcome {o}", y[o]),
            });
        }
        Ok(Self { y })
    }

    /// Builds `y = -w / E[w|F]` from nonnegative weights with positive
    /// conditional mass on every atom.
    pub fn from_weights(w: &RandomVariable, f: &Partition) -> Result<Self> {
        if w.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidParameter("weights must be nonnegative".into()));
        }
        let mass = f.expect(w)?;
        if let Some(a) = mass.iter().position(|&m| m <= 0.0) {
            return Err(Error::NotDualElement {
                atom: a,
                reason: "weights vanish on the whole atom".into(),
            });
        }
        let lifted = f.lift(&mass)?;
        let y = RandomVariable::new(w.iter().zip(lifted.iter()).map(|(v, m)| -v / m).collect());
        Self::new(y, f)
    }

    pub fn y(&self) -> &RandomVariable {
        &self.y
    }

    pub fn into_inner(self) -> RandomVariable {
        self.y
    }
}

fn check_in_d(y: &RandomVariable, f: &Partition) -> Result<()> {
    let ey = f.expect(y)?;
    if let Some(a) = ey.iter().position(|&e| (e + 1.0).abs() > EXACT_TOL) {
        return Err(Error::NotDualElement {
            atom: a,
            reason: format!("E[y|F] = {} instead of -1", ey[a]),
        });
    }
    Ok(())
}

fn check_finite(x: &RandomVariable) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(o) => Err(Error::NonFinite(format!("x[{o}] = {}", x[o]))),
        None => Ok(()),
    }
}

/// Per atom: the shift `s = max(-γx)` and `Σ q e^{-γx - s}`.
fn shifted_exponentials(
    x: &RandomVariable,
    g: &EntropicParams,
    f: &Partition,
) -> Result<(ConditionalValue, Vec<(f64, f64)>)> {
    f.check_rv(x)?;
    check_finite(x)?;
    let gamma = g.resolve(f)?;
    let mut out = Vec::with_capacity(f.atom_count());
    for a in 0..f.atom_count() {
        let members = f.members(a);
        let shift = members
            .iter()
            .map(|&o| -gamma[a] * x[o])
            .fold(f64::NEG_INFINITY, f64::max);
        if shift.abs() > MAX_EXPONENT {
            return Err(Error::NonFinite(format!(
                "|gamma*x| = {:.3e} exceeds {MAX_EXPONENT} on atom {a}",
                shift.abs()
            )));
        }
        let sum = members
            .iter()
            .map(|&o| f.cond_prob(o) * (-gamma[a] * x[o] - shift).exp())
            .sum::<f64>();
        out.push((shift, sum));
    }
    Ok((gamma, out))
}

/// ρ_γ(x) = (1/γ) ln E[e^{-γx} | F], evaluated with a per-atom max shift.
pub fn entropic(x: &RandomVariable, g: &EntropicParams, f: &Partition) -> Result<ConditionalValue> {
    let (gamma, terms) = shifted_exponentials(x, g, f)?;
    let v: ConditionalValue = terms
        .iter()
        .enumerate()
        .map(|(a, &(shift, sum))| (shift + sum.ln()) / gamma[a])
        .collect::<Vec<_>>()
        .into();
    if !v.is_finite() {
        return Err(Error::NonFinite("entropic value".into()));
    }
    Ok(v)
}

/// z = -e^{-γx} / E[e^{-γx} | F]; a dual element whose pairing with `h`
/// is the directional derivative of ρ_γ.
pub fn entropic_gradient(
    x: &RandomVariable,
    g: &EntropicParams,
    f: &Partition,
) -> Result<RandomVariable> {
    let (gamma, terms) = shifted_exponentials(x, g, f)?;
    Ok(RandomVariable::new(
        (0..f.outcome_count())
            .map(|o| {
                let a = f.atom_of(o);
                let (shift, sum) = terms[a];
                -(-gamma[a] * x[o] - shift).exp() / sum
            })
            .collect(),
    ))
}

/// U_β(x) = -E[x|F] + (β/2)·D[x|F].
pub fn mean_variance(x: &RandomVariable, b: &MmvParams, f: &Partition) -> Result<ConditionalValue> {
    let beta = b.resolve(f)?;
    let mean = f.expect(x)?;
    let var = f.variance(x)?;
    Ok((0..f.atom_count())
        .map(|a| -mean[a] + 0.5 * beta[a] * var[a])
        .collect::<Vec<_>>()
        .into())
}

/// Root of `k ↦ Σ q_i (k - v_i)^+ = target` for conditional weights `q`.
///
/// The map is piecewise linear, convex and nondecreasing with breakpoints at
/// the sorted values and slope equal to the cumulative mass, so the root is
/// found by locating the crossing segment and inverting it.
pub fn truncation_level(values: &[f64], weights: &[f64], target: f64) -> f64 {
    debug_assert_eq!(values.len(), weights.len());
    debug_assert!(target > 0.0);
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut mass = 0.0;
    let mut moment = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        mass += weights[i];
        moment += weights[i] * values[i];
        // φ on [v_i, v_next] is mass·k - moment
        let Some(&next) = order.get(pos + 1) else {
            break;
        };
        if mass * values[next] - moment >= target {
            break;
        }
    }
    (target + moment) / mass
}

/// k_x: the unique F-measurable solution of E[(k - x)^+ | F] = 1/β.
pub fn solve_kx(x: &RandomVariable, b: &MmvParams, f: &Partition) -> Result<ConditionalValue> {
    f.check_rv(x)?;
    check_finite(x)?;
    let beta = b.resolve(f)?;
    Ok((0..f.atom_count())
        .map(|a| {
            let vals: Vec<f64> = f.members(a).iter().map(|&o| x[o]).collect();
            truncation_level(&vals, &f.atom_weights(a), 1.0 / beta[a])
        })
        .collect::<Vec<_>>()
        .into())
}

/// V_β and its gradient representer on a single atom, given the atom's
/// values and conditional weights.
pub fn mmv_on_atom(values: &[f64], weights: &[f64], beta: f64) -> (f64, Vec<f64>) {
    let k = truncation_level(values, weights, 1.0 / beta);
    let truncated: Vec<f64> = values.iter().map(|&v| v.min(k)).collect();
    let mean: f64 = truncated.iter().zip(weights).map(|(v, q)| q * v).sum();
    let var: f64 = truncated
        .iter()
        .zip(weights)
        .map(|(v, q)| q * (v - mean) * (v - mean))
        .sum();
    let grad = values.iter().map(|&v| -beta * (k - v).max(0.0)).collect();
    (-mean + 0.5 * beta * var, grad)
}

/// ρ_γ and its gradient representer on a single atom.
pub fn entropic_on_atom(values: &[f64], weights: &[f64], gamma: f64) -> Result<(f64, Vec<f64>)> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("x = {v}")));
    }
    let shift = values
        .iter()
        .map(|&v| -gamma * v)
        .fold(f64::NEG_INFINITY, f64::max);
    if shift.abs() > MAX_EXPONENT {
        return Err(Error::NonFinite(format!(
            "|gamma*x| = {:.3e} exceeds {MAX_EXPONENT}",
            shift.abs()
        )));
    }
    let terms: Vec<f64> = values.iter().map(|&v| (-gamma * v - shift).exp()).collect();
    let sum: f64 = terms.iter().zip(weights).map(|(t, q)| q * t).sum();
    let grad = terms.iter().map(|t| -t / sum).collect();
    Ok(((shift + sum.ln()) / gamma, grad))
}

/// U_β on a single atom.
pub fn mean_variance_on_atom(values: &[f64], weights: &[f64], beta: f64) -> f64 {
    let mean: f64 = values.iter().zip(weights).map(|(v, q)| q * v).sum();
    let var: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, q)| q * (v - mean) * (v - mean))
        .sum();
    -mean + 0.5 * beta * var
}

/// V_β(x) = U_β(x ∧ k_x).
pub fn mmv(x: &RandomVariable, b: &MmvParams, f: &Partition) -> Result<ConditionalValue> {
    let k = solve_kx(x, b, f)?;
    let truncated = x.min(&f.lift(&k)?)?;
    mean_variance(&truncated, b, f)
}

/// V'_β(x) = -β (k_x - x)^+.
pub fn mmv_gradient(x: &RandomVariable, b: &MmvParams, f: &Partition) -> Result<RandomVariable> {
    let k = f.lift(&solve_kx(x, b, f)?)?;
    let beta = f.lift(&b.resolve(f)?)?;
    Ok(k.sub(x)?.positive_part().mul(&beta)?.scale(-1.0))
}

/// U*_β(y) = (1/2β)·E[(1 + y)² | F] for y with E[y|F] = -1.
pub fn u_conjugate(y: &RandomVariable, b: &MmvParams, f: &Partition) -> Result<ConditionalValue> {
    f.check_rv(y)?;
    check_in_d(y, f)?;
    let beta = b.resolve(f)?;
    let shifted = y.map(|v| 1.0 + v);
    let sq = f.inner(&shifted, &shifted)?;
    Ok((0..f.atom_count())
        .map(|a| sq[a] / (2.0 * beta[a]))
        .collect::<Vec<_>>()
        .into())
}

/// V_β(x) - (E[xy|F] - U*_β(y)); nonnegative for every dual element and zero
/// at y = V'_β(x).
pub fn fenchel_gap(
    x: &RandomVariable,
    y: &DualElement,
    b: &MmvParams,
    f: &Partition,
) -> Result<ConditionalValue> {
    let v = mmv(x, b, f)?;
    let pairing = f.inner(x, y.y())?;
    let conj = u_conjugate(y.y(), b, f)?;
    Ok((0..f.atom_count())
        .map(|a| v[a] - (pairing[a] - conj[a]))
        .collect::<Vec<_>>()
        .into())
}

/// Per atom, whether x - E[x|F] ≤ 1/β (the domain where V_β and U_β agree).
pub fn in_monotonicity_domain(
    x: &RandomVariable,
    b: &MmvParams,
    f: &Partition,
) -> Result<Vec<bool>> {
    let beta = b.resolve(f)?;
    let mean = f.expect(x)?;
    Ok((0..f.atom_count())
        .map(|a| {
            let spread = f
                .members(a)
                .iter()
                .map(|&o| x[o] - mean[a])
                .fold(f64::NEG_INFINITY, f64::max);
            spread <= 1.0 / beta[a] + 1e-12
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::FiniteSpace;

    fn half_half() -> Partition {
        Partition::trivial(FiniteSpace::uniform(2).unwrap())
    }

    fn beta(v: f64) -> MmvParams {
        MmvParams::scalar(v).unwrap()
    }

    fn gamma(v: f64) -> EntropicParams {
        EntropicParams::scalar(v).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn params_reject_nonpositive() {
        assert!(MmvParams::scalar(0.0).is_err());
        assert!(EntropicParams::new(vec![1.0, -1.0].into()).is_err());
        let f = Partition::new(FiniteSpace::uniform(4).unwrap(), vec![0, 0, 1, 1]).unwrap();
        assert!(MmvParams::new(vec![1.0, 2.0, 3.0].into())
            .unwrap()
            .resolve(&f)
            .is_err());
    }

    #[test]
    fn entropic_examples() {
        let f = half_half();
        let c = entropic(&RandomVariable::constant(2.5, 2), &gamma(3.0), &f).unwrap();
        assert!(close(c[0], -2.5, 1e-14));
        let v = entropic(&vec![0.0, 1.0].into(), &gamma(1.0), &f).unwrap();
        let expected = ((1.0 + (-1.0f64).exp()) / 2.0).ln();
        assert!(close(v[0], expected, 1e-15));
        assert!(close(v[0], -0.37989, 1e-5));
    }

    #[test]
    fn entropic_rejects_nonfinite_and_huge() {
        let f = half_half();
        assert!(entropic(&vec![f64::NAN, 1.0].into(), &gamma(1.0), &f).is_err());
        assert!(entropic(&vec![-800.0, 1.0].into(), &gamma(1.0), &f).is_err());
        // far tail underflow is harmless once shifted
        let v = entropic(&vec![0.0, 650.0].into(), &gamma(1.0), &f).unwrap();
        assert!(close(v[0], 0.5f64.ln(), 1e-12));
    }

    #[test]
    fn entropic_gradient_examples() {
        let f = half_half();
        let z = entropic_gradient(&RandomVariable::constant(4.0, 2), &gamma(2.0), &f).unwrap();
        assert!(z.iter().all(|&v| close(v, -1.0, 1e-15)));
        let z = entropic_gradient(&vec![0.0, 1.0].into(), &gamma(1.0), &f).unwrap();
        let e = (-1.0f64).exp();
        assert!(close(z[0], -2.0 / (1.0 + e), 1e-14));
        assert!(close(z[1], -2.0 * e / (1.0 + e), 1e-14));
        DualElement::new(z, &f).unwrap();
    }

    #[test]
    fn mean_variance_examples() {
        let f = half_half();
        let v = mean_variance(&vec![0.0, 1.0].into(), &beta(1.0), &f).unwrap();
        assert!(close(v[0], -0.375, 1e-15));
        let c = mean_variance(&RandomVariable::constant(1.5, 2), &beta(4.0), &f).unwrap();
        assert!(close(c[0], -1.5, 1e-15));
        let shifted = mean_variance(&vec![3.0, 4.0].into(), &beta(1.0), &f).unwrap();
        assert!(close(shifted[0], v[0] - 3.0, 1e-14));
    }

    #[test]
    fn kx_examples() {
        let f = half_half();
        let k = solve_kx(&RandomVariable::constant(2.0, 2), &beta(4.0), &f).unwrap();
        assert!(close(k[0], 2.25, 1e-15));
        let k = solve_kx(&vec![0.0, 1.0].into(), &beta(1.0), &f).unwrap();
        assert!(close(k[0], 1.5, 1e-15));
        assert!(MmvParams::scalar(-1.0).is_err());
    }

    #[test]
    fn kx_handles_ties_and_first_segment() {
        // all mass tied at the bottom: k - 1 = 1/β
        let k = truncation_level(&[1.0, 1.0, 1.0], &[0.2, 0.3, 0.5], 0.5);
        assert!(close(k, 1.5, 1e-15));
        // crossing inside the first segment: 0.5 (k - 0) = 0.1
        let k = truncation_level(&[0.0, 10.0], &[0.5, 0.5], 0.1);
        assert!(close(k, 0.2, 1e-15));
        // crossing exactly at a breakpoint
        let k = truncation_level(&[0.0, 2.0], &[0.5, 0.5], 1.0);
        assert!(close(k, 2.0, 1e-15));
    }

    #[test]
    fn mmv_examples() {
        let f = half_half();
        let v = mmv(&vec![0.0, 1.0].into(), &beta(1.0), &f).unwrap();
        assert!(close(v[0], -0.375, 1e-15));
        let c = mmv(&RandomVariable::constant(-0.7, 2), &beta(3.0), &f).unwrap();
        assert!(close(c[0], 0.7, 1e-15));
    }

    #[test]
    fn mmv_gradient_examples() {
        let f = half_half();
        let g = mmv_gradient(&RandomVariable::constant(5.0, 2), &beta(2.0), &f).unwrap();
        assert!(g.iter().all(|&v| close(v, -1.0, 1e-14)));
        // x in G_β: gradient agrees with U'_β(x) = β(x - E[x|F]) - 1
        let x = RandomVariable::from(vec![0.0, 1.0]);
        let g = mmv_gradient(&x, &beta(1.0), &f).unwrap();
        assert!(close(g[0], 1.0 * (0.0 - 0.5) - 1.0, 1e-14));
        assert!(close(g[1], 1.0 * (1.0 - 0.5) - 1.0, 1e-14));
    }

    #[test]
    fn u_conjugate_examples() {
        let f = half_half();
        let z = u_conjugate(&RandomVariable::constant(-1.0, 2), &beta(1.0), &f).unwrap();
        assert_eq!(z[0], 0.0);
        let z = u_conjugate(&vec![-2.0, 0.0].into(), &beta(1.0), &f).unwrap();
        assert!(close(z[0], 0.5, 1e-15));
        assert!(u_conjugate(&vec![-1.0, 0.0].into(), &beta(1.0), &f).is_err());
    }

    #[test]
    fn u_conjugate_at_gradient() {
        let f = Partition::new(FiniteSpace::uniform(5).unwrap(), vec![0, 0, 1, 1, 1]).unwrap();
        let x = RandomVariable::from(vec![0.3, -2.0, 4.0, 1.0, 0.0]);
        let b = MmvParams::new(vec![0.5, 3.0].into()).unwrap();
        let y = mmv_gradient(&x, &b, &f).unwrap();
        let lhs = u_conjugate(&y, &b, &f).unwrap();
        let k = f.lift(&solve_kx(&x, &b, &f).unwrap()).unwrap();
        let t = k.sub(&x).unwrap().positive_part();
        let sq = f.inner(&t, &t).unwrap();
        // (1/2β)E[(1 - βt)²] with E[t] = 1/β collapses to (β/2)E[t²] - 1/(2β)
        for (a, bb) in [0.5, 3.0].iter().enumerate() {
            assert!(close(lhs[a], bb / 2.0 * sq[a] - 0.5 / bb, 1e-12));
        }
    }

    #[test]
    fn fenchel_gap_examples() {
        let f = Partition::new(FiniteSpace::uniform(4).unwrap(), vec![0, 0, 1, 1]).unwrap();
        let x = RandomVariable::from(vec![0.0, 5.0, -1.0, 2.0]);
        let b = beta(1.5);
        let grad = DualElement::new(mmv_gradient(&x, &b, &f).unwrap(), &f).unwrap();
        let gap = fenchel_gap(&x, &grad, &b, &f).unwrap();
        assert!(gap.iter().all(|g| g.abs() < 1e-12));
        let minus_one = DualElement::new(RandomVariable::constant(-1.0, 4), &f).unwrap();
        let gap = fenchel_gap(&x, &minus_one, &b, &f).unwrap();
        let v = mmv(&x, &b, &f).unwrap();
        let e = f.expect(&x).unwrap();
        for a in 0..2 {
            assert!(close(gap[a], v[a] + e[a], 1e-14));
            assert!(gap[a] >= 0.0);
        }
    }

    #[test]
    fn dual_element_validation() {
        let f = half_half();
        assert!(DualElement::new(vec![-2.0, 0.5].into(), &f).is_err());
        assert!(DualElement::new(vec![-1.0, 0.0].into(), &f).is_err());
        let y = DualElement::from_weights(&vec![1.0, 3.0].into(), &f).unwrap();
        assert!(close(y.y()[0], -0.5, 1e-15) && close(y.y()[1], -1.5, 1e-15));
    }

    #[test]
    fn monotonicity_domain_examples() {
        let f = half_half();
        let b = beta(1.0);
        assert!(in_monotonicity_domain(&RandomVariable::constant(9.0, 2), &b, &f).unwrap()[0]);
        assert!(in_monotonicity_domain(&vec![0.0, 1.0].into(), &b, &f).unwrap()[0]);
        assert!(!in_monotonicity_domain(&vec![0.0, 10.0].into(), &b, &f).unwrap()[0]);
    }
}
