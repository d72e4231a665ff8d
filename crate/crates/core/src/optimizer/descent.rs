//! Projected gradient descent with Barzilai–Borwein trial steps and Armijo
//! backtracking along the projection arc.

use nalgebra::DVector;

use crate::error::{Error, Result};

pub(crate) const ARMIJO_SHRINK: f64 = 0.5;
pub(crate) const ARMIJO_SLOPE: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const MIN_STEP: f64 = 1e-12;
const MAX_STEP: f64 = 1e12;

#[derive(Debug, Clone)]
pub(crate) struct DescentOutcome {
    pub t: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// ‖t - P(t - ∇f(t))‖ at the returned point.
    pub stationarity: f64,
    /// Objective after every accepted step, starting with the initial point.
    pub history: Vec<f64>,
}

/// Minimizes `objective` over the closed convex set whose Euclidean
/// projection is `project`, starting from `project(start)`.
pub(crate) fn projected_gradient(
    start: DVector<f64>,
    mut objective: impl FnMut(&DVector<f64>) -> Result<(f64, DVector<f64>)>,
    project: impl Fn(&DVector<f64>) -> DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DescentOutcome> {
    let mut t = project(&start);
    let (mut value, mut grad) = objective(&t)?;
    let mut history = vec![value];
    let mut step = 1.0;
    let mut iterations = 0;
    let stationarity = |t: &DVector<f64>, g: &DVector<f64>| (t - project(&(t - g))).norm();
    let mut station = stationarity(&t, &grad);

    while station > tol && iterations < max_iter {
        iterations += 1;
        let slack = 4.0 * f64::EPSILON * (1.0 + value.abs());
        let mut trial = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand = project(&(&t - &grad * trial));
            // an overflowing trial point is treated like an insufficient decrease
            let (cv, cg) = match objective(&cand) {
                Ok(v) => v,
                Err(Error::NonFinite(_)) => {
                    trial *= ARMIJO_SHRINK;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let decrease = grad.dot(&(&cand - &t));
            if cv <= value + ARMIJO_SLOPE * decrease + slack {
                accepted = Some((cand, cv, cg));
                break;
            }
            trial *= ARMIJO_SHRINK;
        }
        let Some((cand, cv, cg)) = accepted else {
            break;
        };
        let s = &cand - &t;
        let y = &cg - &grad;
        let sy = s.dot(&y);
        step = if sy > 0.0 {
            (s.norm_squared() / sy).clamp(MIN_STEP, MAX_STEP)
        } else {
            (trial * 2.0).min(MAX_STEP)
        };
        t = cand;
        value = cv;
        grad = cg;
        history.push(value);
        station = stationarity(&t, &grad);
    }

    Ok(DescentOutcome {
        converged: station <= tol,
        t,
        value,
        gradient: grad,
        iterations,
        stationarity: station,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ill_conditioned_quadratic() {
        let h = [1.0, 50.0, 1e3];
        let target = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let out = projected_gradient(
            DVector::zeros(3),
            |t| {
                let d = t - &target;
                let g = DVector::from_iterator(3, d.iter().zip(h).map(|(a, b)| a * b));
                Ok((0.5 * d.dot(&g), g))
            },
            |t| t.clone(),
            1e-12,
            10_000,
        )
        .unwrap();
        assert!(out.converged);
        assert!((out.t - target).norm() < 1e-10);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0] + 1e-14));
    }

    #[test]
    fn box_constrained_linear() {
        // minimize t0 + t1 on [−1, 1]²
        let out = projected_gradient(
            DVector::zeros(2),
            |t| Ok((t.sum(), DVector::from_element(2, 1.0))),
            |t| t.map(|v| v.clamp(-1.0, 1.0)),
            1e-12,
            100,
        )
        .unwrap();
        assert!(out.converged);
        assert_eq!(out.t.as_slice(), &[-1.0, -1.0]);
    }
}
