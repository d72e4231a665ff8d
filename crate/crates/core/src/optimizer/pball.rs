//! The conditional p-norm ball restricted to an affine slice of M on one atom.
//!
//! Points are parametrized as `x(t) = x₀ + B t` with `B` conditionally
//! orthonormal and `x₀ ⊥ range B`. For p = 2 the ball is a Euclidean ball in
//! `t` and projection is a rescaling. For other p the Euclidean projection of
//! `t₀` solves `min ½‖t - t₀‖² + λ (g(t) - r^p)` with `g(t) = E[|x(t)|^p | A]`;
//! φ(λ) = g(t(λ)) - r^p is decreasing in the multiplier, whose root is
//! bracketed and found by bisection with Newton steps. Each inner problem is
//! strictly convex and solved by damped Newton.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const BISECTION_TOL: f64 = 1e-12;
const MAX_MULTIPLIER: f64 = 1e30;
/// Floor on |x| inside the Hessian weight |x|^{p-2} when p < 2.
const HESSIAN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct AtomBall {
    origin: DVector<f64>,
    dirs: DMatrix<f64>,
    weights: Vec<f64>,
    p: f64,
    radius: f64,
}

impl AtomBall {
    pub fn new(origin: DVector<f64>, dirs: DMatrix<f64>, weights: Vec<f64>, p: f64, radius: f64) -> Self {
        Self {
            origin,
            dirs,
            weights,
            p,
            radius,
        }
    }

    pub fn dim(&self) -> usize {
        self.dirs.ncols()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn point(&self, t: &DVector<f64>) -> DVector<f64> {
        &self.origin + &self.dirs * t
    }

    /// E[|x(t)|^p | A].
    pub fn moment(&self, t: &DVector<f64>) -> f64 {
        self.point(t)
            .iter()
            .zip(&self.weights)
            .map(|(v, q)| q * v.abs().powf(self.p))
            .sum()
    }

    pub fn norm(&self, t: &DVector<f64>) -> f64 {
        self.moment(t).powf(1.0 / self.p)
    }

    fn is_euclidean(&self) -> bool {
        self.p == 2.0
    }

    fn moment_derivatives(&self, t: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let x = self.point(t);
        let p = self.p;
        let n = x.len();
        let mut value = 0.0;
        let mut first = DVector::zeros(n);
        let mut second = DVector::zeros(n);
        for i in 0..n {
            let a = x[i].abs();
            let q = self.weights[i];
            value += q * a.powf(p);
            first[i] = q * p * x[i].signum() * a.powf(p - 1.0);
            second[i] = q * p * (p - 1.0) * a.max(HESSIAN_FLOOR).powf(p - 2.0);
        }
        let grad = self.dirs.tr_mul(&first);
        let scaled = DMatrix::from_fn(n, self.dim(), |i, j| second[i] * self.dirs[(i, j)]);
        let hess = self.dirs.tr_mul(&scaled);
        (value, grad, hess)
    }

    /// Gradient of `t ↦ ‖x(t)‖_p` (zero at the origin of the norm).
    pub fn norm_gradient(&self, t: &DVector<f64>) -> DVector<f64> {
        let (moment, grad, _) = self.moment_derivatives(t);
        if moment == 0.0 {
            return DVector::zeros(self.dim());
        }
        grad / (self.p * moment.powf((self.p - 1.0) / self.p))
    }

    /// Smallest norm over the slice and a minimizing parameter.
    pub fn min_norm(&self) -> (DVector<f64>, f64) {
        let m = self.dim();
        if self.is_euclidean() || m == 0 {
            let t = DVector::zeros(m);
            let n = self.norm(&t);
            return (t, n);
        }
        let t = damped_newton(DVector::zeros(m), |t| self.moment_derivatives(t));
        let n = self.norm(&t);
        (t, n)
    }

    /// Euclidean projection of `t0` onto `{t : ‖x(t)‖_p ≤ r}`.
    pub fn project(&self, t0: &DVector<f64>) -> Result<DVector<f64>> {
        if self.moment(t0) <= self.radius.powf(self.p) {
            return Ok(t0.clone());
        }
        if self.is_euclidean() {
            let base = self.origin.iter().zip(&self.weights).map(|(v, q)| q * v * v).sum::<f64>();
            let room = self.radius * self.radius - base;
            if room < 0.0 {
                return Err(Error::Infeasible { atoms: vec![] });
            }
            return Ok(t0 * (room.sqrt() / t0.norm()));
        }
        let target = self.radius.powf(self.p);
        let m = self.dim();
        // inner minimizer t(λ) and φ(λ) = g(t(λ)) - r^p with its derivative
        let eval = |lambda: f64, warm: DVector<f64>| {
            let t = damped_newton(warm, |t| {
                let (g, dg, hg) = self.moment_derivatives(t);
                let d = t - t0;
                (
                    0.5 * d.norm_squared() + lambda * g,
                    d + dg * lambda,
                    DMatrix::identity(m, m) + hg * lambda,
                )
            });
            let (g, dg, hg) = self.moment_derivatives(&t);
            let h = DMatrix::identity(m, m) + hg * lambda;
            let dt = h.cholesky().map(|c| c.solve(&dg)).unwrap_or_else(|| dg.clone());
            (t, g - target, -dg.dot(&dt))
        };
        // safeguarded Newton on the multiplier inside a bisection bracket
        let mut lo = 0.0;
        let mut hi: Option<(f64, DVector<f64>)> = None;
        let (mut t, mut phi, mut dphi) = eval(0.0, t0.clone());
        let mut lambda = 0.0;
        for _ in 0..500 {
            let newton = lambda - phi / dphi;
            let next = match &hi {
                None if newton.is_finite() && newton > lambda => newton,
                None => 2.0 * lambda.max(1.0),
                Some((h, _)) if newton > lo && newton < *h => newton,
                Some((h, _)) => 0.5 * (lo + h),
            };
            if next > MAX_MULTIPLIER {
                return Err(Error::Infeasible { atoms: vec![] });
            }
            if (next - lambda).abs() <= f64::EPSILON * lambda {
                break;
            }
            lambda = next;
            (t, phi, dphi) = eval(lambda, t);
            if phi.abs() <= 2.0 * f64::EPSILON * target {
                return Ok(t);
            }
            if phi > 0.0 {
                lo = lambda;
            } else {
                hi = Some((lambda, t.clone()));
            }
            if let Some((h, th)) = &hi {
                if h - lo <= BISECTION_TOL * h.max(1.0) {
                    return Ok(th.clone());
                }
            }
        }
        Ok(t)
    }
}

/// Minimizes a smooth strictly convex function given value, gradient and
/// Hessian, with Armijo backtracking on the Newton direction.
fn damped_newton(
    mut t: DVector<f64>,
    eval: impl Fn(&DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>),
) -> DVector<f64> {
    for _ in 0..100 {
        let (value, grad, hess) = eval(&t);
        if grad.amax() == 0.0 {
            break;
        }
        let dir = match hess.clone().cholesky() {
            Some(ch) => -ch.solve(&grad),
            None => -grad.clone(),
        };
        let slope = grad.dot(&dir);
        let dir = if slope < 0.0 { dir } else { -grad.clone() };
        let slope = grad.dot(&dir);
        // Newton step below rounding level: done
        if dir.amax() <= 1e-15 * (1.0 + t.amax()) {
            t += dir;
            break;
        }
        let mut step = 1.0;
        let mut moved = false;
        while step > 1e-10 {
            let cand = &t + &dir * step;
            let (cv, _, _) = eval(&cand);
            if cv <= value + 1e-4 * step * slope + 4.0 * f64::EPSILON * value.abs() {
                moved = cand != t;
                t = cand;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    t
}
