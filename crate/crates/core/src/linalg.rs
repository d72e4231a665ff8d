//! Singular value decomposition by one-sided Jacobi rotations.
//!
//! Used instead of `nalgebra::SVD`, which returns inaccurate factors for
//! rank-deficient inputs (e.g. projectors, colinear columns). Jacobi is slow
//! for large matrices but the matrices here are small and it attains
//! high relative accuracy.

use nalgebra::DMatrix;

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone)]
pub struct Svd {
    /// m × n; columns belonging to zero singular values are zero.
    pub u: DMatrix<f64>,
    /// Descending, length n.
    pub singular_values: Vec<f64>,
    /// n × n orthogonal.
    pub v: DMatrix<f64>,
}

impl Svd {
    /// Number of singular values above `rel_tol · σ_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values
            .iter()
            .take_while(|&&s| smax > 0.0 && s > rel_tol * smax)
            .count()
    }
}

/// Factors `a = u · diag(σ) · vᵀ`.
pub fn svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    let rows = m.max(n);
    let mut w = DMatrix::zeros(rows, n);
    w.view_mut((0, 0), (m, n)).copy_from(a);
    let mut v = DMatrix::<f64>::identity(n, n);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dot(&w.column(j));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|k| w.column(k).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let u = DMatrix::from_fn(m, n, |r, k| {
        let s = norms[order[k]];
        if s > 0.0 {
            w[(r, order[k])] / s
        } else {
            0.0
        }
    });
    let v = DMatrix::from_fn(n, n, |r, k| v[(r, order[k])]);
    Svd {
        u,
        singular_values: order.iter().map(|&k| norms[k]).collect(),
        v,
    }
}

fn rotate(m: &mut DMatrix<f64>, i: usize, j: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let a = m[(r, i)];
        let b = m[(r, j)];
        m[(r, i)] = c * a - s * b;
        m[(r, j)] = s * a + c * b;
    }
}
