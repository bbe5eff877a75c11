//! Non-negative least squares in Gram form (Lawson-Hanson active set).
//!
//! Minimizes `s^T G s - 2 b^T s` subject to `s >= 0`, with `G` symmetric
//! positive semidefinite. This is `|| y - A s ||^2` up to a constant when
//! `G = A^T A` and `b = A^T y`.

use nalgebra::{DMatrix, DVector};

use super::svd::pinv;
use crate::error::Result;

const PINV_TOL: f64 = 1e-12;

/// Least-squares solution restricted to the `passive` coordinates.
fn solve_passive(g: &DMatrix<f64>, b: &DVector<f64>, passive: &[usize]) -> Result<DVector<f64>> {
    let k = passive.len();
    let sub = DMatrix::from_fn(k, k, |i, j| g[(passive[i], passive[j])]);
    let rhs = DVector::from_fn(k, |i, _| b[passive[i]]);
    let z = match sub.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => pinv(&sub, PINV_TOL)? * rhs,
    };
    let mut full = DVector::zeros(b.len());
    for (i, &p) in passive.iter().enumerate() {
        full[p] = z[i];
    }
    Ok(full)
}

pub fn nnls_gram(g: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = b.len();
    let scale = g.diagonal().amax().max(b.amax()).max(f64::MIN_POSITIVE);
    let tol = 1e-13 * scale * n.max(1) as f64;
    let all: Vec<usize> = (0..n).collect();
    let unconstrained = solve_passive(g, b, &all)?;
    if unconstrained.iter().all(|&v| v >= 0.0) {
        return Ok(unconstrained);
    }

    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];

    for _outer in 0..3 * n + 10 {
        // negative gradient of the half-objective
        let w = b - g * &x;
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;

        for _inner in 0..3 * n + 10 {
            let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let z = solve_passive(g, b, &idx)?;
            if idx.iter().all(|&i| z[i] > 0.0) {
                x = z;
                break;
            }
            // step toward z until the first passive coordinate hits zero
            let (blocking, alpha) = idx
                .iter()
                .filter(|&&i| z[i] <= 0.0)
                .map(|&i| (i, x[i] / (x[i] - z[i])))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("some passive coordinate is non-positive");
            x += (z - &x) * alpha;
            x[blocking] = 0.0;
            for &i in &idx {
                if x[i] <= 0.0 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(x)
}
