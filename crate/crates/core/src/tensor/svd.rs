//! Dense SVD helpers on top of nalgebra's bidiagonal SVD.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Thin SVD `A = P diag(sigma) Z^T`.
#[derive(Debug, Clone)]
pub struct EconomySvd {
    /// p x r, orthonormal columns.
    pub left: DMatrix<f64>,
    /// Length r, non-negative, non-increasing.
    pub sigma: DVector<f64>,
    /// q x r, orthonormal columns.
    pub right: DMatrix<f64>,
}

impl EconomySvd {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.left.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        scaled * self.right.transpose()
    }
}

/// Economy SVD with `r = min(p, q)` and singular values sorted descending.
pub fn economy_svd(a: &DMatrix<f64>) -> Result<EconomySvd> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("svd input"));
    }
    let (p, q) = a.shape();
    let r = p.min(q);
    if r == 0 {
        return Ok(EconomySvd {
            left: DMatrix::zeros(p, 0),
            sigma: DVector::zeros(0),
            right: DMatrix::zeros(q, 0),
        });
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));

    let mut left = DMatrix::zeros(p, r);
    let mut right = DMatrix::zeros(q, r);
    let mut sigma = DVector::zeros(r);
    for (dst, &src) in order.iter().enumerate() {
        left.set_column(dst, &u.column(src));
        right.set_column(dst, &vt.row(src).transpose());
        sigma[dst] = svd.singular_values[src];
    }
    Ok(EconomySvd { left, sigma, right })
}

/// Moore-Penrose pseudoinverse dropping singular values below
/// `rel_threshold * sigma_max`.
pub fn pinv(a: &DMatrix<f64>, rel_threshold: f64) -> Result<DMatrix<f64>> {
    let svd = economy_svd(a)?;
    let cutoff = svd.sigma.get(0).copied().unwrap_or(0.0) * rel_threshold;
    let mut right = svd.right;
    for (j, &s) in svd.sigma.iter().enumerate() {
        let inv = if s > cutoff && s > 0.0 { 1.0 / s } else { 0.0 };
        right.column_mut(j).scale_mut(inv);
    }
    Ok(right * svd.left.transpose())
}
