//! PARAFAC2 fusion of several embedding views that share the node mode.
//!
//! Each view `X_m` (N x D_m) is modeled as `X_m ~ V S_m U_m^T` with
//! `U_m = Q_m H`, `Q_m` column-orthonormal (D_m x R), `S_m` a non-negative
//! diagonal and `V` (N x R) the node factor shared by every view. Views
//! are used in node-by-feature orientation, so `V` is the fused embedding.

mod als;
mod io;
mod nnls;
mod svd;
pub mod synth;

use nalgebra::{DMatrix, DVector};

pub use als::{cp_inner_update, parafac2_fit, procrustes_update, Parafac2Fit};
pub use io::{read_model, write_model};
pub use nnls::nnls_gram;
pub use svd::{economy_svd, pinv, EconomySvd};

use crate::error::{Error, Result};

/// Views over a common node set; all have the same row count.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewSet {
    views: Vec<DMatrix<f64>>,
}

impl ViewSet {
    pub fn new(views: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = views
            .first()
            .ok_or_else(|| Error::InvalidParam("view set needs at least one view".into()))?;
        let n = first.nrows();
        if n == 0 {
            return Err(Error::InvalidParam("views have no rows".into()));
        }
        for (m, x) in views.iter().enumerate() {
            if x.nrows() != n {
                return Err(Error::DimensionMismatch(format!(
                    "view {m} has {} rows, expected {n}",
                    x.nrows()
                )));
            }
            if x.ncols() == 0 {
                return Err(Error::InvalidParam(format!("view {m} has no columns")));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("view set"));
            }
        }
        Ok(ViewSet { views })
    }

    pub fn views(&self) -> &[DMatrix<f64>] {
        &self.views
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.views[0].nrows()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(DMatrix::ncols).collect()
    }

    pub fn total_sq_norm(&self) -> f64 {
        self.views.iter().map(DMatrix::norm_squared).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parafac2Model {
    pub rank: usize,
    /// `Q_m`, D_m x R with orthonormal columns.
    pub q: Vec<DMatrix<f64>>,
    /// R x R.
    pub h: DMatrix<f64>,
    /// Diagonal of each `S_m`, length R, non-negative.
    pub s: Vec<DVector<f64>>,
    /// N x R shared node factor.
    pub v: DMatrix<f64>,
}

impl Parafac2Model {
    pub fn num_views(&self) -> usize {
        self.q.len()
    }

    /// `U_m = Q_m H`.
    pub fn u(&self, m: usize) -> DMatrix<f64> {
        &self.q[m] * &self.h
    }

    /// `V S_m H^T Q_m^T`, the model's estimate of view `m`.
    pub fn reconstruct(&self, m: usize) -> DMatrix<f64> {
        weighted_node_factor(&self.v, &self.s[m], &self.h) * self.q[m].transpose()
    }

    /// `max_m || Q_m^T Q_m - I ||_F`.
    pub fn orthonormality_residual(&self) -> f64 {
        let eye = DMatrix::<f64>::identity(self.rank, self.rank);
        self.q
            .iter()
            .map(|q| (q.transpose() * q - &eye).norm())
            .fold(0.0, f64::max)
    }

    /// `max_m || U_m^T U_m - H^T H ||_F`.
    pub fn cross_product_residual(&self) -> f64 {
        let hth = self.h.transpose() * &self.h;
        (0..self.num_views())
            .map(|m| {
                let u = self.u(m);
                (u.transpose() * &u - &hth).norm()
            })
            .fold(0.0, f64::max)
    }

    fn check_against(&self, data: &ViewSet) -> Result<()> {
        let r = self.rank;
        let ok = self.q.len() == data.len()
            && self.s.len() == data.len()
            && self.h.shape() == (r, r)
            && self.v.shape() == (data.num_nodes(), r)
            && self.s.iter().all(|s| s.len() == r)
            && self
                .q
                .iter()
                .zip(data.views())
                .all(|(q, x)| q.shape() == (x.ncols(), r));
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "rank-{r} model with {} views does not fit data with {} views of {} rows",
                self.q.len(),
                data.len(),
                data.num_nodes()
            )))
        }
    }
}

/// `V diag(s) H^T`, the N x R matrix every view's fit is projected from.
pub(crate) fn weighted_node_factor(v: &DMatrix<f64>, s: &DVector<f64>, h: &DMatrix<f64>) -> DMatrix<f64> {
    let mut vs = v.clone();
    for (j, w) in s.iter().enumerate() {
        vs.column_mut(j).scale_mut(*w);
    }
    vs * h.transpose()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_sweeps: usize,
    /// Stop once the objective improves by less than this fraction per sweep.
    pub rel_tol: f64,
    /// Only used to fill initial node-factor directions the data does not span.
    pub seed: u64,
    /// Try an extrapolated step after each sweep, kept only if it lowers the
    /// objective. Plain ALS when off.
    pub extrapolate: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_sweeps: 500,
            rel_tol: 1e-8,
            seed: 0,
            extrapolate: true,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParam(
                "max_sweeps must be >= 1 and rel_tol > 0".into(),
            ));
        }
        Ok(())
    }
}

/// `sum_m || X_m - V S_m H^T Q_m^T ||_F^2`.
pub fn objective(model: &Parafac2Model, data: &ViewSet) -> Result<f64> {
    model.check_against(data)?;
    Ok(data
        .views()
        .iter()
        .enumerate()
        .map(|(m, x)| (x - model.reconstruct(m)).norm_squared())
        .sum())
}

/// `V` with each column scaled to unit length; zero columns stay zero.
pub fn extract_embedding(model: &Parafac2Model) -> DMatrix<f64> {
    let mut v = model.v.clone();
    for mut col in v.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    v
}
