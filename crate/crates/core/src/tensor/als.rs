//! Direct-fitting ALS for PARAFAC2.
//!
//! A sweep first solves the orthogonal Procrustes problem for every `Q_m`,
//! then runs one least-squares pass over `V`, `H` and the `S_m` on the
//! projected slices `Y_m = X_m Q_m`. Every block update is an exact
//! minimizer given the others, so the objective never increases.
//!
//! Plain ALS crawls through long flat stretches on this model, so after each
//! sweep two extrapolated points for `V`, `H` and `S` are also scored: an
//! Anderson-mixed iterate and a stretched step `F + a (F - F_prev)`. The best
//! one (with freshly fitted `Q_m`) replaces the sweep result only when its
//! objective is lower, so the trace stays monotone.
//!
//! Views wider than the node count are compressed first: with the thin SVD
//! `X_m = P_m Sigma_m B_m^T`, fitting `P_m Sigma_m` (N x N) and lifting
//! `Q_m = B_m Q~_m` gives the same objective at a fraction of the cost.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::nnls::nnls_gram;
use super::svd::{economy_svd, pinv};
use super::{weighted_node_factor, FitOptions, Parafac2Model, ViewSet};
use crate::error::{Error, Result};
use crate::seed::rng_for;

/// Singular values below this fraction of the largest are treated as zero.
const PINV_TOL: f64 = 1e-12;

// Extrapolation schedule: grow the step while it keeps paying off.
const ACCEL_WARMUP: usize = 2;
const ACCEL_START: f64 = 1.0;
const ACCEL_GROW: f64 = 1.5;
const ACCEL_SHRINK: f64 = 0.5;
const ACCEL_MAX: f64 = 50.0;
const ANDERSON_DEPTH: usize = 8;

/// Optimal column-orthonormal `Q_m` for fixed `V`, `S_m`, `H`: with
/// `X_m^T V S_m H^T = P Sigma Z^T`, the minimizer is `P Z^T`.
pub fn procrustes_update(
    view: usize,
    x: &DMatrix<f64>,
    v: &DMatrix<f64>,
    s: &DVector<f64>,
    h: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let r = h.nrows();
    if x.ncols() < r {
        return Err(Error::RankTooLarge {
            view,
            dim: x.ncols(),
            rank: r,
        });
    }
    if h.ncols() != r || s.len() != r || v.shape() != (x.nrows(), r) {
        return Err(Error::DimensionMismatch(format!(
            "procrustes: X {:?}, V {:?}, S {}, H {:?}",
            x.shape(),
            v.shape(),
            s.len(),
            h.shape()
        )));
    }
    let cross = x.transpose() * weighted_node_factor(v, s, h);
    let svd = economy_svd(&cross)?;
    Ok(svd.left * svd.right.transpose())
}

/// One least-squares pass over `V`, `H`, then every `S_m`, fitting
/// `Y_m ~ V S_m H^T`. Rank-deficient normal equations go through a
/// thresholded pseudoinverse; the `S_m` are solved under `s >= 0`.
pub fn cp_inner_update(
    y: &[DMatrix<f64>],
    v: &mut DMatrix<f64>,
    h: &mut DMatrix<f64>,
    s: &mut [DVector<f64>],
) -> Result<()> {
    let r = h.nrows();
    let n = v.nrows();
    if y.len() != s.len()
        || v.ncols() != r
        || h.ncols() != r
        || s.iter().any(|sm| sm.len() != r)
        || y.iter().any(|ym| ym.shape() != (n, r))
    {
        return Err(Error::DimensionMismatch(format!(
            "cp update: {} slices vs {} weights, V {:?}, H {:?}",
            y.len(),
            s.len(),
            v.shape(),
            h.shape()
        )));
    }

    let scale_cols = |m: &DMatrix<f64>, w: &DVector<f64>| {
        let mut out = m.clone();
        for (j, x) in w.iter().enumerate() {
            out.column_mut(j).scale_mut(*x);
        }
        out
    };
    let scale_both = |g: &DMatrix<f64>, w: &DVector<f64>| {
        DMatrix::from_fn(r, r, |i, j| w[i] * g[(i, j)] * w[j])
    };

    // V <- (sum Y_m H S_m)(sum S_m H^T H S_m)^+
    let hth = h.transpose() * &*h;
    let mut num = DMatrix::zeros(n, r);
    let mut den = DMatrix::zeros(r, r);
    for (ym, sm) in y.iter().zip(s.iter()) {
        num += ym * scale_cols(h, sm);
        den += scale_both(&hth, sm);
    }
    *v = num * pinv(&den, PINV_TOL)?;

    // H <- (sum Y_m^T V S_m)(sum S_m V^T V S_m)^+
    let vtv = v.transpose() * &*v;
    let mut num = DMatrix::zeros(r, r);
    let mut den = DMatrix::zeros(r, r);
    for (ym, sm) in y.iter().zip(s.iter()) {
        num += ym.transpose() * scale_cols(v, sm);
        den += scale_both(&vtv, sm);
    }
    *h = num * pinv(&den, PINV_TOL)?;

    // s_m <- argmin_{s >= 0} || Y_m - V diag(s) H^T ||
    let hth = h.transpose() * &*h;
    let gram = vtv.component_mul(&hth);
    for (ym, sm) in y.iter().zip(s.iter_mut()) {
        let proj = v.transpose() * ym * &*h;
        *sm = nnls_gram(&gram, &proj.diagonal())?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Parafac2Fit {
    pub model: Parafac2Model,
    /// Objective after each sweep.
    pub trace: Vec<f64>,
    pub converged: bool,
}

impl Parafac2Fit {
    pub fn final_objective(&self) -> f64 {
        self.trace.last().copied().unwrap_or(f64::NAN)
    }
}

struct Slice {
    x: DMatrix<f64>,
    sq_norm: f64,
    /// Orthonormal column basis of the original row space when compressed.
    basis: Option<DMatrix<f64>>,
}

fn compress(x: &DMatrix<f64>) -> Result<Slice> {
    let (n, d) = x.shape();
    if d <= n {
        return Ok(Slice {
            x: x.clone(),
            sq_norm: x.norm_squared(),
            basis: None,
        });
    }
    let svd = economy_svd(x)?;
    let mut reduced = svd.left;
    for (j, s) in svd.sigma.iter().enumerate() {
        reduced.column_mut(j).scale_mut(*s);
    }
    Ok(Slice {
        sq_norm: reduced.norm_squared(),
        x: reduced,
        basis: Some(svd.right),
    })
}

/// Leading left singular vectors of `[X_1 ... X_M]`; directions the data does
/// not span are filled from the seed and re-orthonormalized.
fn initial_node_factor(slices: &[Slice], n: usize, r: usize, seed: u64) -> Result<DMatrix<f64>> {
    let width: usize = slices.iter().map(|s| s.x.ncols()).sum();
    let mut concat = DMatrix::zeros(n, width);
    let mut col = 0;
    for s in slices {
        concat.columns_mut(col, s.x.ncols()).copy_from(&s.x);
        col += s.x.ncols();
    }
    let svd = economy_svd(&concat)?;
    let top = svd.sigma.get(0).copied().unwrap_or(0.0);
    let mut v = svd.left.columns(0, r).into_owned();
    let weak: Vec<usize> = (0..r)
        .filter(|&j| top == 0.0 || svd.sigma[j] <= PINV_TOL * top)
        .collect();
    if !weak.is_empty() {
        let mut rng = rng_for(seed, "parafac2-init", 0);
        for &j in &weak {
            for i in 0..n {
                v[(i, j)] = StandardNormal.sample(&mut rng);
            }
        }
        v = v.qr().q();
    }
    Ok(v)
}

type Factors = (DMatrix<f64>, DMatrix<f64>, Vec<DVector<f64>>);

/// `F + a (F - F_prev)` for every factor, with the weights kept non-negative.
fn stretched(
    v: &DMatrix<f64>,
    h: &DMatrix<f64>,
    s: &[DVector<f64>],
    prev: (&DMatrix<f64>, &DMatrix<f64>, &[DVector<f64>]),
    a: f64,
) -> Factors {
    let cs = s
        .iter()
        .zip(prev.2)
        .map(|(sm, pm)| (sm + (sm - pm) * a).map(|x| x.max(0.0)))
        .collect();
    (v + (v - prev.0) * a, h + (h - prev.1) * a, cs)
}

/// Anderson mixing on the sweep map `x -> g(x)`.
struct Anderson {
    depth: usize,
    last: Option<(Vec<f64>, Vec<f64>)>,
    dg: Vec<Vec<f64>>,
    df: Vec<Vec<f64>>,
}

impl Anderson {
    fn new(depth: usize) -> Self {
        Anderson { depth, last: None, dg: Vec::new(), df: Vec::new() }
    }

    fn step(&mut self, x: &[f64], g: &[f64]) -> Option<Vec<f64>> {
        let f: Vec<f64> = g.iter().zip(x).map(|(a, b)| a - b).collect();
        if let Some((pg, pf)) = &self.last {
            self.dg.push(g.iter().zip(pg).map(|(a, b)| a - b).collect());
            self.df.push(f.iter().zip(pf).map(|(a, b)| a - b).collect());
            if self.dg.len() > self.depth {
                self.dg.remove(0);
                self.df.remove(0);
            }
        }
        self.last = Some((g.to_vec(), f.clone()));
        let k = self.df.len();
        if k == 0 {
            return None;
        }
        let len = f.len();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let gram = DMatrix::from_fn(k, k, |i, j| dot(&self.df[i], &self.df[j]));
        let rhs = DVector::from_fn(k, |i, _| dot(&self.df[i], &f));
        let gamma = pinv(&gram, PINV_TOL).ok()? * rhs;
        Some((0..len).map(|i| g[i] - (0..k).map(|j| self.dg[j][i] * gamma[j]).sum::<f64>()).collect())
    }
}

/// Flattens the factors after moving each component's scale into the
/// weights, so the mixing does not chase the scale indeterminacy.
fn pack_normalized(v: &DMatrix<f64>, h: &DMatrix<f64>, s: &[DVector<f64>]) -> Vec<f64> {
    let (mut v, mut h, mut s) = (v.clone(), h.clone(), s.to_vec());
    for j in 0..v.ncols() {
        let (a, b) = (v.column(j).norm(), h.column(j).norm());
        if a > 0.0 && b > 0.0 {
            v.column_mut(j).unscale_mut(a);
            h.column_mut(j).unscale_mut(b);
            for sm in s.iter_mut() {
                sm[j] *= a * b;
            }
        }
    }
    let mut out: Vec<f64> = v.iter().chain(h.iter()).copied().collect();
    for sm in &s {
        out.extend(sm.iter());
    }
    out
}

fn unpack(x: &[f64], n: usize, r: usize, m: usize) -> Factors {
    let v = DMatrix::from_column_slice(n, r, &x[..n * r]);
    let h = DMatrix::from_column_slice(r, r, &x[n * r..n * r + r * r]);
    let base = n * r + r * r;
    let s = (0..m)
        .map(|k| DVector::from_column_slice(&x[base + k * r..base + (k + 1) * r]).map(|z| z.max(0.0)))
        .collect();
    (v, h, s)
}

fn fit_all_q(
    slices: &[Slice],
    v: &DMatrix<f64>,
    s: &[DVector<f64>],
    h: &DMatrix<f64>,
) -> Result<Vec<DMatrix<f64>>> {
    slices
        .iter()
        .enumerate()
        .map(|(m, sl)| procrustes_update(m, &sl.x, v, &s[m], h))
        .collect()
}

/// The objective with every `Q_m` at its optimum, from singular values alone:
/// `||X||^2 + ||W||^2 - 2 ||X^T W||_*` with `W = V S_m H^T`.
fn profiled_objective(slices: &[Slice], v: &DMatrix<f64>, s: &[DVector<f64>], h: &DMatrix<f64>) -> f64 {
    slices
        .iter()
        .zip(s)
        .map(|(sl, sm)| {
            let w = weighted_node_factor(v, sm, h);
            let nuclear: f64 = (sl.x.transpose() * &w).singular_values().sum();
            sl.sq_norm + w.norm_squared() - 2.0 * nuclear
        })
        .sum()
}

fn slices_objective(
    slices: &[Slice],
    q: &[DMatrix<f64>],
    v: &DMatrix<f64>,
    s: &[DVector<f64>],
    h: &DMatrix<f64>,
) -> f64 {
    slices
        .iter()
        .zip(q)
        .zip(s)
        .map(|((sl, qm), sm)| (&sl.x - weighted_node_factor(v, sm, h) * qm.transpose()).norm_squared())
        .sum()
}

/// Fits a rank-`rank` PARAFAC2 model. Requires `rank <= min(N, min_m D_m)`.
pub fn parafac2_fit(data: &ViewSet, rank: usize, opts: &FitOptions) -> Result<Parafac2Fit> {
    opts.validate()?;
    let n = data.num_nodes();
    let max_rank = data.dims().into_iter().min().unwrap_or(0).min(n);
    if rank == 0 || rank > max_rank {
        return Err(Error::RankOutOfRange { rank, max: max_rank });
    }

    let slices = data.views().iter().map(compress).collect::<Result<Vec<_>>>()?;
    let mut v = initial_node_factor(&slices, n, rank, opts.seed)?;
    let mut h = DMatrix::identity(rank, rank);
    let mut s = vec![DVector::from_element(rank, 1.0); slices.len()];
    let mut q: Vec<DMatrix<f64>> = Vec::with_capacity(slices.len());

    let mut trace = Vec::new();
    let mut converged = false;
    let mut accel = ACCEL_START;
    let mut anderson = Anderson::new(ANDERSON_DEPTH);
    // Procrustes solution already computed for the current factors.
    let mut next_q: Option<Vec<DMatrix<f64>>> = None;
    for sweep in 0..opts.max_sweeps {
        let (pv, ph, ps) = (v.clone(), h.clone(), s.clone());
        q = match next_q.take() {
            Some(cq) => cq,
            None => fit_all_q(&slices, &v, &s, &h)?,
        };
        let y: Vec<DMatrix<f64>> = slices.iter().zip(&q).map(|(sl, qm)| &sl.x * qm).collect();
        cp_inner_update(&y, &mut v, &mut h, &mut s)?;
        let mut obj = slices_objective(&slices, &q, &v, &s, &h);

        if opts.extrapolate && obj > 0.0 {
            // Candidates: Anderson mixing, then a stretched step along the
            // last sweep's change. The best one replaces the sweep result
            // only if it beats it.
            let mut cands: Vec<(bool, Factors)> = Vec::new();
            let mixed = anderson.step(&pack_normalized(&pv, &ph, &ps), &pack_normalized(&v, &h, &s));
            if let Some(x) = mixed {
                cands.push((false, unpack(&x, n, rank, s.len())));
            }
            if sweep >= ACCEL_WARMUP {
                cands.push((true, stretched(&v, &h, &s, (&pv, &ph, &ps), accel)));
            }
            // Screen without forming Q, then confirm the winner exactly.
            let mut best: Option<(f64, Factors)> = None;
            let mut stretch_ok = false;
            for (is_stretch, (cv, ch, cs)) in cands {
                let est = profiled_objective(&slices, &cv, &cs, &ch);
                if is_stretch {
                    stretch_ok = est < obj;
                }
                if est < obj && best.as_ref().is_none_or(|b| est < b.0) {
                    best = Some((est, (cv, ch, cs)));
                }
            }
            accel = if stretch_ok {
                (accel * ACCEL_GROW).min(ACCEL_MAX)
            } else {
                (accel * ACCEL_SHRINK).max(ACCEL_START)
            };
            if let Some((_, (cv, ch, cs))) = best {
                let cq = fit_all_q(&slices, &cv, &cs, &ch)?;
                let cobj = slices_objective(&slices, &cq, &cv, &cs, &ch);
                if cobj < obj {
                    (v, h, s, obj) = (cv, ch, cs, cobj);
                    q = cq.clone();
                    next_q = Some(cq);
                }
            }
        }

        let prev = trace.last().copied();
        trace.push(obj);
        if let Some(prev) = prev {
            if prev - obj <= opts.rel_tol * prev {
                converged = true;
                break;
            }
        }
        if obj == 0.0 {
            converged = true;
            break;
        }
    }

    let q = slices
        .iter()
        .zip(q)
        .map(|(sl, qm)| match &sl.basis {
            Some(b) => b * qm,
            None => qm,
        })
        .collect();
    log::debug!(
        "parafac2 rank {rank}: {} sweeps, objective {:e}, converged {converged}",
        trace.len(),
        trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(Parafac2Fit {
        model: Parafac2Model { rank, q, h, s, v },
        trace,
        converged,
    })
}
