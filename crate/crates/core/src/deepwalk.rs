//! DeepWalk: truncated random walks fed to skip-gram with negative sampling.
//!
//! Every random stream is derived from an explicit seed, so walks and
//! trained embeddings are bitwise reproducible.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::seed::{derive_seed, rng_for};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkParams {
    pub walks_per_node: usize,
    /// Number of nodes in a full-length walk.
    pub walk_length: usize,
    /// Half-width of the skip-gram context window, in hops.
    pub window: usize,
    pub seed: u64,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            walks_per_node: 10,
            walk_length: 40,
            window: 5,
            seed: 0,
        }
    }
}

impl WalkParams {
    pub fn validate(&self) -> Result<()> {
        if self.walks_per_node == 0 || self.walk_length == 0 || self.window == 0 {
            return Err(Error::InvalidParam(
                "walks_per_node, walk_length and window must be >= 1".into(),
            ));
        }
        if self.window >= self.walk_length {
            return Err(Error::InvalidParam(format!(
                "window {} must be smaller than walk_length {}",
                self.window, self.walk_length
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgnsParams {
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub final_lr: f64,
    pub seed: u64,
}

impl Default for SgnsParams {
    fn default() -> Self {
        SgnsParams {
            dim: 128,
            negatives: 5,
            epochs: 5,
            initial_lr: 0.025,
            final_lr: 0.0001,
            seed: 0,
        }
    }
}

impl SgnsParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.negatives == 0 || self.epochs == 0 {
            return Err(Error::InvalidParam(
                "dim, negatives and epochs must be >= 1".into(),
            ));
        }
        if !(self.final_lr > 0.0 && self.final_lr <= self.initial_lr && self.initial_lr.is_finite())
        {
            return Err(Error::InvalidParam(format!(
                "need 0 < final_lr ({}) <= initial_lr ({})",
                self.final_lr, self.initial_lr
            )));
        }
        Ok(())
    }
}

/// One N x D embedding of the graph's nodes; row i belongs to node i.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingView {
    pub matrix: DMatrix<f64>,
}

impl EmbeddingView {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("embedding view"));
        }
        Ok(EmbeddingView { matrix })
    }

    pub fn num_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }
}

pub type Walk = Vec<usize>;

/// `walks_per_node` rounds; each round visits every node once as a start, in
/// a seeded shuffled order. Walk `i` draws from its own stream, so the
/// corpus does not depend on generation order.
pub fn generate_walks(g: &Graph, p: &WalkParams) -> Result<Vec<Walk>> {
    p.validate()?;
    let n = g.num_nodes();
    let mut walks = Vec::with_capacity(n * p.walks_per_node);
    let mut starts: Vec<usize> = (0..n).collect();
    for round in 0..p.walks_per_node {
        starts.sort_unstable();
        starts.shuffle(&mut rng_for(p.seed, "walk-order", round as u64));
        for (j, &start) in starts.iter().enumerate() {
            let index = (round * n + j) as u64;
            let mut rng = rng_for(p.seed, "walk", index);
            let mut walk = Vec::with_capacity(p.walk_length);
            walk.push(start);
            let mut cur = start;
            while walk.len() < p.walk_length {
                let nbrs = g.neighbors(cur)?;
                if nbrs.is_empty() {
                    break;
                }
                cur = nbrs[rng.random_range(0..nbrs.len())];
                walk.push(cur);
            }
            walks.push(walk);
        }
    }
    Ok(walks)
}

/// Loss and gradients of one skip-gram pair with its negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGrad {
    pub loss: f64,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln sigmoid(x)`, stable for large |x|.
pub(crate) fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, ra) = a.split_at(a.len() - a.len() % 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `loss = -ln s(u.v) - sum_j ln s(-u.w_j)` with analytic gradients.
pub fn sgns_loss_and_grad(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> Result<SgnsGrad> {
    let d = center.len();
    if context.len() != d || negatives.iter().any(|w| w.len() != d) {
        return Err(Error::DimensionMismatch(format!(
            "sgns vectors must all have length {d}"
        )));
    }
    let pos = dot(center, context);
    let g_pos = sigmoid(pos) - 1.0;
    let mut loss = neg_log_sigmoid(pos);
    let mut grad_center: Vec<f64> = context.iter().map(|v| g_pos * v).collect();
    let grad_context: Vec<f64> = center.iter().map(|u| g_pos * u).collect();
    let mut grad_neg = Vec::with_capacity(negatives.len());
    for w in negatives {
        let s = dot(center, w);
        let g = sigmoid(s);
        loss += neg_log_sigmoid(-s);
        axpy(g, w, &mut grad_center);
        grad_neg.push(center.iter().map(|u| g * u).collect());
    }
    Ok(SgnsGrad {
        loss,
        center: grad_center,
        context: grad_context,
        negatives: grad_neg,
    })
}

/// Mean per-pair loss of each training epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainStats {
    pub epoch_loss: Vec<f64>,
}

pub fn train_skipgram(walks: &[Walk], g: &Graph, p: &SgnsParams, window: usize) -> Result<EmbeddingView> {
    train_skipgram_with_stats(walks, g, p, window).map(|(view, _)| view)
}

pub fn train_skipgram_with_stats(
    walks: &[Walk],
    g: &Graph,
    p: &SgnsParams,
    window: usize,
) -> Result<(EmbeddingView, TrainStats)> {
    p.validate()?;
    if window == 0 {
        return Err(Error::InvalidParam("window must be >= 1".into()));
    }
    let n = g.num_nodes();
    let d = p.dim;
    let mut counts = vec![0u64; n];
    for &node in walks.iter().flatten() {
        if node >= n {
            return Err(Error::NodeOutOfRange { node, num_nodes: n });
        }
        counts[node] += 1;
    }
    let total_tokens: u64 = counts.iter().sum();
    if total_tokens == 0 {
        return Err(Error::InvalidParam("no walks to train on".into()));
    }

    let noise = WeightedIndex::new(counts.iter().map(|&c| (c as f64).powf(0.75)))
        .map_err(|e| Error::InvalidParam(format!("negative-sampling table: {e}")))?;

    let mut init_rng = rng_for(p.seed, "sgns-init", 0);
    let bound = 0.5 / d as f64;
    let init = Uniform::new(-bound, bound).expect("bound > 0");
    let mut input: Vec<f64> = (0..n * d).map(|_| init.sample(&mut init_rng)).collect();
    let mut output = vec![0.0f64; n * d];
    let mut grad = vec![0.0f64; d];

    let mut rng = rng_for(p.seed, "sgns-negatives", 0);
    let schedule_len = (total_tokens * p.epochs as u64) as f64;
    let mut processed = 0u64;
    let mut epoch_loss = Vec::with_capacity(p.epochs);

    for _ in 0..p.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0u64;
        for walk in walks {
            for (i, &center) in walk.iter().enumerate() {
                let lr = p.initial_lr
                    - (p.initial_lr - p.final_lr) * (processed as f64 / schedule_len);
                processed += 1;
                let lo = i.saturating_sub(window);
                let hi = (i + window).min(walk.len() - 1);
                for (j, &ctx) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    grad.fill(0.0);
                    let u = &input[center * d..(center + 1) * d];
                    for k in 0..=p.negatives {
                        let (target, label) = if k == 0 {
                            (ctx, 1.0)
                        } else {
                            let neg = noise.sample(&mut rng);
                            if neg == ctx {
                                continue;
                            }
                            (neg, 0.0)
                        };
                        let v = &mut output[target * d..(target + 1) * d];
                        let f = dot(u, v);
                        loss_sum += if label > 0.0 {
                            neg_log_sigmoid(f)
                        } else {
                            neg_log_sigmoid(-f)
                        };
                        // d loss / d f
                        let gf = sigmoid(f) - label;
                        let step = -lr * gf;
                        for ((g, vi), ui) in grad.iter_mut().zip(v.iter_mut()).zip(u) {
                            *g += gf * *vi;
                            *vi += step * ui;
                        }
                    }
                    axpy(-lr, &grad, &mut input[center * d..(center + 1) * d]);
                    pairs += 1;
                }
            }
        }
        epoch_loss.push(if pairs > 0 { loss_sum / pairs as f64 } else { 0.0 });
    }

    let matrix = DMatrix::from_row_slice(n, d, &input);
    Ok((EmbeddingView::new(matrix)?, TrainStats { epoch_loss }))
}

/// One view per entry of `dims`, each from its own walk corpus and SGNS seed.
pub fn make_views(g: &Graph, dims: &[usize], p: &WalkParams, base: &SgnsParams) -> Result<Vec<EmbeddingView>> {
    if dims.is_empty() {
        return Err(Error::InvalidParam("at least one view dimension required".into()));
    }
    if let Some(bad) = dims.iter().find(|&&d| d == 0) {
        return Err(Error::InvalidParam(format!("view dimension {bad} < 1")));
    }
    dims.iter()
        .enumerate()
        .map(|(m, &dim)| {
            let walk_params = WalkParams {
                seed: derive_seed(p.seed, "view-walks", m as u64),
                ..*p
            };
            let sgns = SgnsParams {
                dim,
                seed: derive_seed(base.seed, "view-sgns", m as u64),
                ..*base
            };
            let walks = generate_walks(g, &walk_params)?;
            log::debug!("view {m}: dim {dim}, {} walks", walks.len());
            train_skipgram(&walks, g, &sgns, p.window)
        })
        .collect()
}

/// Writes `N D` then one row per node, floats in shortest round-trip form.
pub fn write_view(path: impl AsRef<Path>, view: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix_block(view, true)).map_err(|e| Error::io(path, e))
}

pub(crate) fn format_matrix_block(m: &DMatrix<f64>, header: bool) -> String {
    let mut out = String::new();
    if header {
        out.push_str(&format!("{} {}\n", m.nrows(), m.ncols()));
    }
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_view(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| perr(1, "missing `N D` header".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| perr(1, format!("bad header field {t:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(perr(1, "header must be `N D`".into()));
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (idx, line) in lines {
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(
                tok.parse::<f64>()
                    .map_err(|_| perr(idx + 1, format!("bad number {tok:?}")))?,
            );
        }
        if data.len() - before != cols {
            return Err(perr(idx + 1, format!("expected {cols} values")));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(perr(0, format!("expected {rows} rows, found {seen}")));
    }
    let m = DMatrix::from_row_slice(rows, cols, &data);
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("view file"));
    }
    Ok(m)
}
