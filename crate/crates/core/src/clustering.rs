//! Lloyd's k-means with k-means++ seeding and seeded restarts.

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed::{rng_for, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KmeansParams {
    pub k: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl KmeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        KmeansParams {
            k,
            restarts: 20,
            max_iters: 300,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub labels: Vec<usize>,
    /// Within-cluster sum of squared distances of the returned labeling.
    pub wcss: f64,
    /// Index of the restart that produced `labels`.
    pub best_restart: usize,
    /// Per restart, WCSS after each Lloyd iteration.
    pub histories: Vec<Vec<f64>>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

struct Points {
    data: Vec<f64>,
    n: usize,
    dim: usize,
}

impl Points {
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn plus_plus_seeds(pts: &Points, k: usize, rng: &mut Rng) -> Vec<f64> {
    let mut centers = Vec::with_capacity(k * pts.dim);
    let first = rng.random_range(0..pts.n);
    centers.extend_from_slice(pts.row(first));
    let mut d2: Vec<f64> = (0..pts.n).map(|i| sq_dist(pts.row(i), pts.row(first))).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = pts.n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            // guard against rounding leaving us on a zero-weight tail point
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|&w| w > 0.0).expect("total > 0");
            }
            chosen
        } else {
            rng.random_range(0..pts.n)
        };
        let c = pts.row(pick).to_vec();
        for (i, di) in d2.iter_mut().enumerate() {
            *di = di.min(sq_dist(pts.row(i), &c));
        }
        centers.extend_from_slice(&c);
    }
    centers
}

/// Assigns every point to its nearest center (ties: lowest center index).
fn assign(pts: &Points, centers: &[f64], labels: &mut [usize], dist: &mut [f64]) {
    for i in 0..pts.n {
        let (best, d) = centers
            .chunks_exact(pts.dim)
            .map(|c| sq_dist(pts.row(i), c))
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (j, d)| if d < acc.1 { (j, d) } else { acc });
        labels[i] = best;
        dist[i] = d;
    }
}

/// Gives each empty cluster the point farthest from its own centroid.
fn reseed_empty(labels: &mut [usize], dist: &mut [f64], k: usize) {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let far = (0..labels.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .fold(None, |acc: Option<usize>, i| match acc {
                Some(j) if dist[j] >= dist[i] => Some(j),
                _ => Some(i),
            });
        match far {
            Some(i) if dist[i] > 0.0 => {
                sizes[labels[i]] -= 1;
                labels[i] = c;
                sizes[c] = 1;
                dist[i] = 0.0;
            }
            _ => {}
        }
    }
}

/// Means of the current clusters; an empty cluster keeps its old center.
fn update_centers(pts: &Points, labels: &[usize], centers: &mut [f64], k: usize) {
    let mut sums = vec![0.0; k * pts.dim];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, x) in sums[l * pts.dim..(l + 1) * pts.dim].iter_mut().zip(pts.row(i)) {
            *s += x;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            continue;
        }
        let inv = 1.0 / counts[c] as f64;
        for (dst, s) in centers[c * pts.dim..(c + 1) * pts.dim]
            .iter_mut()
            .zip(&sums[c * pts.dim..(c + 1) * pts.dim])
        {
            *dst = s * inv;
        }
    }
}

fn wcss(pts: &Points, labels: &[usize], centers: &[f64]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(pts.row(i), &centers[l * pts.dim..(l + 1) * pts.dim]))
        .sum()
}

fn lloyd(pts: &Points, k: usize, max_iters: usize, rng: &mut Rng) -> (Vec<usize>, f64, Vec<f64>) {
    let mut centers = plus_plus_seeds(pts, k, rng);
    let mut labels = vec![usize::MAX; pts.n];
    let mut next = vec![0usize; pts.n];
    let mut dist = vec![0.0; pts.n];
    let mut history = Vec::new();
    for _ in 0..max_iters {
        assign(pts, &centers, &mut next, &mut dist);
        reseed_empty(&mut next, &mut dist, k);
        let changed = next != labels;
        labels.copy_from_slice(&next);
        update_centers(pts, &labels, &mut centers, k);
        history.push(wcss(pts, &labels, &centers));
        if !changed {
            break;
        }
    }
    let score = history.last().copied().unwrap_or(f64::INFINITY);
    (labels, score, history)
}

/// Clusters the rows of `points`. The best of `restarts` runs by WCSS wins,
/// ties going to the earliest restart.
pub fn kmeans(points: &DMatrix<f64>, params: &KmeansParams) -> Result<KmeansResult> {
    let (n, dim) = points.shape();
    if params.k == 0 || params.restarts == 0 || params.max_iters == 0 {
        return Err(Error::InvalidParam("k, restarts and max_iters must be >= 1".into()));
    }
    if params.k > n {
        return Err(Error::InvalidParam(format!("k = {} exceeds {n} points", params.k)));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("k-means input"));
    }
    let mut data = Vec::with_capacity(n * dim);
    for i in 0..n {
        data.extend(points.row(i).iter());
    }
    let pts = Points { data, n, dim };

    let mut best: Option<(Vec<usize>, f64, usize)> = None;
    let mut histories = Vec::with_capacity(params.restarts);
    for restart in 0..params.restarts {
        let mut rng = rng_for(params.seed, "kmeans-restart", restart as u64);
        let (labels, score, history) = lloyd(&pts, params.k, params.max_iters, &mut rng);
        histories.push(history);
        if best.as_ref().is_none_or(|b| score < b.1) {
            best = Some((labels, score, restart));
        }
    }
    let (labels, wcss, best_restart) = best.expect("restarts >= 1");
    Ok(KmeansResult {
        labels,
        wcss,
        best_restart,
        histories,
    })
}
