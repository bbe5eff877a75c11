//! Synthetic PARAFAC2 data with a known generating model.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::{Parafac2Model, ViewSet};

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Gaussian `V` and `H`, Haar-like orthonormal `Q_m`, weights in [0.5, 1.5).
pub fn random_model(seed: u64, n: usize, dims: &[usize], rank: usize) -> Parafac2Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight = Uniform::new(0.5, 1.5).expect("valid range");
    let q = dims.iter().map(|&d| gaussian(&mut rng, d, rank).qr().q()).collect();
    let h = gaussian(&mut rng, rank, rank);
    let s = dims
        .iter()
        .map(|_| DVector::from_fn(rank, |_, _| weight.sample(&mut rng)))
        .collect();
    let v = gaussian(&mut rng, n, rank);
    Parafac2Model { rank, q, h, s, v }
}

/// The model's views plus Gaussian noise scaled to `noise` relative
/// Frobenius norm over the whole set.
pub fn sample_views(model: &Parafac2Model, noise: f64, seed: u64) -> ViewSet {
    let clean: Vec<DMatrix<f64>> = (0..model.num_views()).map(|m| model.reconstruct(m)).collect();
    if noise == 0.0 {
        return ViewSet::new(clean).expect("model views are consistent");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noises: Vec<DMatrix<f64>> = clean
        .iter()
        .map(|x| gaussian(&mut rng, x.nrows(), x.ncols()))
        .collect();
    let signal: f64 = clean.iter().map(DMatrix::norm_squared).sum::<f64>().sqrt();
    let raw: f64 = noises.iter().map(DMatrix::norm_squared).sum::<f64>().sqrt();
    let scale = noise * signal / raw;
    let views = clean
        .into_iter()
        .zip(noises)
        .map(|(x, e)| x + e * scale)
        .collect();
    ViewSet::new(views).expect("model views are consistent")
}
