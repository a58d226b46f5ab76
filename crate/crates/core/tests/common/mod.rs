#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use robscatter::lab::{ar1_correlation, TrueModel};
use robscatter::rng::{stream, StreamRng};
use robscatter::{Dataset, Mask};

pub fn gaussian(n: usize, sigma: &DMatrix<f64>, seed: u64) -> DMatrix<f64> {
    TrueModel::new(sigma.clone()).unwrap().sample(n, &mut stream(seed, &[]))
}

pub fn ar1_data(n: usize, p: usize, rho: f64, seed: u64) -> Dataset {
    Dataset::complete(gaussian(n, &ar1_correlation(p, rho), seed)).unwrap()
}

/// Hides each cell independently with probability `frac`, keeping one cell per row.
pub fn with_random_missing(data: &Dataset, frac: f64, seed: u64) -> Dataset {
    let mut rng = stream(seed, &[7]);
    let (n, p) = (data.n(), data.p());
    let mut mask = Mask::all_observed(n, p);
    for i in 0..n {
        let keep = rng.random_range(0..p);
        for j in 0..p {
            if j != keep && rng.random::<f64>() < frac {
                mask.set(i, j, false);
            }
        }
    }
    data.with_mask(mask).unwrap()
}

pub fn normals(n: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}
