//! Fixtures shared by the benchmarks.

use rand::Rng;

use reabc::gaussian::{GaussianDistance, GaussianModel};
use reabc::io::read_observations;
use reabc::rng::stream;

const GAUSSIAN_DATA: &str = include_str!("../../../data/gaussian_sigma3.csv");

/// The Gaussian variance model on the bundled 25 observations.
pub fn gaussian_model() -> GaussianModel {
    let y = read_observations(GAUSSIAN_DATA).expect("bundled data parses");
    GaussianModel::new(y, 10.0, GaussianDistance::Sorted).expect("valid model")
}

/// Infectious periods and pressure thresholds for a population of `n`,
/// drawn as unit exponentials.
pub fn epidemic_latents(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = stream(seed, &[]);
    let mut exp = || -(1.0 - rng.random::<f64>()).ln();
    let g: Vec<f64> = (0..n).map(|_| exp()).collect();
    let p: Vec<f64> = (0..n - 1).map(|_| exp()).collect();
    (g, p)
}
