//! Zero-mean Gaussian with unknown scale: `y_i = σ Φ⁻¹(x_i)`, `σ ~ U(0, σ_max)`.
//!
//! The exact likelihood is available, which makes this the reference model
//! for checking ABC posteriors against the true one.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::model::{Model, ParamVector};
use crate::pmmh::{re_abc, ExactEstimator, PmmhConfig, ProposalConfig, Trace};
use crate::quantile::LatentDistribution;

/// How simulated and observed samples are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GaussianDistance {
    /// Euclidean distance between the vectors in observation order.
    Raw,
    /// Euclidean distance between the order statistics. Invariant to the
    /// labelling of the observations, so it measures only the spread.
    #[default]
    Sorted,
}

#[derive(Debug, Clone)]
pub struct GaussianModel {
    y_obs: Vec<f64>,
    sorted_obs: Vec<f64>,
    prior_upper: f64,
    distance: GaussianDistance,
}

impl GaussianModel {
    pub fn new(y_obs: Vec<f64>, prior_upper: f64, distance: GaussianDistance) -> Result<Self> {
        if y_obs.is_empty() {
            return Err(Error::InsufficientData("no observations".into()));
        }
        if y_obs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InsufficientData("observations must be finite".into()));
        }
        if !(prior_upper > 0.0 && prior_upper.is_finite()) {
            return Err(Error::InvalidConfig(format!("prior upper bound {prior_upper} must be positive")));
        }
        let mut sorted_obs = y_obs.clone();
        sorted_obs.sort_by(f64::total_cmp);
        Ok(Self { y_obs, sorted_obs, prior_upper, distance })
    }

    pub fn observations(&self) -> &[f64] {
        &self.y_obs
    }

    pub fn distance(&self) -> GaussianDistance {
        self.distance
    }

    pub fn prior_upper(&self) -> f64 {
        self.prior_upper
    }

    /// `log p(y | σ)` up to the constant `-n/2 log 2π`.
    pub fn exact_log_likelihood(&self, sigma: f64) -> f64 {
        exact_log_likelihood(sigma, &self.y_obs)
    }
}

/// `y_i = σ Φ⁻¹(x_i)`.
pub fn gaussian_simulate(sigma: f64, x: &[f64]) -> Vec<f64> {
    let normal = LatentDistribution::standard_normal();
    x.iter().map(|&u| sigma * normal.quantile(u)).collect()
}

/// `−n log σ − ‖y‖² / (2σ²)`, the Gaussian log-likelihood without its
/// constant; `-∞` for `σ ≤ 0`.
pub fn exact_log_likelihood(sigma: f64, y: &[f64]) -> f64 {
    if sigma <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let ss: f64 = y.iter().map(|v| v * v).sum();
    -(y.len() as f64) * sigma.ln() - ss / (2.0 * sigma * sigma)
}

impl Model for GaussianModel {
    fn param_dim(&self) -> usize {
        1
    }

    fn latent_dim(&self) -> usize {
        self.y_obs.len()
    }

    fn prior_log_density(&self, theta: &[f64]) -> f64 {
        if theta[0] > 0.0 && theta[0] < self.prior_upper {
            -self.prior_upper.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn prior_sample(&self, rng: &mut dyn RngCore) -> ParamVector {
        vec![self.prior_upper * rng.random::<f64>()]
    }

    fn phi(&self, theta: &[f64], x: &[f64]) -> f64 {
        let mut sim = gaussian_simulate(theta[0], x);
        let obs = match self.distance {
            GaussianDistance::Raw => &self.y_obs,
            GaussianDistance::Sorted => {
                sim.sort_by(f64::total_cmp);
                &self.sorted_obs
            }
        };
        sim.iter().zip(obs).map(|(s, o)| (s - o).powi(2)).sum::<f64>().sqrt()
    }
}

/// Random-walk MH on σ with the exact likelihood, as a reference chain.
pub fn exact_gaussian_mh(
    model: &GaussianModel,
    initial: f64,
    iterations: usize,
    step_sd: f64,
    seed: u64,
) -> Result<Trace> {
    let proposal = ProposalConfig::diagonal(&[step_sd])?;
    let mut cfg = PmmhConfig::new(vec![initial], iterations, proposal);
    cfg.early_termination = false;
    let y = model.observations();
    let estimator = ExactEstimator { log_likelihood: |t: &[f64]| exact_log_likelihood(t[0], y) };
    re_abc(model, &estimator, &cfg, seed)
}

/// `n` draws from `N(0, σ²)` via the latent map, for synthetic datasets.
pub fn synthetic_observations<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> Vec<f64> {
    let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    gaussian_simulate(sigma, &x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::{mean, std_error};
    use approx::assert_abs_diff_eq;

    #[test]
    fn simulate_examples() {
        let y = gaussian_simulate(2.0, &[0.5, 0.8413447460685429, 0.15865525393145707]);
        assert_abs_diff_eq!(y[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(y[1], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(y[2], -2.0, epsilon = 1e-9);
    }

    #[test]
    fn raw_and_sorted_distances() {
        let x = [0.8413447460685429, 0.15865525393145707];
        let raw = GaussianModel::new(vec![-1.0, 1.0], 10.0, GaussianDistance::Raw).unwrap();
        let sorted = GaussianModel::new(vec![-1.0, 1.0], 10.0, GaussianDistance::Sorted).unwrap();
        // Simulated (1, −1) against observed (−1, 1).
        assert_abs_diff_eq!(raw.phi(&[1.0], &x), 8f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(sorted.phi(&[1.0], &x), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn prior_support() {
        let m = GaussianModel::new(vec![1.0], 10.0, GaussianDistance::Raw).unwrap();
        assert_abs_diff_eq!(m.prior_log_density(&[3.0]), -(10f64.ln()));
        assert_eq!(m.prior_log_density(&[0.0]), f64::NEG_INFINITY);
        assert_eq!(m.prior_log_density(&[10.5]), f64::NEG_INFINITY);
        let mut rng = stream(1, &[]);
        for _ in 0..100 {
            let s = m.prior_sample(&mut rng)[0];
            assert!((0.0..10.0).contains(&s));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(GaussianModel::new(vec![], 10.0, GaussianDistance::Raw).is_err());
        assert!(GaussianModel::new(vec![f64::NAN], 10.0, GaussianDistance::Raw).is_err());
        assert!(GaussianModel::new(vec![1.0], 0.0, GaussianDistance::Raw).is_err());
    }

    #[test]
    fn exact_likelihood_peaks_at_rms() {
        let y = [1.0, -2.0, 3.0, 0.5];
        let rms = (y.iter().map(|v| v * v).sum::<f64>() / 4.0).sqrt();
        let at = exact_log_likelihood(rms, &y);
        assert!(at > exact_log_likelihood(rms * 1.01, &y));
        assert!(at > exact_log_likelihood(rms * 0.99, &y));
        assert_eq!(exact_log_likelihood(0.0, &y), f64::NEG_INFINITY);
    }

    #[test]
    fn exact_mh_matches_quadrature_posterior_mean() {
        let mut rng = stream(9, &[]);
        let y = synthetic_observations(25, 3.0, &mut rng);
        let model = GaussianModel::new(y.clone(), 10.0, GaussianDistance::Raw).unwrap();
        // Posterior mean of σ on a fine grid.
        let grid: Vec<f64> = (1..100_000).map(|i| i as f64 * 1e-4).collect();
        let logs: Vec<f64> = grid.iter().map(|&s| exact_log_likelihood(s, &y)).collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let truth = grid.iter().zip(&w).map(|(s, w)| s * w).sum::<f64>() / w.iter().sum::<f64>();

        let trace = exact_gaussian_mh(&model, 3.0, 40_000, 0.8, 10).unwrap();
        let draws = trace.column(0, 1000);
        let thinned: Vec<f64> = draws.chunks(20).map(mean).collect();
        let m = mean(&draws);
        assert!((m - truth).abs() < 4.0 * std_error(&thinned), "mean {m}, truth {truth}");
    }
}
