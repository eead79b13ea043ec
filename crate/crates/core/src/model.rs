//! The model abstraction: prior, uniform latents and the distance map Φ.

use std::ops::Deref;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};

pub type ParamVector = Vec<f64>;

/// A point in `[0, 1]^m` holding all simulation randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVector(Vec<f64>);

impl LatentVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::LatentOutOfRange { index, value });
        }
        Ok(Self(values))
    }

    /// Uniform draw from `[0, 1]^m`.
    pub fn sample<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        Self((0..m).map(|_| rng.random::<f64>()).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LatentVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A likelihood-free model.
///
/// `phi(θ, x)` must be a pure function of its arguments: the samplers
/// evaluate it from many threads at once and rely on bit-identical results
/// for repeated calls. A return value of `+∞` marks a simulation that is never
/// accepted.
pub trait Model: Send + Sync {
    fn param_dim(&self) -> usize;

    fn latent_dim(&self) -> usize;

    /// Log prior density, `-∞` outside the support.
    fn prior_log_density(&self, theta: &[f64]) -> f64;

    fn prior_sample(&self, rng: &mut dyn RngCore) -> ParamVector;

    /// Distance between the data simulated at `(θ, x)` and the observations.
    fn phi(&self, theta: &[f64], x: &[f64]) -> f64;
}

/// Whether a distance passes threshold `eps`. Infinite distances never pass.
#[inline]
pub fn within(phi: f64, eps: f64) -> bool {
    phi <= eps && phi < f64::INFINITY
}

/// Parameter-free model defined by a closure on the latents.
///
/// Useful for toy problems where `Pr(Φ(x) ≤ ε)` is known analytically.
pub struct FnLatentModel<F> {
    latent_dim: usize,
    phi: F,
}

impl<F> FnLatentModel<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(latent_dim: usize, phi: F) -> Self {
        Self { latent_dim, phi }
    }
}

impl<F> Model for FnLatentModel<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn param_dim(&self) -> usize {
        0
    }

    fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    fn prior_log_density(&self, _theta: &[f64]) -> f64 {
        0.0
    }

    fn prior_sample(&self, _rng: &mut dyn RngCore) -> ParamVector {
        Vec::new()
    }

    fn phi(&self, _theta: &[f64], x: &[f64]) -> f64 {
        (self.phi)(x)
    }
}

/// An estimate of `Pr(Φ(x) ≤ ε | θ)`, stored on the log scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodEstimate {
    pub log_value: f64,
}

impl LikelihoodEstimate {
    pub const ZERO: Self = Self { log_value: f64::NEG_INFINITY };

    pub fn from_log(log_value: f64) -> Self {
        Self { log_value }
    }

    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    pub fn is_zero(&self) -> bool {
        self.log_value == f64::NEG_INFINITY
    }
}
