//! Shrinkage slice sampling on `[0, 1]^m` targeting the uniform
//! distribution on `{x : Φ(x) ≤ ε}`.
//!
//! Each update picks a random Gaussian direction, places a bracket of width
//! `w` around the current point at a uniform offset, and proposes along the
//! direction (folded back into the unit cube by [`reflect`]) until a point
//! inside the region is found, shrinking the bracket towards zero after each
//! miss. The bracket always contains `z = 0`, the current point, so the loop
//! terminates with probability one.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::within;

pub const DEFAULT_MAX_ITERATIONS: usize = 1000;
pub const MIN_WIDTH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceConfig {
    pub width: f64,
    pub max_iterations: usize,
}

impl Default for SliceConfig {
    fn default() -> Self {
        Self { width: 1.0, max_iterations: DEFAULT_MAX_ITERATIONS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceOutcome {
    pub point: Vec<f64>,
    /// Φ at `point`.
    pub phi: f64,
    /// `|z|` of the accepted proposal.
    pub final_abs_z: f64,
    /// Number of Φ evaluations, at least one.
    pub iterations: usize,
}

/// Folds the real line onto `[0, 1]`: identity on `[0, 1]`, continuous and
/// 2-periodic.
pub fn reflect(y: f64) -> f64 {
    let m = y.rem_euclid(2.0);
    if m < 1.0 {
        m
    } else {
        2.0 - m
    }
}

/// Search width for the next SMC stage from the largest accepted `|z|` of the
/// previous one.
pub fn adapt_width(max_abs_z: f64) -> f64 {
    debug_assert!(max_abs_z >= 0.0);
    (2.0 * max_abs_z).clamp(MIN_WIDTH, 1.0)
}

/// One slice-sampling update of `x`, where `phi_x = Φ(x) ≤ eps`.
///
/// Panics if `phi_x` violates the threshold. Returns
/// [`Error::SliceExhausted`] when `cfg.max_iterations` proposals all miss,
/// which for a deterministic Φ indicates a bug.
pub fn slice_update<F, R>(
    x: &[f64],
    phi_x: f64,
    phi: F,
    eps: f64,
    cfg: &SliceConfig,
    rng: &mut R,
) -> Result<SliceOutcome>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    assert!(within(phi_x, eps), "slice_update started outside the slice: Φ(x) = {phi_x} > ε = {eps}");
    assert!(cfg.width > 0.0 && cfg.width <= 1.0, "slice width {} outside (0, 1]", cfg.width);

    let direction: Vec<f64> = (0..x.len()).map(|_| rng.sample(StandardNormal)).collect();
    let offset = rng.random::<f64>() * cfg.width;
    let (mut a, mut b) = (-offset, cfg.width - offset);
    let mut proposal = vec![0.0; x.len()];

    for iteration in 1..=cfg.max_iterations {
        let z = a + (b - a) * rng.random::<f64>();
        for ((p, &xi), &vi) in proposal.iter_mut().zip(x).zip(&direction) {
            *p = reflect(xi + z * vi);
        }
        let value = phi(&proposal);
        if within(value, eps) {
            return Ok(SliceOutcome { point: proposal, phi: value, final_abs_z: z.abs(), iterations: iteration });
        }
        if z < 0.0 {
            a = z;
        } else {
            b = z;
        }
    }
    Err(Error::SliceExhausted(cfg.max_iterations))
}
