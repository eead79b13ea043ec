//! Inverse CDFs used to turn uniform latents into simulator inputs.

use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};

/// Replacement for `u == 0` on distributions with an unbounded lower tail.
pub const LOWER_CLAMP: f64 = 1e-300;
/// Replacement for `u == 1` on distributions with an unbounded upper tail.
pub const UPPER_CLAMP: f64 = 1.0 - 1e-16;

const GAMMA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    StandardNormal,
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Weibull { shape: f64 },
}

/// A univariate distribution with a quantile function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentDistribution(Kind);

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidDistribution(format!("{name} must be positive and finite, got {v}")))
    }
}

impl LatentDistribution {
    pub const STANDARD_NORMAL: Self = Self(Kind::StandardNormal);

    pub fn standard_normal() -> Self {
        Self::STANDARD_NORMAL
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(Self(Kind::Exponential { rate: positive("rate", rate)? }))
    }

    /// Gamma with shape `shape` and rate `rate` (mean `shape / rate`).
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Ok(Self(Kind::Gamma { shape: positive("shape", shape)?, rate: positive("rate", rate)? }))
    }

    /// Weibull with shape `shape` and unit scale.
    pub fn weibull(shape: f64) -> Result<Self> {
        Ok(Self(Kind::Weibull { shape: positive("shape", shape)? }))
    }

    pub fn mean(&self) -> f64 {
        match self.0 {
            Kind::StandardNormal => 0.0,
            Kind::Exponential { rate } => 1.0 / rate,
            Kind::Gamma { shape, rate } => shape / rate,
            Kind::Weibull { shape } => ln_gamma(1.0 + 1.0 / shape).exp(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.0 {
            Kind::StandardNormal => 0.5 * erfc(-x / std::f64::consts::SQRT_2),
            Kind::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Kind::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, rate * x)
                }
            }
            Kind::Weibull { shape } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x.powf(shape)).exp_m1()
                }
            }
        }
    }

    /// `F⁻¹(u)` for `u ∈ [0, 1]`. Endpoints of unbounded tails are clamped
    /// to [`LOWER_CLAMP`] / [`UPPER_CLAMP`] so the result is always finite.
    pub fn quantile(&self, u: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&u), "quantile argument {u} outside [0, 1]");
        let u = u.clamp(0.0, 1.0);
        match self.0 {
            Kind::StandardNormal => normal_quantile(u.clamp(LOWER_CLAMP, UPPER_CLAMP)),
            Kind::Exponential { rate } => unit_exponential_quantile(u) / rate,
            Kind::Gamma { shape, rate } => gamma_unit_quantile(shape, u) / rate,
            Kind::Weibull { shape } => unit_exponential_quantile(u).powf(1.0 / shape),
        }
    }
}

fn unit_exponential_quantile(u: f64) -> f64 {
    -(-u.min(UPPER_CLAMP)).ln_1p()
}

fn normal_quantile(u: f64) -> f64 {
    if u <= 0.5 {
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
    } else {
        std::f64::consts::SQRT_2 * erfc_inv(2.0 * (1.0 - u))
    }
}

/// Quantile of Gamma(shape, 1) by safeguarded Newton iteration on the
/// regularized incomplete gamma function.
fn gamma_unit_quantile(shape: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let u = u.min(UPPER_CLAMP);
    // Work with whichever tail keeps the target away from 1.
    let lower_tail = u <= 0.5;
    let target = if lower_tail { u } else { 1.0 - u };
    let residual = |y: f64| {
        if lower_tail {
            gamma_lr(shape, y) - target
        } else {
            target - gamma_ur(shape, y)
        }
    };
    let log_norm = ln_gamma(shape);
    let density = |y: f64| ((shape - 1.0) * y.ln() - y - log_norm).exp();

    let mut lo = 0.0;
    let mut hi = shape.max(1.0);
    while residual(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }

    let mut y = initial_gamma_guess(shape, u);
    if !(y > lo && y < hi) {
        y = 0.5 * (lo + hi);
    }
    for _ in 0..400 {
        let r = residual(y);
        if r == 0.0 {
            return y;
        }
        if r < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let step = r / density(y);
        let mut next = y - step;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        let tol = (GAMMA_TOL * y.min(1.0)).max(4.0 * f64::EPSILON * y);
        if (next - y).abs() <= tol || hi - lo <= tol {
            return next;
        }
        y = next;
    }
    y
}

fn initial_gamma_guess(shape: f64, u: f64) -> f64 {
    // Wilson-Hilferty, falling back to the small-u power law.
    let z = normal_quantile(u.clamp(LOWER_CLAMP, UPPER_CLAMP));
    let c = 1.0 / (9.0 * shape);
    let wh = shape * (1.0 - c + z * c.sqrt()).powi(3);
    let small = ((u.ln() + ln_gamma(shape + 1.0)) / shape).exp();
    if wh > 0.0 && wh.is_finite() && !(shape < 1.0 && u < 0.1) {
        wh
    } else {
        small
    }
}
