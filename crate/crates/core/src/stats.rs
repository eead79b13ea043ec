//! Small statistical helpers: moments, goodness-of-fit tests, regression.

use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; `NaN` for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).map(|d| d.sf(statistic)).unwrap_or(f64::NAN)
}

/// Pearson goodness-of-fit of `observed` counts to `probabilities`.
pub fn chi_square_gof(observed: &[u64], probabilities: &[f64]) -> TestResult {
    assert_eq!(observed.len(), probabilities.len());
    let total: u64 = observed.iter().sum();
    let statistic: f64 = observed
        .iter()
        .zip(probabilities)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let bins = probabilities.iter().filter(|&&p| p > 0.0).count();
    TestResult { statistic, p_value: chi_square_sf(statistic, bins.saturating_sub(1)) }
}

/// Chi-square test that `values` (in `[0, 1]`) are uniform, using equal bins.
pub fn chi_square_uniform(values: &[f64], bins: usize) -> TestResult {
    let mut counts = vec![0u64; bins];
    for &v in values {
        let b = ((v * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    chi_square_gof(&counts, &vec![1.0 / bins as f64; bins])
}

/// Chi-square test of homogeneity between two count vectors over the same
/// categories. Categories whose pooled expected count is below `min_expected`
/// are merged into their neighbour.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], min_expected: f64) -> TestResult {
    assert_eq!(a.len(), b.len());
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let share = na.min(nb) / (na + nb);
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        acc.0 += x as f64;
        acc.1 += y as f64;
        if (acc.0 + acc.1) * share >= min_expected {
            merged.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 + acc.1 > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => merged.push(acc),
        }
    }
    let total = na + nb;
    let statistic = merged
        .iter()
        .map(|&(x, y)| {
            let pooled = x + y;
            let ea = pooled * na / total;
            let eb = pooled * nb / total;
            (x - ea).powi(2) / ea + (y - eb).powi(2) / eb
        })
        .sum();
    TestResult { statistic, p_value: chi_square_sf(statistic, merged.len().saturating_sub(1)) }
}

/// Asymptotic Kolmogorov survival function with the Stephens correction.
fn kolmogorov_sf(d: f64, effective_n: f64) -> f64 {
    let sqrt_n = effective_n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> TestResult {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    TestResult { statistic: d, p_value: kolmogorov_sf(d, n) }
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let effective = (n * m) as f64 / (n + m) as f64;
    TestResult { statistic: d, p_value: kolmogorov_sf(d, effective) }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares fit of `y = intercept + slope · x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit { slope, intercept, r_squared }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn moments() {
        let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_eq!(mean(&xs), 5.0);
        assert!((variance(&xs) - 32.0 / 7.0).abs() < 1e-12);
        assert!(variance(&[1.0]).is_nan());
    }

    #[test]
    fn uniform_samples_pass_and_skewed_fail() {
        let mut rng = stream(11, &[]);
        let u: Vec<f64> = (0..20_000).map(|_| rng.random()).collect();
        assert!(chi_square_uniform(&u, 50).p_value > 0.01);
        assert!(ks_one_sample(&u, |x| x.clamp(0.0, 1.0)).p_value > 0.01);
        let skewed: Vec<f64> = u.iter().map(|x| x * x).collect();
        assert!(chi_square_uniform(&skewed, 50).p_value < 1e-6);
        assert!(ks_one_sample(&skewed, |x| x.clamp(0.0, 1.0)).p_value < 1e-6);
    }

    #[test]
    fn two_sample_tests() {
        let mut rng = stream(12, &[]);
        let a: Vec<f64> = (0..5000).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..5000).map(|_| rng.random()).collect();
        let c: Vec<f64> = (0..5000).map(|_| rng.random::<f64>() * 0.9).collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
        assert!(ks_two_sample(&a, &c).p_value < 1e-6);
        let counts_a = [100, 200, 300, 3, 0];
        let counts_b = [110, 190, 305, 2, 1];
        assert!(chi_square_two_sample(&counts_a, &counts_b, 5.0).p_value > 0.5);
    }

    #[test]
    fn chi_square_known_value() {
        // Fair die, statistic 3.2 on 5 degrees of freedom.
        let r = chi_square_gof(&[10, 10, 10, 10, 14, 6], &[1.0 / 6.0; 6]);
        assert!((r.statistic - 3.2).abs() < 1e-12);
        assert!((r.p_value - 0.669_182_9).abs() < 1e-6);
    }

    #[test]
    fn exact_line_fit() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let fit = linear_fit(&xs, &ys);
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }
}
