//! Stochastic SIR epidemics in a closed population observed through removal
//! times.
//!
//! Simulation uses the Sellke construction: individual `i` has an infectious
//! period `g_i ~ F_inf` and a pressure threshold `p_i ~ F_press`, and is
//! infected once the accumulated infection pressure `β ∫ I(t) dt` exceeds
//! `p_i`. Given the quantiles of the `g_i` and `p_i` this is deterministic,
//! which is what the latent-variable samplers need.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::model::{Model, ParamVector};
use crate::quantile::LatentDistribution;

pub const DEFAULT_K_PENALTY: f64 = 1000.0;
pub const DEFAULT_PRIOR_RATE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpidemicVariant {
    /// Exponential infectious period with rate γ, Exp(1) thresholds.
    Markov,
    /// Gamma(k, γ) infectious period (shape k, rate γ), Exp(1) thresholds.
    GammaInfectious,
    /// Exponential infectious period, Weibull(k, 1) thresholds.
    WeibullPressure,
    /// Markov model compared on removal times floored to multiples of 5.
    BinnedMarkov,
}

impl EpidemicVariant {
    /// Parameter names in θ order.
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            Self::Markov | Self::BinnedMarkov => &["lambda", "gamma"],
            Self::GammaInfectious | Self::WeibullPressure => &["lambda", "gamma", "k"],
        }
    }

    pub fn param_dim(self) -> usize {
        self.parameter_names().len()
    }

    fn binned(self) -> bool {
        self == Self::BinnedMarkov
    }

    /// Infectious-period and pressure distributions at θ.
    pub fn distributions(self, theta: &[f64]) -> Result<(LatentDistribution, LatentDistribution)> {
        let gamma = theta[1];
        match self {
            Self::Markov | Self::BinnedMarkov => {
                Ok((LatentDistribution::exponential(gamma)?, LatentDistribution::exponential(1.0)?))
            }
            Self::GammaInfectious => {
                Ok((LatentDistribution::gamma(theta[2], gamma)?, LatentDistribution::exponential(1.0)?))
            }
            Self::WeibullPressure => {
                Ok((LatentDistribution::exponential(gamma)?, LatentDistribution::weibull(theta[2])?))
            }
        }
    }
}

impl fmt::Display for EpidemicVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Markov => "markov",
            Self::GammaInfectious => "gamma-infectious",
            Self::WeibullPressure => "weibull-pressure",
            Self::BinnedMarkov => "binned-markov",
        })
    }
}

impl FromStr for EpidemicVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markov" => Ok(Self::Markov),
            "gamma-infectious" => Ok(Self::GammaInfectious),
            "weibull-pressure" => Ok(Self::WeibullPressure),
            "binned-markov" => Ok(Self::BinnedMarkov),
            other => Err(Error::InvalidConfig(format!(
                "unknown epidemic variant {other:?} (expected markov, gamma-infectious, weibull-pressure or binned-markov)"
            ))),
        }
    }
}

/// Observed removals as times since the first removal.
#[derive(Debug, Clone, PartialEq)]
pub struct RemovalData {
    pub population: usize,
    /// Nondecreasing, starting at 0.
    pub since_first: Vec<f64>,
}

impl RemovalData {
    pub fn new(population: usize, since_first: Vec<f64>) -> Result<Self> {
        if since_first.is_empty() {
            return Err(Error::InsufficientData("no removals".into()));
        }
        if since_first.len() > population {
            return Err(Error::InsufficientData(format!(
                "{} removals exceed the population of {population}",
                since_first.len()
            )));
        }
        if since_first[0] != 0.0 || since_first.windows(2).any(|w| w[1].is_nan() || w[1] < w[0]) {
            return Err(Error::InsufficientData("removal times must start at 0 and be nondecreasing".into()));
        }
        Ok(Self { population, since_first })
    }

    /// From the gaps between consecutive removals.
    pub fn from_intervals(population: usize, intervals: &[f64]) -> Result<Self> {
        let mut s = Vec::with_capacity(intervals.len() + 1);
        s.push(0.0);
        let mut acc = 0.0;
        for &d in intervals {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::InsufficientData(format!("invalid inter-removal time {d}")));
            }
            acc += d;
            s.push(acc);
        }
        Self::new(population, s)
    }

    /// Plain text: first value the population size, then one inter-removal
    /// time per line. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut population = None;
        let mut intervals = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: idx + 1, message };
            match population {
                None => {
                    population = Some(line.parse::<usize>().map_err(|e| err(format!("population size: {e}")))?);
                }
                Some(_) => intervals.push(line.parse::<f64>().map_err(|e| err(format!("inter-removal time: {e}")))?),
            }
        }
        let population = population.ok_or(Error::Parse { line: 1, message: "missing population size".into() })?;
        Self::from_intervals(population, &intervals)
    }

    pub fn removed(&self) -> usize {
        self.since_first.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedEpidemic {
    /// Removal time of each individual; `+∞` if never infected.
    pub removal_times: Vec<f64>,
    /// Thresholds of individuals `2..n` in ascending order.
    pub sorted_thresholds: Vec<f64>,
    /// Total infection pressure exerted over the epidemic.
    pub total_pressure: f64,
}

impl SimulatedEpidemic {
    pub fn final_size(&self) -> usize {
        self.removal_times.iter().filter(|r| r.is_finite()).count()
    }

    /// Finite removal times, sorted, relative to the first.
    pub fn since_first(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.removal_times.iter().copied().filter(|r| r.is_finite()).collect();
        r.sort_by(f64::total_cmp);
        let first = r[0];
        r.iter().map(|v| v - first).collect()
    }

    /// `ρ_(i)`: the threshold crossed by the `i`-th infection, `i ≥ 2`.
    pub fn rho(&self, i: usize) -> f64 {
        self.sorted_thresholds[i - 2]
    }
}

/// Sellke construction. `g` has the `n` infectious periods; `p` the
/// thresholds of individuals `2..n`. Individual 1 is infected at time 0.
pub fn sellke_simulate(beta: f64, g: &[f64], p: &[f64]) -> SimulatedEpidemic {
    let n = g.len();
    assert!(n >= 1 && p.len() == n - 1, "need n periods and n − 1 thresholds");
    debug_assert!(beta >= 0.0);

    let mut order: Vec<usize> = (0..n - 1).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let sorted_thresholds: Vec<f64> = order.iter().map(|&j| p[j]).collect();

    let mut removal_times = vec![f64::INFINITY; n];
    removal_times[0] = g[0];
    let mut pending = BinaryHeap::new();
    pending.push(Reverse(OrdF64(g[0])));
    let (mut t, mut pressure, mut infectious) = (0.0f64, 0.0f64, 1usize);
    let mut next = 0;

    while let Some(&Reverse(OrdF64(removal))) = pending.peek() {
        let reachable = pressure + beta * infectious as f64 * (removal - t);
        let (t_prev, p_prev) = (t, pressure);
        if next < order.len() && sorted_thresholds[next] < reachable {
            let threshold = sorted_thresholds[next];
            t += (threshold - pressure) / (beta * infectious as f64);
            pressure = threshold;
            infectious += 1;
            let who = order[next] + 1;
            removal_times[who] = t + g[who];
            pending.push(Reverse(OrdF64(removal_times[who])));
            next += 1;
        } else {
            pending.pop();
            pressure = reachable;
            t = removal;
            infectious -= 1;
        }
        debug_assert!(t >= t_prev && pressure >= p_prev, "time and pressure must not decrease");
    }
    SimulatedEpidemic { removal_times, sorted_thresholds, total_pressure: pressure }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GillespieOutcome {
    pub final_size: usize,
    /// Removal times in order of occurrence.
    pub removal_times: Vec<f64>,
}

/// Event-by-event simulation of the Markov SIR with infection rate
/// `λ S I / n` and removal rate `γ I`, starting from one infective.
pub fn gillespie_simulate<R: Rng + ?Sized>(n: usize, lambda: f64, gamma: f64, rng: &mut R) -> GillespieOutcome {
    let (mut s, mut i) = (n - 1, 1usize);
    let mut t = 0.0;
    let mut removal_times = Vec::new();
    while i > 0 {
        let infect = lambda * s as f64 * i as f64 / n as f64;
        let remove = gamma * i as f64;
        let total = infect + remove;
        t += Exp::new(total).expect("positive total rate").sample(rng);
        if rng.random::<f64>() * total < infect {
            s -= 1;
            i += 1;
        } else {
            i -= 1;
            removal_times.push(t);
        }
    }
    GillespieOutcome { final_size: removal_times.len(), removal_times }
}

/// Greatest multiple of 5 not exceeding `s`.
pub fn bin_floor5(s: f64) -> f64 {
    5.0 * (s / 5.0).floor()
}

/// Distance between simulated and observed removals: Euclidean on the
/// matched times since first removal plus a penalty of `k` and a pressure
/// term for every removal present in only one of the two.
pub fn sir_distance(sim: &SimulatedEpidemic, obs: &RemovalData, k_penalty: f64, binned: bool) -> f64 {
    let s = sim.since_first();
    let (nu, nu_obs) = (s.len(), obs.removed());
    let f = |v: f64| if binned { bin_floor5(v) } else { v };
    let matched: f64 = s.iter().zip(&obs.since_first).map(|(a, b)| (f(*b) - f(*a)).powi(2)).sum::<f64>().sqrt();
    let extra: f64 = (nu_obs + 1..=nu).map(|i| k_penalty + sim.total_pressure - sim.rho(i)).sum();
    let missing: f64 = (nu + 1..=nu_obs).map(|i| k_penalty + sim.rho(i)).sum();
    matched + extra + missing
}

/// `R₀` at θ, or `None` where it is undefined (Weibull pressure).
pub fn r0(variant: EpidemicVariant, theta: &[f64]) -> Option<f64> {
    match variant {
        EpidemicVariant::Markov | EpidemicVariant::BinnedMarkov => Some(theta[0] / theta[1]),
        EpidemicVariant::GammaInfectious => Some(theta[0] * theta[2] / theta[1]),
        EpidemicVariant::WeibullPressure => None,
    }
}

/// Mean infectious period at θ.
pub fn infectious_period_mean(variant: EpidemicVariant, theta: &[f64]) -> f64 {
    match variant {
        EpidemicVariant::GammaInfectious => theta[2] / theta[1],
        _ => 1.0 / theta[1],
    }
}

/// SIR model for removal data. The latent vector holds the `n`
/// infectious-period quantiles followed by the `n − 1` threshold quantiles
/// of individuals `2..n`.
#[derive(Debug, Clone)]
pub struct EpidemicModel {
    variant: EpidemicVariant,
    data: RemovalData,
    k_penalty: f64,
    prior_rate: f64,
}

impl EpidemicModel {
    pub fn new(variant: EpidemicVariant, data: RemovalData, k_penalty: f64) -> Result<Self> {
        if !(k_penalty >= 0.0 && k_penalty.is_finite()) {
            return Err(Error::InvalidConfig(format!("penalty k = {k_penalty} must be nonnegative")));
        }
        Ok(Self { variant, data, k_penalty, prior_rate: DEFAULT_PRIOR_RATE })
    }

    /// Rate of the independent exponential priors on every parameter.
    pub fn with_prior_rate(mut self, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("prior rate {rate} must be positive")));
        }
        self.prior_rate = rate;
        Ok(self)
    }

    pub fn variant(&self) -> EpidemicVariant {
        self.variant
    }

    pub fn data(&self) -> &RemovalData {
        &self.data
    }

    pub fn population(&self) -> usize {
        self.data.population
    }

    /// Runs the simulator at `(θ, x)`.
    pub fn simulate(&self, theta: &[f64], x: &[f64]) -> Result<SimulatedEpidemic> {
        let n = self.population();
        let (inf, press) = self.variant.distributions(theta)?;
        let g: Vec<f64> = x[..n].iter().map(|&u| inf.quantile(u)).collect();
        let p: Vec<f64> = x[n..].iter().map(|&u| press.quantile(u)).collect();
        Ok(sellke_simulate(theta[0] / n as f64, &g, &p))
    }
}

impl Model for EpidemicModel {
    fn param_dim(&self) -> usize {
        self.variant.param_dim()
    }

    fn latent_dim(&self) -> usize {
        2 * self.population() - 1
    }

    fn prior_log_density(&self, theta: &[f64]) -> f64 {
        if theta.iter().all(|&v| v > 0.0 && v.is_finite()) {
            theta.iter().map(|&v| self.prior_rate.ln() - self.prior_rate * v).sum()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn prior_sample(&self, rng: &mut dyn RngCore) -> ParamVector {
        let exp = Exp::new(self.prior_rate).expect("validated rate");
        (0..self.param_dim()).map(|_| exp.sample(rng)).collect()
    }

    fn phi(&self, theta: &[f64], x: &[f64]) -> f64 {
        match self.simulate(theta, x) {
            Ok(sim) => sir_distance(&sim, &self.data, self.k_penalty, self.variant.binned()),
            Err(_) => f64::INFINITY,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::chi_square_two_sample;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn sellke_hand_traces() {
        let sim = sellke_simulate(1.0, &[2.0, 3.0], &[1.0]);
        assert_eq!(sim.removal_times, vec![2.0, 4.0]);
        assert_abs_diff_eq!(sim.total_pressure, 5.0);

        let sim = sellke_simulate(1.0, &[2.0, 3.0], &[5.0]);
        assert_eq!(sim.removal_times, vec![2.0, f64::INFINITY]);
        assert_abs_diff_eq!(sim.total_pressure, 2.0);

        let sim = sellke_simulate(0.0, &[1.5, 1.0, 1.0], &[0.0, 0.3]);
        assert_eq!(sim.removal_times, vec![1.5, f64::INFINITY, f64::INFINITY]);
    }

    #[test]
    fn sellke_three_individuals_by_hand() {
        // β = 0.5. Individual 1 alone until pressure 0.5 at t = 1; then two
        // infectives push pressure to 1.2 at t = 1.7.
        let sim = sellke_simulate(0.5, &[4.0, 2.0, 1.0], &[0.5, 1.2]);
        assert_abs_diff_eq!(sim.removal_times[0], 4.0);
        assert_abs_diff_eq!(sim.removal_times[1], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sim.removal_times[2], 2.7, epsilon = 1e-12);
        assert_abs_diff_eq!(sim.total_pressure, 0.5 * 7.0, epsilon = 1e-12);
    }

    #[test]
    fn removal_data_parsing() {
        let d = RemovalData::parse("# header\n10\n2\n0\n3.5\n").unwrap();
        assert_eq!(d.population, 10);
        assert_eq!(d.since_first, vec![0.0, 2.0, 2.0, 5.5]);
        assert!(matches!(RemovalData::parse("10\nx\n"), Err(Error::Parse { line: 2, .. })));
        assert!(RemovalData::parse("2\n1\n1\n").is_err());
        assert!(RemovalData::parse("").is_err());
    }

    #[test]
    fn bin_floor5_examples() {
        assert_eq!(bin_floor5(0.0), 0.0);
        assert_eq!(bin_floor5(4.99), 0.0);
        assert_eq!(bin_floor5(12.3), 10.0);
        assert_eq!(bin_floor5(15.0), 15.0);
    }

    #[test]
    fn r0_examples() {
        assert_eq!(r0(EpidemicVariant::Markov, &[2.0, 2.0]), Some(1.0));
        assert_eq!(r0(EpidemicVariant::GammaInfectious, &[1.0, 2.0, 3.0]), Some(1.5));
        assert_eq!(r0(EpidemicVariant::WeibullPressure, &[1.0, 2.0, 3.0]), None);
    }

    fn epidemic(removal_times: Vec<f64>, thresholds: Vec<f64>, total: f64) -> SimulatedEpidemic {
        SimulatedEpidemic { removal_times, sorted_thresholds: thresholds, total_pressure: total }
    }

    #[test]
    fn distance_examples() {
        let obs = RemovalData::new(4, vec![0.0, 1.0, 3.0]).unwrap();
        let same = epidemic(vec![2.0, 3.0, 5.0, f64::INFINITY], vec![0.1, 0.4, 0.9], 0.8);
        assert_eq!(sir_distance(&same, &obs, 1000.0, false), 0.0);

        // One extra removal: matched part (0, 1, 4) vs (0, 1, 3) is 1.
        let extra = epidemic(vec![2.0, 3.0, 6.0, 7.0], vec![0.1, 0.4, 0.9], 1.5);
        let d0 = 1.0;
        assert_abs_diff_eq!(sir_distance(&extra, &obs, 1000.0, false), d0 + 1000.0 + 1.5 - 0.9, epsilon = 1e-12);

        // One missing removal: matched part (0, 2) vs (0, 1) is 1.
        let missing = epidemic(vec![2.0, 4.0, f64::INFINITY, f64::INFINITY], vec![0.1, 0.4, 0.9], 0.5);
        assert_abs_diff_eq!(sir_distance(&missing, &obs, 1000.0, false), 1.0 + 1000.0 + 0.4, epsilon = 1e-12);
    }

    #[test]
    fn binned_distance_floors_both_sides() {
        let obs = RemovalData::new(3, vec![0.0, 6.0]).unwrap();
        let sim = epidemic(vec![1.0, 9.5, f64::INFINITY], vec![0.2, 0.7], 0.5);
        // Raw: 8.5 vs 6. Binned: 5 vs 5.
        assert_abs_diff_eq!(sir_distance(&sim, &obs, 1000.0, false), 2.5);
        assert_eq!(sir_distance(&sim, &obs, 1000.0, true), 0.0);
    }

    #[test]
    fn total_pressure_matches_removed_periods() {
        let mut rng = stream(1, &[]);
        for _ in 0..500 {
            let n = rng.random_range(2..40);
            let beta = rng.random_range(0.0..0.3);
            let g: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
            let p: Vec<f64> = (1..n).map(|_| rng.random_range(0.0..3.0)).collect();
            let sim = sellke_simulate(beta, &g, &p);
            let removed: f64 = (0..n).filter(|&i| sim.removal_times[i].is_finite()).map(|i| g[i]).sum();
            assert_abs_diff_eq!(sim.total_pressure, beta * removed, epsilon = 1e-9 * (1.0 + beta * removed));
            // Every threshold below the total pressure belongs to an infected individual.
            let crossed = sim.sorted_thresholds.iter().filter(|&&t| t < sim.total_pressure).count();
            assert_eq!(crossed + 1, sim.final_size());
        }
    }

    #[test]
    fn sellke_matches_gillespie_final_size() {
        let (n, lambda, gamma) = (10, 2.0, 1.0);
        let reps = 10_000;
        let mut sellke = vec![0u64; n + 1];
        let mut gillespie = vec![0u64; n + 1];
        let inf = Exp::new(gamma).unwrap();
        let press = Exp::new(1.0).unwrap();
        let mut rng = stream(2, &[]);
        for _ in 0..reps {
            let g: Vec<f64> = (0..n).map(|_| inf.sample(&mut rng)).collect();
            let p: Vec<f64> = (1..n).map(|_| press.sample(&mut rng)).collect();
            sellke[sellke_simulate(lambda / n as f64, &g, &p).final_size()] += 1;
            gillespie[gillespie_simulate(n, lambda, gamma, &mut rng).final_size] += 1;
        }
        let r = chi_square_two_sample(&sellke[1..], &gillespie[1..], 5.0);
        assert!(r.p_value > 0.01, "{r:?}\n{sellke:?}\n{gillespie:?}");
    }

    #[test]
    fn gillespie_limits() {
        let mut rng = stream(3, &[]);
        for _ in 0..100 {
            assert_eq!(gillespie_simulate(20, 0.0, 1.0, &mut rng).final_size, 1);
        }
        let big = (0..1000).filter(|_| gillespie_simulate(20, 1.0, 1e9, &mut rng).final_size == 1).count();
        assert_eq!(big, 1000);
    }

    fn small_model(variant: EpidemicVariant) -> EpidemicModel {
        let data = RemovalData::from_intervals(12, &[3.0, 1.0, 4.0, 0.0, 2.0]).unwrap();
        EpidemicModel::new(variant, data, DEFAULT_K_PENALTY).unwrap()
    }

    #[test]
    fn model_dimensions_and_prior() {
        let m = small_model(EpidemicVariant::GammaInfectious);
        assert_eq!(m.param_dim(), 3);
        assert_eq!(m.latent_dim(), 23);
        assert_abs_diff_eq!(m.prior_log_density(&[1.0, 1.0, 1.0]), 3.0 * (0.1f64.ln() - 0.1), epsilon = 1e-12);
        assert_eq!(m.prior_log_density(&[1.0, -1.0, 1.0]), f64::NEG_INFINITY);
        assert_eq!(small_model(EpidemicVariant::Markov).param_dim(), 2);
        assert_eq!("weibull-pressure".parse::<EpidemicVariant>().unwrap(), EpidemicVariant::WeibullPressure);
        assert!("sir".parse::<EpidemicVariant>().is_err());
    }

    #[test]
    fn distance_is_locally_continuous_in_latents() {
        let mut rng = stream(4, &[]);
        for variant in [EpidemicVariant::Markov, EpidemicVariant::GammaInfectious, EpidemicVariant::WeibullPressure] {
            let m = small_model(variant);
            let theta: Vec<f64> = match variant.param_dim() {
                2 => vec![1.5, 0.4],
                _ => vec![1.5, 0.8, 2.0],
            };
            let mut probes = 0;
            while probes < 10 {
                let x: Vec<f64> = (0..m.latent_dim()).map(|_| rng.random_range(0.05..0.95)).collect();
                let j = rng.random_range(0..m.latent_dim());
                let base = m.simulate(&theta, &x).unwrap();
                let d0 = m.phi(&theta, &x);
                let mut slopes = Vec::new();
                let mut constant_size = true;
                for delta in [1e-5, 1e-6] {
                    let mut y = x.clone();
                    y[j] += delta;
                    constant_size &= m.simulate(&theta, &y).unwrap().final_size() == base.final_size();
                    slopes.push((m.phi(&theta, &y) - d0).abs() / delta);
                }
                if !constant_size {
                    continue;
                }
                // Difference quotients of a Lipschitz map stay put as δ shrinks;
                // a jump would multiply them by ten.
                assert!(slopes[1] <= 2.0 * slopes[0] + 1e-3, "{variant} slopes {slopes:?}");
                probes += 1;
            }
        }
    }

    proptest! {
        #[test]
        fn sellke_is_well_formed(
            beta in 0.0f64..2.0,
            g in prop::collection::vec(0.0f64..10.0, 2..30),
            seed in any::<u64>(),
        ) {
            let mut rng = stream(seed, &[]);
            let p: Vec<f64> = (1..g.len()).map(|_| rng.random_range(0.0..4.0)).collect();
            let sim = sellke_simulate(beta, &g, &p);
            prop_assert_eq!(sim.removal_times[0], g[0]);
            prop_assert!(sim.final_size() >= 1);
            for (i, r) in sim.removal_times.iter().enumerate() {
                if r.is_finite() {
                    prop_assert!(*r >= g[i] - 1e-12);
                }
            }
        }
    }
}
