//! Rare-event SMC estimators of `Pr(Φ(x) ≤ ε | θ)` for uniform latents.
//!
//! Both estimators push a particle population through a decreasing sequence
//! of thresholds. At each stage the fraction of particles inside the current
//! threshold is recorded, survivors are multinomially resampled, and each
//! resampled particle is moved by slice sampling restricted to the current
//! threshold. The product of the stage fractions estimates the probability.
//!
//! [`fixed_re_smc`] takes the thresholds as input and is unbiased.
//! [`adapt_re_smc`] chooses each threshold as the `N_acc`-th smallest
//! distance (floored at the target), which has `O(1/N)` bias but needs no
//! schedule.
//!
//! The running product is an upper bound on the final estimate, so a caller
//! that only needs to know whether the estimate clears some bound can pass it
//! in and the run stops as soon as the answer is known.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{within, LikelihoodEstimate, Model};
use crate::rng::{stream, tag};
use crate::slice::{adapt_width, slice_update, SliceConfig, DEFAULT_MAX_ITERATIONS};

pub const DEFAULT_MAX_STAGES: usize = 10_000;

/// A strictly decreasing sequence of thresholds ending at the target.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSchedule(Vec<f64>);

impl ThresholdSchedule {
    pub fn new(epsilons: Vec<f64>) -> Result<Self> {
        if epsilons.is_empty() {
            return Err(Error::InvalidSchedule("empty schedule".into()));
        }
        if let Some(bad) = epsilons.iter().find(|e| e.is_nan() || **e < 0.0) {
            return Err(Error::InvalidSchedule(format!("threshold {bad} is not a nonnegative number")));
        }
        if let Some(w) = epsilons.windows(2).find(|w| w[1] >= w[0]) {
            return Err(Error::InvalidSchedule(format!("thresholds must strictly decrease ({} then {})", w[0], w[1])));
        }
        Ok(Self(epsilons))
    }

    /// Builds a schedule from a nonincreasing sequence, dropping repeats.
    pub fn deduplicated(epsilons: &[f64]) -> Result<Self> {
        let mut out: Vec<f64> = Vec::with_capacity(epsilons.len());
        for &e in epsilons {
            if out.last() != Some(&e) {
                out.push(e);
            }
        }
        Self::new(out)
    }

    pub fn target(&self) -> f64 {
        *self.0.last().expect("schedule is nonempty")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Parses one threshold per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut eps = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let value = line
                .parse::<f64>()
                .map_err(|e| Error::Parse { line: i + 1, message: format!("invalid threshold {line:?}: {e}") })?;
            eps.push(value);
        }
        Self::new(eps)
    }

    pub fn to_text(&self) -> String {
        self.0.iter().map(|e| format!("{e:.16e}\n")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmcConfig {
    /// Number of particles `N`.
    pub particles: usize,
    /// Particles kept per adaptive stage, `N_acc`. Ignored by the fixed
    /// estimator.
    pub n_accept: usize,
    /// Target threshold `ε`.
    pub epsilon: f64,
    /// Slice updates applied to each resampled particle.
    pub slice_repeats: usize,
    /// Shrink the slice search width between stages; otherwise `w = 1`.
    pub adaptive_width: bool,
    pub max_slice_iterations: usize,
    pub max_stages: usize,
}

impl SmcConfig {
    /// Defaults with `N_acc = N / 2`.
    pub fn new(particles: usize, epsilon: f64) -> Self {
        Self {
            particles,
            n_accept: (particles / 2).max(1),
            epsilon,
            slice_repeats: 1,
            adaptive_width: true,
            max_slice_iterations: DEFAULT_MAX_ITERATIONS,
            max_stages: DEFAULT_MAX_STAGES,
        }
    }

    pub fn with_n_accept(mut self, n_accept: usize) -> Self {
        self.n_accept = n_accept;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 particles, got {}", self.particles)));
        }
        if self.n_accept == 0 || self.n_accept > self.particles {
            return Err(Error::InvalidConfig(format!(
                "n_accept must lie in 1..={}, got {}",
                self.particles, self.n_accept
            )));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::InvalidConfig(format!("epsilon must be nonnegative, got {}", self.epsilon)));
        }
        if self.slice_repeats == 0 || self.max_slice_iterations == 0 || self.max_stages == 0 {
            return Err(Error::InvalidConfig("slice repeats and iteration caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmcResult {
    /// `∏ P̂_t`. After early termination this is the partial product, which
    /// bounds the unfinished estimate from above.
    pub estimate: LikelihoodEstimate,
    /// `P̂_t = |I_t| / N` for each completed stage.
    pub stage_fractions: Vec<f64>,
    pub epsilons_used: Vec<f64>,
    pub stages_completed: usize,
    pub terminated_early: bool,
    /// The final stage used the target threshold.
    pub reached_target: bool,
    pub wall_time: f64,
    pub simulator_calls: u64,
    /// Mean Φ evaluations per slice update, one entry per move step.
    pub mean_slice_iterations: Vec<f64>,
    /// Slice search width used at each move step.
    pub widths: Vec<f64>,
}

impl SmcResult {
    /// Log running products `log ∏_{τ≤t} P̂_τ`.
    pub fn log_partial_products(&self) -> Vec<f64> {
        self.stage_fractions
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p.ln();
                Some(*acc)
            })
            .collect()
    }
}

/// `N` IID uniform draws from `accepted`.
pub fn resample_indices<R: Rng + ?Sized>(accepted: &[usize], n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if accepted.is_empty() {
        return Err(Error::EmptyAcceptedSet);
    }
    Ok((0..n).map(|_| accepted[rng.random_range(0..accepted.len())]).collect())
}

/// Threshold schedule from a completed adaptive run, with repeats removed.
pub fn schedule_from_pilot(result: &SmcResult) -> Result<ThresholdSchedule> {
    if result.terminated_early || !result.reached_target {
        return Err(Error::InvalidSchedule("pilot run did not reach its target threshold".into()));
    }
    ThresholdSchedule::deduplicated(&result.epsilons_used)
}

struct Population {
    dim: usize,
    points: Vec<f64>,
    phis: Vec<f64>,
}

impl Population {
    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    fn len(&self) -> usize {
        self.phis.len()
    }

    fn accepted(&self, eps: f64) -> Vec<usize> {
        (0..self.len()).filter(|&i| within(self.phis[i], eps)).collect()
    }
}

/// Bookkeeping shared by both estimators.
struct Run<'a> {
    model: &'a dyn Model,
    theta: &'a [f64],
    cfg: &'a SmcConfig,
    seed: u64,
    started: Instant,
    population: Population,
    width: f64,
    log_product: f64,
    out: SmcResult,
}

enum StageOutcome {
    Continue,
    Zero,
    BelowBound,
}

impl<'a> Run<'a> {
    fn start(model: &'a dyn Model, theta: &'a [f64], cfg: &'a SmcConfig, seed: u64) -> Self {
        let started = Instant::now();
        let dim = model.latent_dim();
        let n = cfg.particles;
        let points: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut rng = stream(seed, &[tag::INIT, i as u64]);
                (0..dim).map(move |_| rng.random::<f64>()).collect::<Vec<_>>()
            })
            .collect();
        let phis: Vec<f64> =
            (0..n).into_par_iter().map(|i| model.phi(theta, &points[i * dim..(i + 1) * dim])).collect();
        Self {
            model,
            theta,
            cfg,
            seed,
            started,
            population: Population { dim, points, phis },
            width: 1.0,
            log_product: 0.0,
            out: SmcResult {
                estimate: LikelihoodEstimate::ZERO,
                stage_fractions: Vec::new(),
                epsilons_used: Vec::new(),
                stages_completed: 0,
                terminated_early: false,
                reached_target: false,
                wall_time: 0.0,
                simulator_calls: n as u64,
                mean_slice_iterations: Vec::new(),
                widths: Vec::new(),
            },
        }
    }

    /// Records stage `eps` and its survivors.
    fn record_stage(&mut self, eps: f64, accepted: usize, log_bound: Option<f64>) -> StageOutcome {
        let fraction = accepted as f64 / self.cfg.particles as f64;
        self.out.stage_fractions.push(fraction);
        self.out.epsilons_used.push(eps);
        self.out.stages_completed += 1;
        if accepted == 0 {
            self.log_product = f64::NEG_INFINITY;
            return StageOutcome::Zero;
        }
        self.log_product += fraction.ln();
        match log_bound {
            Some(bound) if self.log_product < bound => StageOutcome::BelowBound,
            _ => StageOutcome::Continue,
        }
    }

    /// Resamples from `accepted` and slice-moves every particle within `eps`.
    fn resample_and_move(&mut self, accepted: &[usize], eps: f64) -> Result<()> {
        let stage = self.out.stages_completed as u64;
        let n = self.cfg.particles;
        let mut rng = stream(self.seed, &[tag::RESAMPLE, stage]);
        let parents = resample_indices(accepted, n, &mut rng)?;

        let slice_cfg = SliceConfig { width: self.width, max_iterations: self.cfg.max_slice_iterations };
        let (model, theta, seed, repeats) = (self.model, self.theta, self.seed, self.cfg.slice_repeats);
        let population = &self.population;
        let moved: Vec<(Vec<f64>, f64, f64, usize)> = parents
            .par_iter()
            .enumerate()
            .map(|(i, &parent)| {
                let mut rng = stream(seed, &[tag::MOVE, stage, i as u64]);
                let mut x = population.point(parent).to_vec();
                let mut phi_x = population.phis[parent];
                let mut max_z: f64 = 0.0;
                let mut iterations = 0;
                for _ in 0..repeats {
                    let out = slice_update(&x, phi_x, |p| model.phi(theta, p), eps, &slice_cfg, &mut rng)?;
                    max_z = max_z.max(out.final_abs_z);
                    iterations += out.iterations;
                    x = out.point;
                    phi_x = out.phi;
                }
                Ok((x, phi_x, max_z, iterations))
            })
            .collect::<Result<_>>()?;

        let dim = self.population.dim;
        let mut points = Vec::with_capacity(n * dim);
        let mut phis = Vec::with_capacity(n);
        let mut max_z: f64 = 0.0;
        let mut calls = 0usize;
        for (x, phi_x, z, it) in moved {
            points.extend_from_slice(&x);
            phis.push(phi_x);
            max_z = max_z.max(z);
            calls += it;
        }
        self.population = Population { dim, points, phis };
        self.out.simulator_calls += calls as u64;
        self.out.widths.push(self.width);
        self.out.mean_slice_iterations.push(calls as f64 / (n * repeats) as f64);
        if self.cfg.adaptive_width {
            self.width = adapt_width(max_z);
        }
        Ok(())
    }

    fn finish(mut self, terminated_early: bool, reached_target: bool) -> SmcResult {
        self.out.estimate = LikelihoodEstimate::from_log(self.log_product);
        self.out.terminated_early = terminated_early;
        self.out.reached_target = reached_target;
        self.out.wall_time = self.started.elapsed().as_secs_f64();
        self.out
    }
}

/// Rare-event SMC with a prescribed threshold schedule.
///
/// `log_bound`, when given, stops the run as soon as the log running product
/// falls below it; the result is then flagged `terminated_early`.
pub fn fixed_re_smc(
    model: &dyn Model,
    theta: &[f64],
    schedule: &ThresholdSchedule,
    cfg: &SmcConfig,
    log_bound: Option<f64>,
    seed: u64,
) -> Result<SmcResult> {
    cfg.validate()?;
    let mut run = Run::start(model, theta, cfg, seed);
    let last = schedule.len() - 1;
    for (t, &eps) in schedule.as_slice().iter().enumerate() {
        let accepted = run.population.accepted(eps);
        match run.record_stage(eps, accepted.len(), log_bound) {
            StageOutcome::Zero => return Ok(run.finish(false, t == last)),
            StageOutcome::BelowBound => return Ok(run.finish(true, t == last)),
            StageOutcome::Continue => {}
        }
        // The particles are not needed after the last stage.
        if t < last {
            run.resample_and_move(&accepted, eps)?;
        }
    }
    Ok(run.finish(false, true))
}

/// Rare-event SMC with thresholds chosen on the fly.
pub fn adapt_re_smc(
    model: &dyn Model,
    theta: &[f64],
    cfg: &SmcConfig,
    log_bound: Option<f64>,
    seed: u64,
) -> Result<SmcResult> {
    let (result, stop) = run_adaptive(model, theta, cfg, log_bound, seed, None)?;
    match stop {
        AdaptiveStop::StageLimit => Err(Error::StageLimit(cfg.max_stages)),
        _ => Ok(result),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum AdaptiveStop {
    Target,
    Zero,
    BelowBound,
    Deadline,
    StageLimit,
}

pub(crate) fn run_adaptive(
    model: &dyn Model,
    theta: &[f64],
    cfg: &SmcConfig,
    log_bound: Option<f64>,
    seed: u64,
    deadline: Option<Instant>,
) -> Result<(SmcResult, AdaptiveStop)> {
    cfg.validate()?;
    let mut run = Run::start(model, theta, cfg, seed);
    let mut scratch = vec![0.0; cfg.particles];
    loop {
        scratch.copy_from_slice(&run.population.phis);
        let k = cfg.n_accept - 1;
        let (_, kth, _) = scratch.select_nth_unstable_by(k, f64::total_cmp);
        let eps = kth.max(cfg.epsilon);
        let accepted = run.population.accepted(eps);
        let at_target = eps == cfg.epsilon;
        match run.record_stage(eps, accepted.len(), log_bound) {
            StageOutcome::Zero => return Ok((run.finish(false, at_target), AdaptiveStop::Zero)),
            StageOutcome::BelowBound => return Ok((run.finish(true, at_target), AdaptiveStop::BelowBound)),
            StageOutcome::Continue => {}
        }
        if at_target {
            return Ok((run.finish(false, true), AdaptiveStop::Target));
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok((run.finish(false, false), AdaptiveStop::Deadline));
        }
        if run.out.stages_completed >= cfg.max_stages {
            return Ok((run.finish(false, false), AdaptiveStop::StageLimit));
        }
        run.resample_and_move(&accepted, eps)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FnLatentModel;
    use crate::stats::{chi_square_gof, mean, std_error};

    fn uniform_toy() -> FnLatentModel<impl Fn(&[f64]) -> f64 + Send + Sync> {
        FnLatentModel::new(1, |x: &[f64]| x[0])
    }

    #[test]
    fn schedule_validation() {
        assert!(ThresholdSchedule::new(vec![]).is_err());
        assert!(ThresholdSchedule::new(vec![0.5, 0.5]).is_err());
        assert!(ThresholdSchedule::new(vec![0.5, 0.7]).is_err());
        assert!(ThresholdSchedule::new(vec![0.5, f64::NAN]).is_err());
        assert!(ThresholdSchedule::new(vec![f64::INFINITY, 0.5, 0.0]).is_ok());
    }

    #[test]
    fn schedule_text_round_trip() {
        let s = ThresholdSchedule::new(vec![12.5, 3.0, 0.1]).unwrap();
        assert_eq!(ThresholdSchedule::parse(&s.to_text()).unwrap(), s);
        let err = ThresholdSchedule::parse("# thresholds\n1.0\nabc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn deduplication() {
        let s = ThresholdSchedule::deduplicated(&[0.9, 0.5, 0.5, 0.2]).unwrap();
        assert_eq!(s.as_slice(), &[0.9, 0.5, 0.2]);
        let s = ThresholdSchedule::deduplicated(&[0.9]).unwrap();
        assert_eq!(s.as_slice(), &[0.9]);
    }

    #[test]
    fn resample_singleton() {
        let mut rng = stream(1, &[]);
        assert_eq!(resample_indices(&[3], 5, &mut rng).unwrap(), vec![3; 5]);
        assert!(matches!(resample_indices(&[], 5, &mut rng), Err(Error::EmptyAcceptedSet)));
    }

    #[test]
    fn resample_pair_is_balanced() {
        let mut rng = stream(2, &[]);
        let n = 100_000;
        let draws = resample_indices(&[1, 2], n, &mut rng).unwrap();
        let ones = draws.iter().filter(|&&i| i == 1).count() as f64;
        let tolerance = 4.0 * (n as f64 * 0.25).sqrt();
        assert!((ones - n as f64 / 2.0).abs() < tolerance);
    }

    #[test]
    fn resample_full_set_is_multinomial() {
        let mut rng = stream(3, &[]);
        let accepted: Vec<usize> = (0..50).collect();
        let mut counts = vec![0u64; 50];
        for _ in 0..400 {
            for i in resample_indices(&accepted, 50, &mut rng).unwrap() {
                counts[i] += 1;
            }
        }
        assert!(chi_square_gof(&counts, &[1.0 / 50.0; 50]).p_value > 0.01);
    }

    #[test]
    fn impossible_threshold_gives_zero() {
        let model = FnLatentModel::new(2, |_: &[f64]| 1.0);
        let schedule = ThresholdSchedule::new(vec![0.5]).unwrap();
        let r = fixed_re_smc(&model, &[], &schedule, &SmcConfig::new(64, 0.5), None, 1).unwrap();
        assert!(r.estimate.is_zero());
        assert_eq!(r.stages_completed, 1);
    }

    #[test]
    fn trivially_satisfied_thresholds_give_one() {
        let model = FnLatentModel::new(3, |_: &[f64]| 0.0);
        let schedule = ThresholdSchedule::new(vec![0.5, 0.25, 0.1]).unwrap();
        let r = fixed_re_smc(&model, &[], &schedule, &SmcConfig::new(100, 0.1), None, 2).unwrap();
        assert_eq!(r.estimate.value(), 1.0);
        assert_eq!(r.stage_fractions, vec![1.0; 3]);
        assert_eq!(r.stages_completed, 3);
    }

    #[test]
    fn bound_stops_after_first_stage() {
        // Φ(x) = x₁ with 10 particles placed so exactly 2 are below 0.5.
        let model = FnLatentModel::new(1, |x: &[f64]| x[0]);
        let schedule = ThresholdSchedule::new(vec![0.5, 0.1]).unwrap();
        let cfg = SmcConfig::new(500, 0.1);
        let r = fixed_re_smc(&model, &[], &schedule, &cfg, Some(0.3f64.ln()), 3).unwrap();
        // P̂₁ ≈ 0.5 > 0.3, so the bound can only trigger at stage 2.
        assert!(r.stage_fractions[0] > 0.3);
        assert!(r.terminated_early);
        assert_eq!(r.stages_completed, 2);

        let low = FnLatentModel::new(1, |x: &[f64]| if x[0] < 0.2 { 0.0 } else { 1.0 });
        let schedule = ThresholdSchedule::new(vec![0.5, 0.1]).unwrap();
        let r = fixed_re_smc(&low, &[], &schedule, &SmcConfig::new(1000, 0.1), Some(0.3f64.ln()), 4).unwrap();
        assert!(r.stage_fractions[0] < 0.3);
        assert!(r.terminated_early);
        assert_eq!(r.stages_completed, 1);
    }

    #[test]
    fn fixed_estimate_is_unbiased_on_uniform_toy() {
        let model = uniform_toy();
        let schedule = ThresholdSchedule::new(vec![0.5, 0.25]).unwrap();
        let cfg = SmcConfig::new(1000, 0.25);
        let estimates: Vec<f64> =
            (0..500).map(|r| fixed_re_smc(&model, &[], &schedule, &cfg, None, r).unwrap().estimate.value()).collect();
        let (m, se) = (mean(&estimates), std_error(&estimates));
        assert!((m - 0.25).abs() < 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn adaptive_estimate_on_uniform_toy() {
        let model = uniform_toy();
        let cfg = SmcConfig::new(1000, 0.25).with_n_accept(500);
        let estimates: Vec<f64> =
            (0..500).map(|r| adapt_re_smc(&model, &[], &cfg, None, r).unwrap().estimate.value()).collect();
        let (m, se) = (mean(&estimates), std_error(&estimates));
        // The adaptive estimator carries an O(1/N) bias; allow 1% at N = 1000.
        assert!((m - 0.25).abs() < 3.0 * se + 0.0025, "mean {m} se {se}");
    }

    #[test]
    fn adaptive_first_stage_by_hand() {
        // Four particles whose distances are exactly {0.1, 0.2, 0.3, 0.4}.
        let model = FnLatentModel::new(1, |x: &[f64]| ((x[0] * 4.0).floor() + 1.0) / 10.0);
        let seed = (0..)
            .find(|&s| {
                let mut d: Vec<f64> = (0..4)
                    .map(|i| {
                        let mut rng = stream(s, &[tag::INIT, i]);
                        model.phi(&[], &[rng.random::<f64>()])
                    })
                    .collect();
                d.sort_by(f64::total_cmp);
                d == [0.1, 0.2, 0.3, 0.4]
            })
            .unwrap();
        let cfg = SmcConfig::new(4, 0.15).with_n_accept(2);
        let r = adapt_re_smc(&model, &[], &cfg, None, seed).unwrap();
        assert_eq!(r.epsilons_used[0], 0.2);
        assert_eq!(r.stage_fractions[0], 0.5);
        assert!(r.stages_completed > 1);
    }

    #[test]
    fn adaptive_single_stage_when_target_is_loose() {
        let model = uniform_toy();
        let r = adapt_re_smc(&model, &[], &SmcConfig::new(50, 2.0), None, 9).unwrap();
        assert_eq!(r.stages_completed, 1);
        assert_eq!(r.epsilons_used, vec![2.0]);
        assert_eq!(r.estimate.value(), 1.0);
    }

    #[test]
    fn adaptive_stage_floor_and_monotone_products() {
        let model = FnLatentModel::new(2, |x: &[f64]| (x[0] - 0.5).abs().max((x[1] - 0.5).abs()));
        let cfg = SmcConfig::new(200, 0.01).with_n_accept(60);
        for seed in 0..20 {
            let r = adapt_re_smc(&model, &[], &cfg, None, seed).unwrap();
            assert!(r.stage_fractions.iter().all(|&p| p >= 60.0 / 200.0));
            let logs = r.log_partial_products();
            assert!(logs.windows(2).all(|w| w[1] <= w[0]));
            assert!(r.estimate.log_value <= logs[0]);
            assert!(r.epsilons_used.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn pilot_schedule_is_strictly_decreasing() {
        let model = uniform_toy();
        let r = adapt_re_smc(&model, &[], &SmcConfig::new(200, 0.1), None, 5).unwrap();
        let s = schedule_from_pilot(&r).unwrap();
        assert!(s.as_slice().windows(2).all(|w| w[1] < w[0]));
        assert_eq!(s.target(), 0.1);
    }

    #[test]
    fn pilot_schedule_rejects_early_termination() {
        let model = uniform_toy();
        let r = adapt_re_smc(&model, &[], &SmcConfig::new(200, 1e-6), Some(-1.0), 5).unwrap();
        assert!(r.terminated_early);
        assert!(schedule_from_pilot(&r).is_err());
    }

    #[test]
    fn single_stage_is_plain_monte_carlo() {
        let model = FnLatentModel::new(2, |x: &[f64]| x[0] * x[1]);
        let schedule = ThresholdSchedule::new(vec![0.1]).unwrap();
        let n = 300;
        let r = fixed_re_smc(&model, &[], &schedule, &SmcConfig::new(n, 0.1), None, 77).unwrap();
        let hits = (0..n)
            .filter(|&i| {
                let mut rng = stream(77, &[tag::INIT, i as u64]);
                let x: Vec<f64> = (0..2).map(|_| rng.random()).collect();
                x[0] * x[1] <= 0.1
            })
            .count();
        assert!((r.estimate.value() - hits as f64 / n as f64).abs() < 1e-15);
        assert_eq!(r.simulator_calls, n as u64);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let model = FnLatentModel::new(3, |x: &[f64]| x.iter().map(|v| (v - 0.3).abs()).sum());
        let schedule = ThresholdSchedule::new(vec![1.0, 0.5, 0.2]).unwrap();
        let cfg = SmcConfig::new(128, 0.2);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| fixed_re_smc(&model, &[], &schedule, &cfg, None, 99).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.estimate.log_value.to_bits(), b.estimate.log_value.to_bits());
        assert_eq!(a.simulator_calls, b.simulator_calls);
    }

    #[test]
    fn config_validation() {
        let model = uniform_toy();
        let schedule = ThresholdSchedule::new(vec![0.5]).unwrap();
        assert!(fixed_re_smc(&model, &[], &schedule, &SmcConfig::new(1, 0.5), None, 0).is_err());
        let bad = SmcConfig::new(10, 0.5).with_n_accept(11);
        assert!(adapt_re_smc(&model, &[], &bad, None, 0).is_err());
    }

    #[test]
    fn stage_limit_is_an_error() {
        let model = uniform_toy();
        let mut cfg = SmcConfig::new(20, 0.0);
        cfg.max_stages = 5;
        assert!(matches!(adapt_re_smc(&model, &[], &cfg, None, 0), Err(Error::StageLimit(5))));
    }
}
