//! Pseudo-marginal Metropolis-Hastings driven by RE-SMC likelihood estimates,
//! plus the pilot-based tuning helpers.
//!
//! The chain state is `(θ, log L̂)`. A proposal's estimate is carried forward
//! unchanged once accepted and never recomputed. All acceptance arithmetic is
//! on the log scale: with `u ~ U(0, 1]` the proposal is accepted iff
//!
//! ```text
//! log L̂' ≥ log u + log π(θ) + log L̂ − log π(θ') + log q(θ'|θ) − log q(θ|θ')
//! ```
//!
//! The right-hand side does not depend on `L̂'`, so it is computed before the
//! estimator runs and passed down as an early-termination bound.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{within, LikelihoodEstimate, Model};
use crate::rng::{derive_seed, stream, tag};
use crate::smc::{adapt_re_smc, fixed_re_smc, run_adaptive, SmcConfig, SmcResult, ThresholdSchedule};
use crate::stats::variance;

/// Proposal scale constant for random-walk MH with noisy likelihoods.
pub const PROPOSAL_SCALE: f64 = 2.562;
pub const DEFAULT_INITIAL_ATTEMPTS: usize = 10;

/// Gaussian random-walk proposal `θ' = θ + L z`, `L Lᵀ = Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalConfig {
    covariance: DMatrix<f64>,
    factor: DMatrix<f64>,
}

impl ProposalConfig {
    /// `covariance` must be symmetric positive semidefinite.
    pub fn new(covariance: DMatrix<f64>) -> Result<Self> {
        let d = covariance.nrows();
        if covariance.ncols() != d {
            return Err(Error::InvalidConfig("proposal covariance must be square".into()));
        }
        if covariance.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("proposal covariance has non-finite entries".into()));
        }
        let scale = covariance.amax().max(1.0);
        if (&covariance - covariance.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidConfig("proposal covariance is not symmetric".into()));
        }
        if d == 0 {
            return Ok(Self { factor: covariance.clone(), covariance });
        }
        let eigen = SymmetricEigen::new(covariance.clone());
        if eigen.eigenvalues.iter().any(|&l| l < -1e-10 * scale) {
            return Err(Error::InvalidConfig("proposal covariance is not positive semidefinite".into()));
        }
        let roots = eigen.eigenvalues.map(|l| l.max(0.0).sqrt());
        let factor = &eigen.eigenvectors * DMatrix::from_diagonal(&roots);
        Ok(Self { covariance, factor })
    }

    pub fn diagonal(std_devs: &[f64]) -> Result<Self> {
        let v = DVector::from_iterator(std_devs.len(), std_devs.iter().map(|s| s * s));
        Self::new(DMatrix::from_diagonal(&v))
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn propose<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Vec<f64> {
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let step = &self.factor * z;
        theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect()
    }

    /// `log q(to | from)` up to a constant. The walk is symmetric, so only
    /// differences of this quantity matter and they are zero.
    pub fn log_density(&self, _to: &[f64], _from: &[f64]) -> f64 {
        0.0
    }
}

/// Posterior mean and covariance estimated from a pilot run.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSummary {
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
}

impl PilotSummary {
    pub fn from_samples(samples: &[Vec<f64>]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::DegeneratePilot(format!("need at least 2 samples, got {}", samples.len())));
        }
        let d = samples[0].len();
        let n = samples.len() as f64;
        let mut mean = vec![0.0; d];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v / n;
            }
        }
        let mut cov = DMatrix::zeros(d, d);
        for s in samples {
            for i in 0..d {
                for j in 0..d {
                    cov[(i, j)] += (s[i] - mean[i]) * (s[j] - mean[j]) / (n - 1.0);
                }
            }
        }
        Ok(Self { mean, covariance: cov })
    }
}

/// Proposal covariance `(2.562² / dim θ) · Σ̂`.
pub fn tune_proposal(pilot: &PilotSummary) -> Result<ProposalConfig> {
    let d = pilot.covariance.nrows();
    if d == 0 || pilot.covariance.iter().all(|&v| v == 0.0) {
        return Err(Error::DegeneratePilot("pilot covariance is zero".into()));
    }
    ProposalConfig::new(&pilot.covariance * (PROPOSAL_SCALE * PROPOSAL_SCALE / d as f64))
}

/// Produces likelihood estimates for the chain. `log_bound` is the
/// early-termination bound on the log scale; implementations may stop once
/// their estimate is known to fall below it.
pub trait LikelihoodEstimator: Sync {
    fn estimate(&self, model: &dyn Model, theta: &[f64], log_bound: Option<f64>, seed: u64) -> Result<SmcResult>;
}

/// FIXED-RE-SMC with a pilot schedule.
#[derive(Debug, Clone)]
pub struct FixedEstimator {
    pub schedule: ThresholdSchedule,
    pub config: SmcConfig,
}

impl LikelihoodEstimator for FixedEstimator {
    fn estimate(&self, model: &dyn Model, theta: &[f64], log_bound: Option<f64>, seed: u64) -> Result<SmcResult> {
        fixed_re_smc(model, theta, &self.schedule, &self.config, log_bound, seed)
    }
}

/// ADAPT-RE-SMC.
#[derive(Debug, Clone)]
pub struct AdaptiveEstimator {
    pub config: SmcConfig,
}

impl LikelihoodEstimator for AdaptiveEstimator {
    fn estimate(&self, model: &dyn Model, theta: &[f64], log_bound: Option<f64>, seed: u64) -> Result<SmcResult> {
        adapt_re_smc(model, theta, &self.config, log_bound, seed)
    }
}

/// One simulation and an indicator: the ABC-MCMC likelihood.
#[derive(Debug, Clone, Copy)]
pub struct SingleDrawEstimator {
    pub epsilon: f64,
}

impl LikelihoodEstimator for SingleDrawEstimator {
    fn estimate(&self, model: &dyn Model, theta: &[f64], _log_bound: Option<f64>, seed: u64) -> Result<SmcResult> {
        let started = Instant::now();
        let mut rng = stream(seed, &[tag::INIT, 0]);
        let x: Vec<f64> = (0..model.latent_dim()).map(|_| rng.random()).collect();
        let hit = within(model.phi(theta, &x), self.epsilon);
        Ok(SmcResult {
            estimate: LikelihoodEstimate::from_log(if hit { 0.0 } else { f64::NEG_INFINITY }),
            stage_fractions: vec![if hit { 1.0 } else { 0.0 }],
            epsilons_used: vec![self.epsilon],
            stages_completed: 1,
            terminated_early: false,
            reached_target: true,
            wall_time: started.elapsed().as_secs_f64(),
            simulator_calls: 1,
            mean_slice_iterations: Vec::new(),
            widths: Vec::new(),
        })
    }
}

/// An exact log-likelihood, turning the driver into plain MH.
pub struct ExactEstimator<F> {
    pub log_likelihood: F,
}

impl<F> LikelihoodEstimator for ExactEstimator<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn estimate(&self, _model: &dyn Model, theta: &[f64], _log_bound: Option<f64>, _seed: u64) -> Result<SmcResult> {
        Ok(SmcResult {
            estimate: LikelihoodEstimate::from_log((self.log_likelihood)(theta)),
            stage_fractions: Vec::new(),
            epsilons_used: Vec::new(),
            stages_completed: 0,
            terminated_early: false,
            reached_target: true,
            wall_time: 0.0,
            simulator_calls: 0,
            mean_slice_iterations: Vec::new(),
            widths: Vec::new(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct PmmhConfig {
    pub initial: Vec<f64>,
    /// Chain length `M`, including the initial state.
    pub iterations: usize,
    pub proposal: ProposalConfig,
    pub early_termination: bool,
    /// Known log-likelihood of the initial state, skipping the initial
    /// estimate.
    pub initial_log_likelihood: Option<f64>,
    pub max_initial_attempts: usize,
}

impl PmmhConfig {
    pub fn new(initial: Vec<f64>, iterations: usize, proposal: ProposalConfig) -> Self {
        Self {
            initial,
            iterations,
            proposal,
            early_termination: true,
            initial_log_likelihood: None,
            max_initial_attempts: DEFAULT_INITIAL_ATTEMPTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRecord {
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub log_likelihood: f64,
    pub accepted: bool,
    pub smc_stages: usize,
    pub smc_time: f64,
    pub smc_terminated_early: bool,
    pub simulator_calls: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<ChainRecord>,
    pub seed: u64,
    /// Proposals whose completed likelihood estimate was exactly zero.
    pub zero_estimates: usize,
}

impl Trace {
    pub fn param_dim(&self) -> usize {
        self.records.first().map_or(0, |r| r.theta.len())
    }

    /// Samples of parameter `j` after discarding `burn_in` records.
    pub fn column(&self, j: usize, burn_in: usize) -> Vec<f64> {
        self.records.iter().skip(burn_in).map(|r| r.theta[j]).collect()
    }

    pub fn thetas(&self, burn_in: usize) -> Vec<Vec<f64>> {
        self.records.iter().skip(burn_in).map(|r| r.theta.clone()).collect()
    }

    /// Accepted fraction of proposals (the initial record is not a proposal).
    pub fn acceptance_rate(&self) -> f64 {
        if self.records.len() < 2 {
            return 0.0;
        }
        let accepted = self.records[1..].iter().filter(|r| r.accepted).count();
        accepted as f64 / (self.records.len() - 1) as f64
    }

    pub fn simulator_calls(&self) -> u64 {
        self.records.iter().map(|r| r.simulator_calls).sum()
    }

    pub fn smc_time(&self) -> f64 {
        self.records.iter().map(|r| r.smc_time).sum()
    }

    pub fn accept_sequence(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.accepted).collect()
    }
}

/// Log of the early-termination bound: the proposal is accepted iff
/// `log L̂' ≥` this value.
pub fn log_early_termination_bound(
    u: f64,
    theta_prev: &[f64],
    theta_prop: &[f64],
    log_likelihood_prev: f64,
    model: &dyn Model,
    proposal: &ProposalConfig,
) -> f64 {
    u.ln() + model.prior_log_density(theta_prev) + log_likelihood_prev + proposal.log_density(theta_prop, theta_prev)
        - model.prior_log_density(theta_prop)
        - proposal.log_density(theta_prev, theta_prop)
}

/// `u π(θ) L̂ q(θ'|θ) / (π(θ') q(θ|θ'))`.
pub fn early_termination_bound(
    u: f64,
    theta_prev: &[f64],
    theta_prop: &[f64],
    log_likelihood_prev: f64,
    model: &dyn Model,
    proposal: &ProposalConfig,
) -> f64 {
    log_early_termination_bound(u, theta_prev, theta_prop, log_likelihood_prev, model, proposal).exp()
}

/// The RE-ABC chain: pseudo-marginal MH with the given likelihood estimator.
///
/// Each iteration draws its proposal, uniform and estimator seed from its
/// own stream, so early termination never changes later iterations.
pub fn re_abc(model: &dyn Model, estimator: &dyn LikelihoodEstimator, cfg: &PmmhConfig, seed: u64) -> Result<Trace> {
    let dim = model.param_dim();
    if cfg.initial.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: cfg.initial.len() });
    }
    if cfg.proposal.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: cfg.proposal.dim() });
    }
    if cfg.iterations == 0 {
        return Err(Error::InvalidConfig("chain length must be positive".into()));
    }
    let mut log_prior = model.prior_log_density(&cfg.initial);
    if log_prior == f64::NEG_INFINITY {
        return Err(Error::InitialOutsidePrior);
    }

    let mut records = Vec::with_capacity(cfg.iterations);
    let mut theta = cfg.initial.clone();
    let mut log_like = match cfg.initial_log_likelihood {
        Some(l) => {
            records.push(ChainRecord {
                iteration: 1,
                theta: theta.clone(),
                log_likelihood: l,
                accepted: true,
                smc_stages: 0,
                smc_time: 0.0,
                smc_terminated_early: false,
                simulator_calls: 0,
            });
            l
        }
        None => {
            let mut found = None;
            let (mut calls, mut time) = (0, 0.0);
            for attempt in 0..cfg.max_initial_attempts {
                let s = derive_seed(seed, &[tag::INITIAL_STATE, attempt as u64]);
                let r = estimator.estimate(model, &theta, None, s)?;
                calls += r.simulator_calls;
                time += r.wall_time;
                if !r.estimate.is_zero() {
                    found = Some(r);
                    break;
                }
            }
            let r = found.ok_or(Error::ZeroInitialLikelihood(cfg.max_initial_attempts))?;
            records.push(ChainRecord {
                iteration: 1,
                theta: theta.clone(),
                log_likelihood: r.estimate.log_value,
                accepted: true,
                smc_stages: r.stages_completed,
                smc_time: time,
                smc_terminated_early: false,
                simulator_calls: calls,
            });
            r.estimate.log_value
        }
    };

    let mut zero_estimates = 0;
    for t in 2..=cfg.iterations {
        let mut rng = stream(seed, &[tag::ITERATION, t as u64]);
        let proposal = cfg.proposal.propose(&theta, &mut rng);
        let u = 1.0 - rng.random::<f64>();
        let smc_seed: u64 = rng.random();

        let proposal_log_prior = model.prior_log_density(&proposal);
        let mut record = ChainRecord {
            iteration: t,
            theta: theta.clone(),
            log_likelihood: log_like,
            accepted: false,
            smc_stages: 0,
            smc_time: 0.0,
            smc_terminated_early: false,
            simulator_calls: 0,
        };
        if proposal_log_prior > f64::NEG_INFINITY {
            let log_bound = log_early_termination_bound(u, &theta, &proposal, log_like, model, &cfg.proposal);
            let r = estimator.estimate(model, &proposal, cfg.early_termination.then_some(log_bound), smc_seed)?;
            record.smc_stages = r.stages_completed;
            record.smc_time = r.wall_time;
            record.smc_terminated_early = r.terminated_early;
            record.simulator_calls = r.simulator_calls;
            if !r.terminated_early && r.estimate.is_zero() {
                zero_estimates += 1;
            }
            let accept = !r.terminated_early && !r.estimate.is_zero() && r.estimate.log_value >= log_bound;
            if accept {
                theta = proposal;
                log_like = r.estimate.log_value;
                log_prior = proposal_log_prior;
                record.theta = theta.clone();
                record.log_likelihood = log_like;
                record.accepted = true;
            }
        }
        debug_assert!(log_prior > f64::NEG_INFINITY);
        records.push(record);
    }
    Ok(Trace { records, seed, zero_estimates })
}

#[derive(Debug, Clone)]
pub struct ParticleTuningConfig {
    /// First particle count tried, `N₀`.
    pub initial_particles: usize,
    /// Largest particle count tried.
    pub max_particles: usize,
    pub replicates: usize,
    /// Target variance of `log L̂`.
    pub target_variance: f64,
    /// Template for everything other than the particle count.
    pub smc: SmcConfig,
}

impl ParticleTuningConfig {
    pub fn new(smc: SmcConfig) -> Self {
        Self { initial_particles: 16, max_particles: 4096, replicates: 20, target_variance: 1.0, smc }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleTuning {
    pub particles: usize,
    /// Sample variance of the nonzero log-estimates at `particles`.
    pub log_variance: f64,
    pub zero_estimates: usize,
    pub replicates: usize,
    pub met_target: bool,
}

/// Smallest `N` in `N₀, 2N₀, …` whose log-estimate variance at `theta`
/// is at most the target.
pub fn tune_particles(
    model: &dyn Model,
    theta: &[f64],
    schedule: &ThresholdSchedule,
    cfg: &ParticleTuningConfig,
    seed: u64,
) -> Result<ParticleTuning> {
    if model.prior_log_density(theta) == f64::NEG_INFINITY {
        return Err(Error::TuningFailed("tuning point outside the prior support".into()));
    }
    if cfg.initial_particles < 2 || cfg.max_particles < cfg.initial_particles || cfg.replicates < 2 {
        return Err(Error::InvalidConfig("particle tuning needs N₀ ≥ 2, N_max ≥ N₀ and ≥ 2 replicates".into()));
    }
    let mut n = cfg.initial_particles;
    loop {
        let mut smc = cfg.smc.clone();
        smc.particles = n;
        smc.n_accept = smc.n_accept.min(n);
        let mut logs = Vec::with_capacity(cfg.replicates);
        let mut zeros = 0;
        for r in 0..cfg.replicates {
            let s = derive_seed(seed, &[tag::REPLICATE, n as u64, r as u64]);
            let est = fixed_re_smc(model, theta, schedule, &smc, None, s)?.estimate;
            if est.is_zero() {
                zeros += 1;
            } else {
                logs.push(est.log_value);
            }
        }
        let var = if logs.len() >= 2 { variance(&logs) } else { f64::INFINITY };
        let met = var <= cfg.target_variance && zeros == 0;
        let last = n * 2 > cfg.max_particles;
        if met || last {
            if !met && 2 * zeros > cfg.replicates {
                return Err(Error::TuningFailed(format!(
                    "{zeros} of {} estimates were zero at N = {n}",
                    cfg.replicates
                )));
            }
            return Ok(ParticleTuning {
                particles: n,
                log_variance: var,
                zero_estimates: zeros,
                replicates: cfg.replicates,
                met_target: met,
            });
        }
        n *= 2;
    }
}

/// Runs ADAPT-RE-SMC towards `ε = 0` and returns the threshold reached when
/// `budget` runs out (or the stage cap is hit).
pub fn tune_epsilon(model: &dyn Model, theta: &[f64], budget: Duration, cfg: &SmcConfig, seed: u64) -> Result<f64> {
    let mut cfg = cfg.clone();
    cfg.epsilon = 0.0;
    let deadline = Instant::now() + budget;
    let (result, _) = run_adaptive(model, theta, &cfg, None, seed, Some(deadline))?;
    Ok(*result.epsilons_used.last().expect("at least one stage"))
}
