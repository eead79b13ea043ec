//! Reference ABC samplers: rejection sampling and ABC-MCMC.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{within, Model, ParamVector};
use crate::pmmh::{re_abc, PmmhConfig, ProposalConfig, SingleDrawEstimator, Trace};
use crate::rng::{stream, tag};

const BATCH: u64 = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionResult {
    pub accepted_params: Vec<ParamVector>,
    pub attempts: u64,
    pub wall_time: f64,
    /// Set when the attempt budget ran out before any acceptance.
    pub diagnostic: Option<String>,
}

impl RejectionResult {
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted_params.len() as f64 / self.attempts as f64
        }
    }

    /// Simulator calls per accepted draw; infinite with no acceptances.
    pub fn cost_per_acceptance(&self) -> f64 {
        self.attempts as f64 / self.accepted_params.len() as f64
    }
}

/// Outcome of rejection attempt `k`: a prior draw and whether its
/// simulation passed the threshold.
fn attempt(model: &dyn Model, epsilon: f64, seed: u64, k: u64) -> (ParamVector, bool) {
    let mut rng = stream(seed, &[tag::ATTEMPT, k]);
    let theta = model.prior_sample(&mut rng);
    let x: Vec<f64> = (0..model.latent_dim()).map(|_| rng.random()).collect();
    let hit = within(model.phi(&theta, &x), epsilon);
    (theta, hit)
}

/// Rejection ABC: prior draws whose simulation lands within `epsilon`.
///
/// Stops after `target_accepts` acceptances (if given) or `max_attempts`
/// attempts. Attempt `k` always uses the same random stream, so results do
/// not depend on the thread count and the accepted set shrinks
/// monotonically as `epsilon` decreases.
pub fn abc_rejection(
    model: &dyn Model,
    epsilon: f64,
    target_accepts: Option<usize>,
    max_attempts: u64,
    seed: u64,
) -> Result<RejectionResult> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidConfig(format!("threshold {epsilon} must be nonnegative")));
    }
    if target_accepts == Some(0) {
        return Err(Error::InvalidConfig("target acceptances must be positive".into()));
    }
    let started = Instant::now();
    let mut accepted = Vec::new();
    let mut attempts = 0;
    'outer: while attempts < max_attempts {
        let end = (attempts + BATCH).min(max_attempts);
        let batch: Vec<(ParamVector, bool)> =
            (attempts..end).into_par_iter().map(|k| attempt(model, epsilon, seed, k)).collect();
        for (theta, hit) in batch {
            attempts += 1;
            if hit {
                accepted.push(theta);
                if target_accepts.is_some_and(|t| accepted.len() >= t) {
                    break 'outer;
                }
            }
        }
    }
    let diagnostic =
        accepted.is_empty().then(|| format!("no acceptances in {attempts} attempts at threshold {epsilon}"));
    Ok(RejectionResult { accepted_params: accepted, attempts, wall_time: started.elapsed().as_secs_f64(), diagnostic })
}

#[derive(Debug, Clone)]
pub struct AbcMcmcConfig {
    /// Starting point. When absent the chain starts from a rejection draw.
    pub initial: Option<ParamVector>,
    pub iterations: usize,
    pub proposal: ProposalConfig,
    pub epsilon: f64,
    /// Attempts allowed when searching for an accepted initial state.
    pub max_initial_attempts: u64,
}

impl AbcMcmcConfig {
    pub fn new(iterations: usize, proposal: ProposalConfig, epsilon: f64) -> Self {
        Self { initial: None, iterations, proposal, epsilon, max_initial_attempts: 10_000_000 }
    }
}

/// ABC-MCMC: Metropolis-Hastings with a single simulation per proposal,
/// accepted only if it lands within `epsilon`.
pub fn abc_mcmc(model: &dyn Model, cfg: &AbcMcmcConfig, seed: u64) -> Result<Trace> {
    let (initial, known) = match &cfg.initial {
        Some(theta) => (theta.clone(), None),
        None => {
            let start = abc_rejection(model, cfg.epsilon, Some(1), cfg.max_initial_attempts, seed)?;
            let theta = start.accepted_params.into_iter().next().ok_or_else(|| {
                Error::ZeroInitialLikelihood(cfg.max_initial_attempts.try_into().unwrap_or(usize::MAX))
            })?;
            (theta, Some(0.0))
        }
    };
    let mut pmmh = PmmhConfig::new(initial, cfg.iterations, cfg.proposal.clone());
    pmmh.early_termination = false;
    pmmh.initial_log_likelihood = known;
    pmmh.max_initial_attempts = cfg.max_initial_attempts.try_into().unwrap_or(usize::MAX);
    re_abc(model, &SingleDrawEstimator { epsilon: cfg.epsilon }, &pmmh, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{GaussianDistance, GaussianModel};
    use crate::model::FnLatentModel;
    use crate::stats::{ks_one_sample, ks_two_sample, mean};

    fn gaussian() -> GaussianModel {
        GaussianModel::new(vec![2.1, -3.5, 0.4, 4.2, -1.0], 10.0, GaussianDistance::Sorted).unwrap()
    }

    #[test]
    fn infinite_threshold_returns_the_prior() {
        let r = abc_rejection(&gaussian(), f64::INFINITY, Some(5000), u64::MAX, 1).unwrap();
        assert_eq!(r.attempts, 5000);
        assert_eq!(r.acceptance_rate(), 1.0);
        let sigmas: Vec<f64> = r.accepted_params.iter().map(|t| t[0]).collect();
        assert!(ks_one_sample(&sigmas, |s| (s / 10.0).clamp(0.0, 1.0)).p_value > 0.01);
    }

    #[test]
    fn uniform_toy_acceptance_rate() {
        let model = FnLatentModel::new(1, |x: &[f64]| x[0]);
        let r = abc_rejection(&model, 0.1, None, 100_000, 2).unwrap();
        let se = (0.1 * 0.9 / 1e5f64).sqrt();
        assert!((r.acceptance_rate() - 0.1).abs() < 3.0 * se, "{}", r.acceptance_rate());
    }

    #[test]
    fn nested_thresholds_accept_nested_sets() {
        let model = gaussian();
        let wide = abc_rejection(&model, 6.0, None, 20_000, 3).unwrap();
        let narrow = abc_rejection(&model, 3.0, None, 20_000, 3).unwrap();
        assert!(narrow.accepted_params.len() <= wide.accepted_params.len());
        assert!(narrow.accepted_params.iter().all(|t| wide.accepted_params.contains(t)));
    }

    #[test]
    fn accepted_halves_look_iid() {
        let r = abc_rejection(&gaussian(), 4.0, Some(2000), u64::MAX, 4).unwrap();
        let s: Vec<f64> = r.accepted_params.iter().map(|t| t[0]).collect();
        assert!(ks_two_sample(&s[..1000], &s[1000..]).p_value > 0.01);
    }

    #[test]
    fn exhausted_budget_is_a_diagnostic() {
        let model = FnLatentModel::new(1, |_: &[f64]| 1.0);
        let r = abc_rejection(&model, 0.5, Some(1), 100, 5).unwrap();
        assert!(r.accepted_params.is_empty());
        assert!(r.diagnostic.is_some());
        assert!(abc_rejection(&model, -1.0, None, 1, 5).is_err());
    }

    #[test]
    fn independent_of_thread_count() {
        let model = gaussian();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| abc_rejection(&model, 3.0, Some(50), u64::MAX, 6).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.accepted_params, b.accepted_params);
        assert_eq!(a.attempts, b.attempts);
    }

    #[test]
    fn mcmc_with_infinite_threshold_targets_the_prior() {
        let cfg = AbcMcmcConfig::new(20_000, ProposalConfig::diagonal(&[4.0]).unwrap(), f64::INFINITY);
        let trace = abc_mcmc(&gaussian(), &cfg, 7).unwrap();
        let m = mean(&trace.column(0, 500));
        assert!((m - 5.0).abs() < 0.3, "mean {m}");
    }

    #[test]
    fn mcmc_states_satisfy_threshold_region() {
        let model = gaussian();
        let mut cfg = AbcMcmcConfig::new(2000, ProposalConfig::diagonal(&[0.5]).unwrap(), 4.0);
        cfg.initial = None;
        let trace = abc_mcmc(&model, &cfg, 8).unwrap();
        assert!(trace.acceptance_rate() > 0.0);
        assert!(trace.records.iter().all(|r| r.log_likelihood == 0.0));
    }
}
