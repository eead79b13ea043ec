//! Chain diagnostics and the cost-scaling harness.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{abc_mcmc, abc_rejection, AbcMcmcConfig};
use crate::error::{Error, Result};
use crate::model::{Model, ParamVector};
use crate::pmmh::{re_abc, FixedEstimator, PmmhConfig, ProposalConfig, Trace};
use crate::quantile::LatentDistribution;
use crate::smc::{adapt_re_smc, schedule_from_pilot, SmcConfig};
use crate::stats::{correlation, linear_fit, mean, std_dev, LinearFit};

pub const MIN_ESS_LENGTH: usize = 10;
pub const MIN_QQ_VALUES: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct EssReport {
    pub ess: f64,
    /// Integrated autocorrelation time `M / ESS`.
    pub autocorrelation_time: f64,
    /// Number of autocovariance pair sums kept before truncation.
    pub pairs_used: usize,
    pub chain_length: usize,
    /// The chain was constant, so ESS is reported as 1.
    pub degenerate: bool,
}

/// Effective sample size by Geyer's initial monotone sequence estimator.
///
/// Pair sums `Γ_j = γ_{2j} + γ_{2j+1}` of the empirical autocovariances are
/// summed up to the first nonpositive one, each clipped to the smallest
/// value before it, giving `τ = −1 + 2 Σ Γ_j / γ_0` and `ESS = M / τ`,
/// capped at `M`.
pub fn ess_imse(chain: &[f64]) -> Result<EssReport> {
    let m = chain.len();
    if m < MIN_ESS_LENGTH {
        return Err(Error::InsufficientData(format!("ESS needs at least {MIN_ESS_LENGTH} values, got {m}")));
    }
    let mu = mean(chain);
    let centred: Vec<f64> = chain.iter().map(|x| x - mu).collect();
    let autocov = |k: usize| centred[..m - k].iter().zip(&centred[k..]).map(|(a, b)| a * b).sum::<f64>() / m as f64;
    let gamma0 = autocov(0);
    if gamma0.is_nan() || gamma0 <= 0.0 {
        return Ok(EssReport {
            ess: 1.0,
            autocorrelation_time: m as f64,
            pairs_used: 0,
            chain_length: m,
            degenerate: true,
        });
    }
    let mut sum = 0.0;
    let mut previous = f64::INFINITY;
    let mut pairs = 0;
    let mut j = 0;
    while 2 * j + 1 < m {
        let pair = (autocov(2 * j) + autocov(2 * j + 1)).min(previous);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        previous = pair;
        pairs += 1;
        j += 1;
    }
    let tau = (-1.0 + 2.0 * sum / gamma0).max(1.0);
    Ok(EssReport {
        ess: m as f64 / tau,
        autocorrelation_time: tau,
        pairs_used: pairs,
        chain_length: m,
        degenerate: false,
    })
}

/// `sqrt(mean((x − truth)²))`.
pub fn rmse(samples: &[f64], truth: f64) -> f64 {
    assert!(!samples.is_empty(), "rmse of an empty sample");
    (samples.iter().map(|x| (x - truth).powi(2)).sum::<f64>() / samples.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QqData {
    /// Standard normal quantiles at `(i + 0.5) / n`.
    pub theoretical: Vec<f64>,
    /// Sorted, standardized finite log-estimates.
    pub empirical: Vec<f64>,
    /// Estimates equal to zero (log `-∞`), excluded from the plot.
    pub zero_count: usize,
    pub correlation: f64,
}

/// Normal QQ data for replicate log-likelihood estimates.
pub fn loglik_qq(log_estimates: &[f64]) -> Result<QqData> {
    let mut finite: Vec<f64> = log_estimates.iter().copied().filter(|v| v.is_finite()).collect();
    let zero_count = log_estimates.iter().filter(|&&v| v == f64::NEG_INFINITY).count();
    if finite.len() < MIN_QQ_VALUES {
        return Err(Error::InsufficientData(format!(
            "QQ data needs at least {MIN_QQ_VALUES} finite estimates, got {}",
            finite.len()
        )));
    }
    finite.sort_by(f64::total_cmp);
    let (mu, sd) = (mean(&finite), std_dev(&finite));
    let n = finite.len() as f64;
    let normal = LatentDistribution::standard_normal();
    let theoretical: Vec<f64> = (0..finite.len()).map(|i| normal.quantile((i as f64 + 0.5) / n)).collect();
    let empirical: Vec<f64> = finite.iter().map(|v| if sd > 0.0 { (v - mu) / sd } else { 0.0 }).collect();
    let correlation = if sd > 0.0 { correlation(&theoretical, &empirical) } else { f64::NAN };
    Ok(QqData { theoretical, empirical, zero_count, correlation })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub ess: EssReport,
    pub rmse: Option<f64>,
}

/// Posterior and efficiency summary of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSummary {
    pub iterations: usize,
    pub burn_in: usize,
    pub acceptance_rate: f64,
    pub params: Vec<ParamSummary>,
    pub simulator_calls: u64,
    pub smc_time: f64,
    /// Likelihood-estimation time per effective sample of the worst-mixing
    /// parameter.
    pub time_per_ess: f64,
    pub calls_per_ess: f64,
    /// Fraction of proposals whose estimate was zero, when known.
    pub zero_estimate_fraction: Option<f64>,
}

impl ChainSummary {
    /// `names` labels the parameters; `truth`, if given, adds RMSE.
    pub fn new(trace: &Trace, names: &[String], burn_in: usize, truth: Option<&[f64]>) -> Result<Self> {
        let d = trace.param_dim();
        if names.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: names.len() });
        }
        if let Some(t) = truth {
            if t.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: t.len() });
            }
        }
        if burn_in >= trace.records.len() {
            return Err(Error::InsufficientData(format!(
                "burn-in {burn_in} leaves no samples from {} records",
                trace.records.len()
            )));
        }
        let mut params = Vec::with_capacity(d);
        for (j, name) in names.iter().enumerate() {
            let column = trace.column(j, burn_in);
            params.push(ParamSummary {
                name: name.clone(),
                mean: mean(&column),
                sd: std_dev(&column),
                ess: ess_imse(&column)?,
                rmse: truth.map(|t| rmse(&column, t[j])),
            });
        }
        let least_ess = params.iter().map(|p| p.ess.ess).fold(f64::INFINITY, f64::min);
        let proposals = trace.records.len().saturating_sub(1);
        Ok(Self {
            iterations: trace.records.len(),
            burn_in,
            acceptance_rate: trace.acceptance_rate(),
            simulator_calls: trace.simulator_calls(),
            smc_time: trace.smc_time(),
            time_per_ess: trace.smc_time() / least_ess,
            calls_per_ess: trace.simulator_calls() as f64 / least_ess,
            zero_estimate_fraction: (proposals > 0).then(|| trace.zero_estimates as f64 / proposals as f64),
            params,
        })
    }

    /// `key: value` pairs in report order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("iterations".to_string(), self.iterations.to_string()),
            ("burn_in".to_string(), self.burn_in.to_string()),
            ("acceptance_rate".to_string(), format!("{:.6}", self.acceptance_rate)),
        ];
        for p in &self.params {
            out.push((format!("{}_mean", p.name), format!("{:.6}", p.mean)));
            out.push((format!("{}_sd", p.name), format!("{:.6}", p.sd)));
            out.push((format!("{}_ess", p.name), format!("{:.2}", p.ess.ess)));
            if p.ess.degenerate {
                out.push((format!("{}_ess_flag", p.name), "constant chain".to_string()));
            }
            if let Some(r) = p.rmse {
                out.push((format!("{}_rmse", p.name), format!("{r:.6}")));
            }
        }
        out.push(("simulator_calls".to_string(), self.simulator_calls.to_string()));
        out.push(("smc_time_s".to_string(), format!("{:.6}", self.smc_time)));
        out.push(("time_per_ess_s".to_string(), format!("{:.6e}", self.time_per_ess)));
        out.push(("calls_per_ess".to_string(), format!("{:.6e}", self.calls_per_ess)));
        if let Some(z) = self.zero_estimate_fraction {
            out.push(("zero_estimate_fraction".to_string(), format!("{z:.6}")));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostMethod {
    Rejection,
    AbcMcmc,
    ReAbc,
}

impl fmt::Display for CostMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rejection => "abc-reject",
            Self::AbcMcmc => "abc-mcmc",
            Self::ReAbc => "re-abc",
        })
    }
}

impl FromStr for CostMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abc-reject" | "rejection" => Ok(Self::Rejection),
            "abc-mcmc" => Ok(Self::AbcMcmc),
            "re-abc" => Ok(Self::ReAbc),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostScanRow {
    pub epsilon: f64,
    pub method: CostMethod,
    pub simulator_calls: u64,
    pub wall_time: f64,
    /// Accepted draws for rejection; the smallest per-parameter ESS for chains.
    pub effective_samples: f64,
    pub calls_per_effective_sample: f64,
    pub time_per_effective_sample: f64,
    /// Stage count of the pilot ADAPT-RE-SMC run (RE-ABC only).
    pub stages: Option<usize>,
    /// No effective samples: the row is reported but not fitted.
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct CostScanConfig {
    pub epsilons: Vec<f64>,
    pub methods: Vec<CostMethod>,
    /// Acceptances targeted by rejection sampling.
    pub rejection_accepts: usize,
    pub rejection_max_attempts: u64,
    /// Chain length for the MCMC methods.
    pub iterations: usize,
    /// Chain starting point, also where the RE-ABC schedule is tuned.
    pub initial: ParamVector,
    pub proposal: ProposalConfig,
    pub particles: usize,
    pub burn_in: usize,
}

fn chain_effective_samples(trace: &Trace, burn_in: usize) -> Result<f64> {
    let mut least = f64::INFINITY;
    for j in 0..trace.param_dim() {
        let report = ess_imse(&trace.column(j, burn_in))?;
        least = least.min(if report.degenerate { 0.0 } else { report.ess });
    }
    Ok(least)
}

fn row(epsilon: f64, method: CostMethod, calls: u64, time: f64, effective: f64, stages: Option<usize>) -> CostScanRow {
    let flagged = effective.is_nan() || effective <= 0.0;
    CostScanRow {
        epsilon,
        method,
        simulator_calls: calls,
        wall_time: time,
        effective_samples: effective,
        calls_per_effective_sample: if flagged { f64::INFINITY } else { calls as f64 / effective },
        time_per_effective_sample: if flagged { f64::INFINITY } else { time / effective },
        stages,
        flagged,
    }
}

/// Measures the cost of each method at each threshold, in simulator calls and
/// wall time per effective sample.
pub fn cost_scan(model: &dyn Model, cfg: &CostScanConfig, seed: u64) -> Result<Vec<CostScanRow>> {
    let mut rows = Vec::new();
    for (e, &eps) in cfg.epsilons.iter().enumerate() {
        let seed = crate::rng::derive_seed(seed, &[crate::rng::tag::REPLICATE, e as u64]);
        for &method in &cfg.methods {
            rows.push(match method {
                CostMethod::Rejection => {
                    let r = abc_rejection(model, eps, Some(cfg.rejection_accepts), cfg.rejection_max_attempts, seed)?;
                    row(eps, method, r.attempts, r.wall_time, r.accepted_params.len() as f64, None)
                }
                CostMethod::AbcMcmc => {
                    let mut c = AbcMcmcConfig::new(cfg.iterations, cfg.proposal.clone(), eps);
                    c.initial = Some(cfg.initial.clone());
                    c.max_initial_attempts = cfg.rejection_max_attempts;
                    let started = std::time::Instant::now();
                    match abc_mcmc(model, &c, seed) {
                        Ok(trace) => {
                            let ess = chain_effective_samples(&trace, cfg.burn_in)?;
                            row(eps, method, trace.simulator_calls(), started.elapsed().as_secs_f64(), ess, None)
                        }
                        Err(Error::ZeroInitialLikelihood(n)) => {
                            row(eps, method, n as u64, started.elapsed().as_secs_f64(), 0.0, None)
                        }
                        Err(e) => return Err(e),
                    }
                }
                CostMethod::ReAbc => {
                    let started = std::time::Instant::now();
                    let smc = SmcConfig::new(cfg.particles, eps);
                    let pilot = adapt_re_smc(model, &cfg.initial, &smc, None, seed)?;
                    let schedule = schedule_from_pilot(&pilot)?;
                    let estimator = FixedEstimator { schedule, config: smc };
                    let pmmh = PmmhConfig::new(cfg.initial.clone(), cfg.iterations, cfg.proposal.clone());
                    let trace = re_abc(model, &estimator, &pmmh, seed)?;
                    let ess = chain_effective_samples(&trace, cfg.burn_in)?;
                    let calls = pilot.simulator_calls + trace.simulator_calls();
                    row(eps, method, calls, started.elapsed().as_secs_f64(), ess, Some(pilot.stages_completed))
                }
            });
        }
    }
    Ok(rows)
}

/// Least-squares fit of `log(calls per effective sample)` against
/// `log(1/ε)` over the unflagged rows of one method.
pub fn fit_log_cost(rows: &[CostScanRow], method: CostMethod) -> Option<LinearFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.method == method && !r.flagged && r.epsilon > 0.0)
        .map(|r| ((1.0 / r.epsilon).ln(), r.calls_per_effective_sample.ln()))
        .unzip();
    (xs.len() >= 2).then(|| linear_fit(&xs, &ys))
}
