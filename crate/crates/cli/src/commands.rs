//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use reabc::baselines::{abc_mcmc, abc_rejection, AbcMcmcConfig};
use reabc::diagnostics::{cost_scan as run_cost_scan, fit_log_cost, ChainSummary, CostScanConfig};
use reabc::epidemic::{infectious_period_mean, r0};
use reabc::io::{
    read_trace, rejection_sidecar, write_cost_scan, write_rejection, write_report, write_trace, OutputHeader,
};
use reabc::pmmh::{
    re_abc, tune_epsilon, tune_particles, tune_proposal, AdaptiveEstimator, FixedEstimator, ParticleTuningConfig,
    PilotSummary, PmmhConfig, ProposalConfig, Trace,
};
use reabc::rng::derive_seed;
use reabc::smc::{adapt_re_smc, schedule_from_pilot, SmcConfig, ThresholdSchedule};
use reabc::stats::{mean, std_dev};

use crate::config::{build_model, cost_methods, proposal, BuiltModel, Loaded, MethodKind, PilotSource};
use crate::{CliError, CommonArgs, DiagnoseArgs};

fn runtime(e: reabc::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    if workers == Some(0) {
        return Err(CliError::Config("workers must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
}

/// Settings shared by the configuration-driven subcommands.
struct Context {
    loaded: Loaded,
    seed: u64,
    out: PathBuf,
    header: OutputHeader,
    pool: rayon::ThreadPool,
}

impl Context {
    fn new(args: &CommonArgs) -> Result<Self, CliError> {
        let loaded = Loaded::read(&args.config)?;
        let seed = args
            .seed
            .or(loaded.config.seed)
            .ok_or_else(|| CliError::Config("a seed is required (config key `seed` or --seed)".into()))?;
        let out = match (&args.out, &loaded.config.out) {
            (Some(dir), _) => dir.clone(),
            (None, Some(dir)) => loaded.resolve(dir),
            (None, None) => PathBuf::from("."),
        };
        std::fs::create_dir_all(&out).map_err(|e| io_error(&out, e))?;
        let header = OutputHeader {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: sha256_hex(loaded.text.as_bytes()),
            seed,
        };
        let pool = thread_pool(args.workers.or(loaded.config.workers))?;
        Ok(Self { loaded, seed, out, header, pool })
    }

    fn timing(&self) -> bool {
        self.loaded.config.timing
    }

    fn create(&self, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        let path = self.out.join(name);
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        Ok((path, BufWriter::new(file)))
    }

    fn write_pairs(&self, name: &str, pairs: &[(String, String)]) -> Result<(), CliError> {
        let (path, mut w) = self.create(name)?;
        write_report(&mut w, &self.header, pairs).map_err(|e| io_error(&path, e))?;
        w.flush().map_err(|e| io_error(&path, e))
    }

    fn write_trace(&self, trace: &Trace) -> Result<(), CliError> {
        let (path, mut w) = self.create("trace.csv")?;
        write_trace(&mut w, trace, &self.header, self.timing()).map_err(|e| io_error(&path, e))?;
        w.flush().map_err(|e| io_error(&path, e))
    }
}

fn format_list(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(" ")
}

fn pair(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

/// Values stored by `reabc pilot` and reused by `run`.
struct PilotReport {
    mean: Vec<f64>,
    proposal: ProposalConfig,
    particles: usize,
}

fn parse_pilot_report(loaded: &Loaded, path: &Path, dim: usize) -> Result<PilotReport, CliError> {
    let text = loaded.read_referenced("method", "pilot", path)?;
    let bad = |m: String| loaded.error(Some("method"), "pilot", m);
    let mut mean = None;
    let mut covariance = None;
    let mut particles = None;
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let Some((key, value)) = line.split_once(':') else { continue };
        let numbers = || -> Result<Vec<f64>, CliError> {
            value.split_whitespace().map(|v| v.parse().map_err(|e| bad(format!("{key}: {e}")))).collect()
        };
        match key.trim() {
            "mean" => mean = Some(numbers()?),
            "proposal_covariance" => covariance = Some(numbers()?),
            "particles" => particles = Some(value.trim().parse::<usize>().map_err(|e| bad(format!("particles: {e}")))?),
            _ => {}
        }
    }
    let mean = mean.ok_or_else(|| bad("pilot report lacks `mean`".into()))?;
    let covariance = covariance.ok_or_else(|| bad("pilot report lacks `proposal_covariance`".into()))?;
    let particles = particles.ok_or_else(|| bad("pilot report lacks `particles`".into()))?;
    if mean.len() != dim || covariance.len() != dim * dim {
        return Err(bad(format!("pilot report does not match a {dim}-parameter model")));
    }
    let proposal =
        ProposalConfig::new(DMatrix::from_row_slice(dim, dim, &covariance)).map_err(|e| bad(e.to_string()))?;
    Ok(PilotReport { mean, proposal, particles })
}

fn epidemic_pairs(model: &BuiltModel, trace: &Trace, burn_in: usize) -> Vec<(String, String)> {
    let BuiltModel::Epidemic(m) = model else { return Vec::new() };
    let thetas = trace.thetas(burn_in);
    let mut out = Vec::new();
    let r0s: Option<Vec<f64>> = thetas.iter().map(|t| r0(m.variant(), t)).collect();
    match r0s {
        Some(v) => {
            out.push(pair("r0_mean", format!("{:.6}", mean(&v))));
            out.push(pair("r0_sd", format!("{:.6}", std_dev(&v))));
        }
        None => out.push(pair("r0", "undefined for this model")),
    }
    let periods: Vec<f64> = thetas.iter().map(|t| infectious_period_mean(m.variant(), t)).collect();
    out.push(pair("infectious_period_mean", format!("{:.6}", mean(&periods))));
    out.push(pair("infectious_period_sd", format!("{:.6}", std_dev(&periods))));
    out
}

pub fn run(args: &CommonArgs) -> Result<(), CliError> {
    let ctx = Context::new(args)?;
    let loaded = &ctx.loaded;
    let model = build_model(loaded)?;
    let dim = model.as_model().param_dim();
    let method = loaded.config.method.as_ref().ok_or_else(|| CliError::Config("missing [method] section".into()))?;
    let s = Some("method");
    let eps = method.epsilon;
    if eps.is_nan() || eps < 0.0 {
        return Err(loaded.error(s, "epsilon", "must be nonnegative"));
    }

    if method.kind == MethodKind::Rejection {
        if method.target_accepts.is_none() && method.max_attempts.is_none() {
            return Err(loaded.error(s, "kind", "rejection needs target_accepts or max_attempts"));
        }
        let max_attempts = method.max_attempts.unwrap_or(u64::MAX);
        let result = ctx.pool.install(|| {
            abc_rejection(model.as_model(), eps, method.target_accepts, max_attempts, ctx.seed).map_err(runtime)
        })?;
        let (path, mut w) = ctx.create("rejection.csv")?;
        write_rejection(&mut w, &result, dim, &ctx.header).map_err(|e| io_error(&path, e))?;
        w.flush().map_err(|e| io_error(&path, e))?;
        ctx.write_pairs("rejection_summary.txt", &rejection_sidecar(&result, eps, ctx.timing()))?;
        if let Some(d) = &result.diagnostic {
            eprintln!("reabc: {d}");
        }
        return Ok(());
    }

    let iterations = method.iterations.ok_or_else(|| loaded.error(s, "kind", "`iterations` is required"))?;
    let pilot = method.pilot.as_deref().map(|p| parse_pilot_report(loaded, p, dim)).transpose()?;
    let proposal =
        match proposal(loaded, "method", method.proposal_sd.as_ref(), method.proposal_covariance.as_ref(), dim)? {
            Some(p) => p,
            None => pilot.as_ref().map(|p| p.proposal.clone()).ok_or_else(|| {
                loaded.error(s, "kind", "a proposal (proposal_sd, proposal_covariance or pilot) is required")
            })?,
        };
    let initial = method.initial.clone().or_else(|| pilot.as_ref().map(|p| p.mean.clone()));
    if let Some(init) = &initial {
        if init.len() != dim {
            return Err(loaded.error(s, "initial", format!("expected {dim} values, got {}", init.len())));
        }
    }
    let particles = method.particles.or(pilot.as_ref().map(|p| p.particles));

    let mut trace = match method.kind {
        MethodKind::AbcMcmc => {
            let mut cfg = AbcMcmcConfig::new(iterations, proposal, eps);
            cfg.initial = initial;
            if let Some(m) = method.max_attempts {
                cfg.max_initial_attempts = m;
            }
            ctx.pool.install(|| abc_mcmc(model.as_model(), &cfg, ctx.seed)).map_err(runtime)?
        }
        kind => {
            let particles = particles.ok_or_else(|| loaded.error(s, "kind", "`particles` is required"))?;
            let mut smc = SmcConfig::new(particles, eps);
            if let Some(n_accept) = method.n_accept {
                smc = smc.with_n_accept(n_accept);
            }
            let initial = initial.ok_or_else(|| loaded.error(s, "kind", "`initial` is required"))?;
            let mut cfg = PmmhConfig::new(initial, iterations, proposal);
            cfg.early_termination = method.early_termination;
            if kind == MethodKind::ReAbcFixed {
                let path = method
                    .schedule
                    .as_deref()
                    .ok_or_else(|| loaded.error(s, "kind", "re-abc-fixed needs a `schedule` file"))?;
                let text = loaded.read_referenced("method", "schedule", path)?;
                let schedule = ThresholdSchedule::parse(&text).map_err(|e| loaded.error(s, "schedule", e))?;
                if schedule.target() != eps {
                    return Err(loaded.error(
                        s,
                        "schedule",
                        format!("schedule ends at {} but epsilon is {eps}", schedule.target()),
                    ));
                }
                let estimator = FixedEstimator { schedule, config: smc };
                ctx.pool.install(|| re_abc(model.as_model(), &estimator, &cfg, ctx.seed)).map_err(runtime)?
            } else {
                let estimator = AdaptiveEstimator { config: smc };
                ctx.pool.install(|| re_abc(model.as_model(), &estimator, &cfg, ctx.seed)).map_err(runtime)?
            }
        }
    };
    if !ctx.timing() {
        for r in &mut trace.records {
            r.smc_time = 0.0;
        }
    }
    ctx.write_trace(&trace)?;

    let summary = ChainSummary::new(&trace, &model.parameter_names(), method.burn_in, None)
        .map_err(|e| loaded.error(s, "burn_in", e))?;
    let mut pairs = vec![pair("method", method.kind.name()), pair("epsilon", eps)];
    if let Some(n) = particles.filter(|_| method.kind != MethodKind::AbcMcmc) {
        pairs.push(pair("particles", n));
    }
    pairs.extend(summary.to_pairs());
    pairs.extend(epidemic_pairs(&model, &trace, method.burn_in));
    ctx.write_pairs("summary.txt", &pairs)
}

pub fn pilot(args: &CommonArgs) -> Result<(), CliError> {
    let ctx = Context::new(args)?;
    let loaded = &ctx.loaded;
    let model = build_model(loaded)?;
    let dim = model.as_model().param_dim();
    let p = loaded.config.pilot.as_ref().ok_or_else(|| CliError::Config("missing [pilot] section".into()))?;
    let s = Some("pilot");
    let eps = p.epsilon;
    if eps.is_nan() || eps < 0.0 {
        return Err(loaded.error(s, "epsilon", "must be nonnegative"));
    }
    let chain_setup = match p.source {
        PilotSource::Rejection => None,
        PilotSource::Chain => {
            let initial =
                p.initial.clone().ok_or_else(|| loaded.error(s, "source", "a chain pilot needs `initial`"))?;
            let prop = proposal(loaded, "pilot", p.proposal_sd.as_ref(), None, dim)?
                .ok_or_else(|| loaded.error(s, "source", "a chain pilot needs `proposal_sd`"))?;
            Some((initial, prop))
        }
    };

    let m = model.as_model();
    let work = || -> Result<Vec<(String, String)>, CliError> {
        let samples = match &chain_setup {
            None => {
                let r = abc_rejection(m, eps, Some(p.rejection_accepts), p.max_attempts, derive_seed(ctx.seed, &[1]))
                    .map_err(runtime)?;
                if r.accepted_params.len() < 2 {
                    return Err(CliError::Runtime(format!(
                        "degenerate pilot: {} acceptances in {} attempts at epsilon {eps}",
                        r.accepted_params.len(),
                        r.attempts
                    )));
                }
                r.accepted_params
            }
            Some((initial, prop)) => {
                let cfg = PmmhConfig::new(initial.clone(), p.chain_iterations, prop.clone());
                let estimator = AdaptiveEstimator { config: SmcConfig::new(p.adapt_particles, eps) };
                let trace = re_abc(m, &estimator, &cfg, derive_seed(ctx.seed, &[1])).map_err(runtime)?;
                trace.thetas(p.chain_iterations / 5)
            }
        };
        let summary = PilotSummary::from_samples(&samples).map_err(runtime)?;
        let tuned = tune_proposal(&summary).map_err(runtime)?;
        let adapt =
            adapt_re_smc(m, &summary.mean, &SmcConfig::new(p.adapt_particles, eps), None, derive_seed(ctx.seed, &[2]))
                .map_err(runtime)?;
        let schedule = schedule_from_pilot(&adapt).map_err(runtime)?;
        let mut tuning_cfg = ParticleTuningConfig::new(SmcConfig::new(p.initial_particles, eps));
        tuning_cfg.initial_particles = p.initial_particles;
        tuning_cfg.max_particles = p.max_particles;
        tuning_cfg.replicates = p.replicates;
        tuning_cfg.target_variance = p.target_variance;
        let tuning =
            tune_particles(m, &summary.mean, &schedule, &tuning_cfg, derive_seed(ctx.seed, &[3])).map_err(runtime)?;

        let (path, mut w) = ctx.create("schedule.txt")?;
        ctx.header.write(&mut w).map_err(|e| io_error(&path, e))?;
        w.write_all(schedule.to_text().as_bytes()).map_err(|e| io_error(&path, e))?;
        w.flush().map_err(|e| io_error(&path, e))?;

        let mut pairs = vec![
            pair("epsilon", eps),
            pair("pilot_samples", samples.len()),
            pair("mean", format_list(summary.mean.iter().copied())),
            pair("covariance", format_list(summary.covariance.transpose().iter().copied())),
            pair("proposal_covariance", format_list(tuned.covariance().transpose().iter().copied())),
            pair("schedule_stages", schedule.len()),
            pair("particles", tuning.particles),
            pair("log_likelihood_variance", format!("{:.6}", tuning.log_variance)),
            pair("zero_estimates", tuning.zero_estimates),
            pair("variance_target_met", tuning.met_target),
        ];
        if let Some(budget) = p.epsilon_budget_s {
            if !budget.is_finite() || budget < 0.0 {
                return Err(loaded.error(s, "epsilon_budget_s", "must be a nonnegative number of seconds"));
            }
            let reached = tune_epsilon(
                m,
                &summary.mean,
                Duration::from_secs_f64(budget),
                &SmcConfig::new(p.adapt_particles, 0.0),
                derive_seed(ctx.seed, &[4]),
            )
            .map_err(runtime)?;
            pairs.push(pair("smallest_reached_epsilon", reached));
        }
        Ok(pairs)
    };
    let pairs = ctx.pool.install(work)?;
    ctx.write_pairs("pilot.txt", &pairs)
}

pub fn cost_scan(args: &CommonArgs) -> Result<(), CliError> {
    let ctx = Context::new(args)?;
    let loaded = &ctx.loaded;
    let model = build_model(loaded)?;
    let dim = model.as_model().param_dim();
    let c = loaded.config.cost_scan.as_ref().ok_or_else(|| CliError::Config("missing [cost_scan] section".into()))?;
    let s = Some("cost_scan");
    if c.epsilons.is_empty() || c.epsilons.iter().any(|e| e.is_nan() || *e <= 0.0) {
        return Err(loaded.error(s, "epsilons", "need one or more positive thresholds"));
    }
    if c.initial.len() != dim {
        return Err(loaded.error(s, "initial", format!("expected {dim} values, got {}", c.initial.len())));
    }
    let methods = cost_methods(loaded, &c.methods)?;
    let prop = proposal(loaded, "cost_scan", c.proposal_sd.as_ref(), c.proposal_covariance.as_ref(), dim)?
        .ok_or_else(|| loaded.error(s, "initial", "a proposal (proposal_sd or proposal_covariance) is required"))?;
    let cfg = CostScanConfig {
        epsilons: c.epsilons.clone(),
        methods: methods.clone(),
        rejection_accepts: c.rejection_accepts,
        rejection_max_attempts: c.max_attempts,
        iterations: c.iterations,
        initial: c.initial.clone(),
        proposal: prop,
        particles: c.particles,
        burn_in: c.burn_in,
    };
    let rows = ctx.pool.install(|| run_cost_scan(model.as_model(), &cfg, ctx.seed)).map_err(runtime)?;
    let (path, mut w) = ctx.create("cost_scan.csv")?;
    write_cost_scan(&mut w, &rows, &ctx.header, ctx.timing()).map_err(|e| io_error(&path, e))?;
    w.flush().map_err(|e| io_error(&path, e))?;

    let mut pairs = Vec::new();
    for method in methods {
        let key = format!("{method}_log_cost_slope");
        match fit_log_cost(&rows, method) {
            Some(fit) => {
                pairs.push(pair(&key, format!("{:.4}", fit.slope)));
                pairs.push(pair(&format!("{method}_log_cost_r_squared"), format!("{:.4}", fit.r_squared)));
            }
            None => pairs.push(pair(&key, "too few unflagged rows")),
        }
    }
    ctx.write_pairs("cost_scan_fit.txt", &pairs)
}

pub fn diagnose(args: &DiagnoseArgs) -> Result<(), CliError> {
    let bytes = std::fs::read(&args.trace).map_err(|e| CliError::Config(format!("{}: {e}", args.trace.display())))?;
    let trace = read_trace(&bytes[..]).map_err(|e| CliError::Config(format!("{}: {e}", args.trace.display())))?;
    let d = trace.param_dim();
    if let Some(t) = &args.truth {
        if t.len() != d {
            return Err(CliError::Config(format!("--truth needs {d} values, got {}", t.len())));
        }
    }
    let names: Vec<String> = (1..=d).map(|j| format!("theta_{j}")).collect();
    let pool = thread_pool(args.workers)?;
    let mut summary = pool
        .install(|| ChainSummary::new(&trace, &names, args.burn_in, args.truth.as_deref()))
        .map_err(|e| CliError::Config(e.to_string()))?;
    summary.zero_estimate_fraction = None;
    let pairs = summary.to_pairs();
    for (k, v) in &pairs {
        println!("{k}: {v}");
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let seed = String::from_utf8_lossy(&bytes)
            .lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix("# seed:").and_then(|v| v.trim().parse().ok()))
            .unwrap_or(0);
        let header =
            OutputHeader { version: env!("CARGO_PKG_VERSION").to_string(), config_hash: sha256_hex(&bytes), seed };
        let path = dir.join("diagnostics.txt");
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut w = BufWriter::new(file);
        write_report(&mut w, &header, &pairs).map_err(|e| io_error(&path, e))?;
        w.flush().map_err(|e| io_error(&path, e))?;
    }
    Ok(())
}
