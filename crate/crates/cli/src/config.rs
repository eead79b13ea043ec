//! TOML run configuration.
//!
//! Top-level keys hold run-wide settings; `[model]`, `[method]`, `[pilot]`
//! and `[cost_scan]` configure each stage. Relative paths are resolved
//! against the directory of the configuration file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use reabc::diagnostics::CostMethod;
use reabc::epidemic::{EpidemicModel, EpidemicVariant, RemovalData, DEFAULT_K_PENALTY, DEFAULT_PRIOR_RATE};
use reabc::gaussian::{GaussianDistance, GaussianModel};
use reabc::io::read_observations;
use reabc::pmmh::ProposalConfig;
use reabc::Model;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    /// Record wall-clock timings. When false, timing columns are zero and
    /// outputs are byte-identical across runs.
    #[serde(default = "yes")]
    pub timing: bool,
    pub out: Option<PathBuf>,
    pub model: ModelSection,
    pub method: Option<MethodSection>,
    pub pilot: Option<PilotSection>,
    pub cost_scan: Option<CostScanSection>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSection {
    Gaussian(GaussianSection),
    Epidemic(EpidemicSection),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSection {
    pub data: PathBuf,
    #[serde(default = "default_prior_upper")]
    pub prior_upper: f64,
    #[serde(default)]
    pub distance: DistanceName,
}

fn default_prior_upper() -> f64 {
    10.0
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceName {
    Raw,
    #[default]
    Sorted,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpidemicSection {
    pub data: PathBuf,
    pub variant: String,
    #[serde(default = "default_k")]
    pub k_penalty: f64,
    #[serde(default = "default_prior_rate")]
    pub prior_rate: f64,
}

fn default_k() -> f64 {
    DEFAULT_K_PENALTY
}

fn default_prior_rate() -> f64 {
    DEFAULT_PRIOR_RATE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    Rejection,
    AbcMcmc,
    ReAbcFixed,
    ReAbcAdapt,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Rejection => "rejection",
            Self::AbcMcmc => "abc-mcmc",
            Self::ReAbcFixed => "re-abc-fixed",
            Self::ReAbcAdapt => "re-abc-adapt",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    pub kind: MethodKind,
    pub epsilon: f64,
    pub iterations: Option<usize>,
    pub particles: Option<usize>,
    pub n_accept: Option<usize>,
    /// Threshold schedule file (re-abc-fixed).
    pub schedule: Option<PathBuf>,
    /// Pilot report supplying the initial state, proposal and particle count.
    pub pilot: Option<PathBuf>,
    pub initial: Option<Vec<f64>>,
    pub proposal_sd: Option<Vec<f64>>,
    pub proposal_covariance: Option<Vec<Vec<f64>>>,
    #[serde(default = "yes")]
    pub early_termination: bool,
    pub target_accepts: Option<usize>,
    pub max_attempts: Option<u64>,
    #[serde(default)]
    pub burn_in: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PilotSource {
    #[default]
    Rejection,
    Chain,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotSection {
    pub epsilon: f64,
    #[serde(default)]
    pub source: PilotSource,
    #[serde(default = "default_pilot_accepts")]
    pub rejection_accepts: usize,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u64,
    /// Chain pilot: starting point, proposal and length.
    pub initial: Option<Vec<f64>>,
    pub proposal_sd: Option<Vec<f64>>,
    #[serde(default = "default_chain_iterations")]
    pub chain_iterations: usize,
    #[serde(default = "default_adapt_particles")]
    pub adapt_particles: usize,
    #[serde(default = "default_initial_particles")]
    pub initial_particles: usize,
    #[serde(default = "default_max_particles")]
    pub max_particles: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_target_variance")]
    pub target_variance: f64,
    /// Time allowed for searching the smallest reachable threshold.
    pub epsilon_budget_s: Option<f64>,
}

fn default_pilot_accepts() -> usize {
    500
}
fn default_max_attempts() -> u64 {
    10_000_000
}
fn default_chain_iterations() -> usize {
    500
}
fn default_adapt_particles() -> usize {
    200
}
fn default_initial_particles() -> usize {
    16
}
fn default_max_particles() -> usize {
    4096
}
fn default_replicates() -> usize {
    20
}
fn default_target_variance() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostScanSection {
    pub epsilons: Vec<f64>,
    pub methods: Vec<String>,
    #[serde(default = "default_scan_accepts")]
    pub rejection_accepts: usize,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u64,
    #[serde(default = "default_scan_iterations")]
    pub iterations: usize,
    #[serde(default = "default_scan_particles")]
    pub particles: usize,
    #[serde(default = "default_scan_burn_in")]
    pub burn_in: usize,
    pub initial: Vec<f64>,
    pub proposal_sd: Option<Vec<f64>>,
    pub proposal_covariance: Option<Vec<Vec<f64>>>,
}

fn default_scan_accepts() -> usize {
    200
}
fn default_scan_iterations() -> usize {
    1000
}
fn default_scan_particles() -> usize {
    100
}
fn default_scan_burn_in() -> usize {
    100
}

/// A parsed configuration with the source text kept for error locations.
pub struct Loaded {
    pub config: Config,
    pub text: String,
    pub dir: PathBuf,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config: Config = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, text, dir })
    }

    /// Line of `key` inside `[section]` (or at top level), for messages.
    pub fn line_of(&self, section: Option<&str>, key: &str) -> Option<usize> {
        let mut current: Option<String> = None;
        for (i, raw) in self.text.lines().enumerate() {
            let line = raw.trim();
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = Some(name.trim().to_string());
                continue;
            }
            if current.as_deref() == section
                && line.split('=').next().is_some_and(|k| k.trim() == key)
                && line.contains('=')
            {
                return Some(i + 1);
            }
        }
        None
    }

    /// Configuration error pointing at `key`.
    pub fn error(&self, section: Option<&str>, key: &str, message: impl std::fmt::Display) -> CliError {
        let place = match section {
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        };
        match self.line_of(section, key) {
            Some(line) => CliError::Config(format!("line {line}: {place}: {message}")),
            None => CliError::Config(format!("{place}: {message}")),
        }
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.dir.join(path)
        }
    }

    /// Reads a file referenced by `section.key`.
    pub fn read_referenced(&self, section: &str, key: &str, path: &Path) -> Result<String, CliError> {
        let full = self.resolve(path);
        std::fs::read_to_string(&full).map_err(|e| self.error(Some(section), key, format!("{}: {e}", full.display())))
    }
}

/// The model built from `[model]`.
pub enum BuiltModel {
    Gaussian(GaussianModel),
    Epidemic(EpidemicModel),
}

impl BuiltModel {
    pub fn as_model(&self) -> &dyn Model {
        match self {
            Self::Gaussian(m) => m,
            Self::Epidemic(m) => m,
        }
    }

    pub fn parameter_names(&self) -> Vec<String> {
        match self {
            Self::Gaussian(_) => vec!["sigma".to_string()],
            Self::Epidemic(m) => m.variant().parameter_names().iter().map(|s| s.to_string()).collect(),
        }
    }
}

pub fn build_model(loaded: &Loaded) -> Result<BuiltModel, CliError> {
    let section = Some("model");
    match &loaded.config.model {
        ModelSection::Gaussian(g) => {
            let text = loaded.read_referenced("model", "data", &g.data)?;
            let y = read_observations(&text).map_err(|e| loaded.error(section, "data", e))?;
            let distance = match g.distance {
                DistanceName::Raw => GaussianDistance::Raw,
                DistanceName::Sorted => GaussianDistance::Sorted,
            };
            GaussianModel::new(y, g.prior_upper, distance)
                .map(BuiltModel::Gaussian)
                .map_err(|e| loaded.error(section, "prior_upper", e))
        }
        ModelSection::Epidemic(e) => {
            let variant: EpidemicVariant = e.variant.parse().map_err(|err| loaded.error(section, "variant", err))?;
            let text = loaded.read_referenced("model", "data", &e.data)?;
            let data = RemovalData::parse(&text).map_err(|err| loaded.error(section, "data", err))?;
            EpidemicModel::new(variant, data, e.k_penalty)
                .map_err(|err| loaded.error(section, "k_penalty", err))?
                .with_prior_rate(e.prior_rate)
                .map(BuiltModel::Epidemic)
                .map_err(|err| loaded.error(section, "prior_rate", err))
        }
    }
}

/// Proposal from either per-parameter standard deviations or a full
/// covariance matrix.
pub fn proposal(
    loaded: &Loaded,
    section: &str,
    sd: Option<&Vec<f64>>,
    covariance: Option<&Vec<Vec<f64>>>,
    dim: usize,
) -> Result<Option<ProposalConfig>, CliError> {
    let s = Some(section);
    match (sd, covariance) {
        (Some(_), Some(_)) => {
            Err(loaded.error(s, "proposal_sd", "give either proposal_sd or proposal_covariance, not both"))
        }
        (Some(sd), None) => {
            if sd.len() != dim {
                return Err(loaded.error(s, "proposal_sd", format!("expected {dim} values, got {}", sd.len())));
            }
            ProposalConfig::diagonal(sd).map(Some).map_err(|e| loaded.error(s, "proposal_sd", e))
        }
        (None, Some(rows)) => {
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(loaded.error(s, "proposal_covariance", format!("expected a {dim}×{dim} matrix")));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            ProposalConfig::new(nalgebra::DMatrix::from_row_slice(dim, dim, &flat))
                .map(Some)
                .map_err(|e| loaded.error(s, "proposal_covariance", e))
        }
        (None, None) => Ok(None),
    }
}

pub fn cost_methods(loaded: &Loaded, names: &[String]) -> Result<Vec<CostMethod>, CliError> {
    names.iter().map(|n| n.parse().map_err(|e| loaded.error(Some("cost_scan"), "methods", e))).collect()
}
