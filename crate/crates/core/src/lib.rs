//! Likelihood-free Bayesian inference by rare-event SMC.
//!
//! The ABC likelihood `Pr(d(y(θ, x), y_obs) ≤ ε | θ)` is estimated by pushing
//! uniform latent vectors through a decreasing threshold sequence with
//! slice-sampling moves ([`smc`]), and the estimates drive a pseudo-marginal
//! Metropolis-Hastings chain over θ ([`pmmh`]).

pub mod baselines;
pub mod diagnostics;
pub mod epidemic;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod model;
pub mod pmmh;
pub mod quantile;
pub mod rng;
pub mod slice;
pub mod smc;
pub mod stats;

pub use error::{Error, Result};
pub use model::{FnLatentModel, LatentVector, LikelihoodEstimate, Model, ParamVector};
pub use pmmh::{ChainRecord, PilotSummary, PmmhConfig, ProposalConfig, Trace};
pub use quantile::LatentDistribution;
pub use slice::{SliceConfig, SliceOutcome};
pub use smc::{SmcConfig, SmcResult, ThresholdSchedule};
