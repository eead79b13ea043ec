//! Cross-module checks: models are interchangeable behind `dyn Model`, and
//! the samplers agree where their definitions coincide.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use reabc::baselines::{abc_mcmc, AbcMcmcConfig};
use reabc::epidemic::{EpidemicModel, EpidemicVariant, RemovalData, DEFAULT_K_PENALTY};
use reabc::gaussian::{synthetic_observations, GaussianDistance, GaussianModel};
use reabc::pmmh::{re_abc, AdaptiveEstimator, PmmhConfig, ProposalConfig, SingleDrawEstimator};
use reabc::{FnLatentModel, Model, SmcConfig};

fn gaussian() -> GaussianModel {
    let y = synthetic_observations(10, 2.0, &mut ChaCha8Rng::seed_from_u64(1));
    GaussianModel::new(y, 10.0, GaussianDistance::Sorted).unwrap()
}

fn epidemic() -> EpidemicModel {
    let data = RemovalData::from_intervals(30, &[2.0, 1.5, 3.0, 0.5, 4.0]).unwrap();
    EpidemicModel::new(EpidemicVariant::Markov, data, DEFAULT_K_PENALTY).unwrap()
}

#[test]
fn driver_accepts_any_model() {
    let toy = FnLatentModel::new(2, |x: &[f64]| x[0] + x[1]);
    let gauss = gaussian();
    let epi = epidemic();
    let cases: Vec<(&dyn Model, Vec<f64>, f64)> =
        vec![(&toy, vec![], 0.5), (&gauss, vec![2.0], 6.0), (&epi, vec![0.1, 0.3], 6.0)];
    for (model, initial, eps) in cases {
        let d = model.param_dim();
        assert_eq!(initial.len(), d);
        let proposal = ProposalConfig::diagonal(&vec![0.05; d]).unwrap();
        let cfg = PmmhConfig::new(initial, 20, proposal);
        let estimator = AdaptiveEstimator { config: SmcConfig::new(32, eps) };
        let a = re_abc(model, &estimator, &cfg, 3).unwrap();
        let b = re_abc(model, &estimator, &cfg, 3).unwrap();
        assert_eq!(a.records.len(), 20);
        assert_eq!(a.param_dim(), d);
        assert_eq!(a.accept_sequence(), b.accept_sequence());
        assert_eq!(a.thetas(0), b.thetas(0));
        assert!(a.records.iter().all(|r| r.theta.iter().all(|v| v.is_finite())));
    }
}

#[test]
fn abc_mcmc_is_the_driver_with_a_single_draw_likelihood() {
    for (model, initial, eps) in
        [(Box::new(gaussian()) as Box<dyn Model>, vec![2.0], 6.0), (Box::new(epidemic()), vec![0.1, 0.3], 8.0)]
    {
        let d = model.param_dim();
        let proposal = ProposalConfig::diagonal(&vec![0.1; d]).unwrap();

        let mut mcmc = AbcMcmcConfig::new(300, proposal.clone(), eps);
        mcmc.initial = Some(initial.clone());
        let baseline = abc_mcmc(model.as_ref(), &mcmc, 17).unwrap();

        let mut cfg = PmmhConfig::new(initial, 300, proposal);
        cfg.early_termination = false;
        cfg.max_initial_attempts = mcmc.max_initial_attempts as usize;
        let estimator = SingleDrawEstimator { epsilon: eps };
        let re = re_abc(model.as_ref(), &estimator, &cfg, 17).unwrap();

        assert_eq!(baseline.accept_sequence(), re.accept_sequence());
        assert_eq!(baseline.thetas(0), re.thetas(0));
        assert!(baseline.acceptance_rate() > 0.0);
    }
}
