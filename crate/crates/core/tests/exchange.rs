mod common;

use alaam::exchange::ChainState;
use alaam::missing::{self, MissingMechanism, PhiPrior};
use alaam::{
    run_estimation, AttributeData, ClampMask, Covariates, DirectedGraph, EstimationSettings,
    ExchangeSampler, Model, ModelSpec, Prior, Proposal, SeededRng, SimulationSettings, UpdateRule,
};
use common::enumerate::{self, StatisticSpectrum};
use common::quadrature::{marginal_first, Grid1};
use common::{logistic, random_graph};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};

fn observed(y: Vec<u8>) -> AttributeData {
    AttributeData::observed(y)
}

fn settings(iterations: usize, seed: u64) -> EstimationSettings {
    EstimationSettings {
        iterations,
        seed,
        ..Default::default()
    }
}

#[test]
fn intercept_posterior_matches_quadrature() {
    let g = random_graph(&mut SeededRng::seed_from_u64(1), 10, 0.3);
    let covs = Covariates::new();
    let spec = ModelSpec::parse(&["intercept"]).unwrap();
    let m = Model::new(&g, &spec, &covs).unwrap();
    let data = observed(vec![1, 0, 0, 1, 0, 1, 0, 0, 1, 0]);
    let post = run_estimation(
        &m,
        &data,
        &ClampMask::none(10),
        &Prior::Flat,
        &MissingMechanism::Mar,
        &settings(50_000, 9),
    )
    .unwrap();
    let draws: Vec<f64> = post.chains[0].column(0)[1000..].to_vec();
    let grid = Grid1::new(-8.0, 8.0, 4001, |t| 4.0 * t - 10.0 * (1.0 + t.exp()).ln());
    let mean = common::mean(&draws);
    let sd = common::sd(&draws);
    assert!(
        (mean - grid.mean()).abs() < 0.02,
        "mean {mean} vs {}",
        grid.mean()
    );
    assert!((sd - grid.sd()).abs() < 0.02, "sd {sd} vs {}", grid.sd());
}

#[test]
fn contagion_posterior_marginals_match_quadrature() {
    let g = random_graph(&mut SeededRng::seed_from_u64(2), 10, 0.3);
    let covs = Covariates::new();
    let spec = ModelSpec::parse(&["intercept", "contagion"]).unwrap();
    let m = Model::new(&g, &spec, &covs).unwrap();
    let y = vec![1, 1, 0, 0, 1, 0, 1, 0, 0, 0];
    let z = m.statistics(&y);
    let prior = Prior::isotropic(vec![0.0, 0.0], 2.0).unwrap();
    let post = run_estimation(
        &m,
        &observed(y),
        &ClampMask::none(10),
        &prior,
        &MissingMechanism::Mar,
        &settings(150_000, 4),
    )
    .unwrap();
    let spectrum = StatisticSpectrum::new(&g, &spec, &covs);
    let log_post = |a: f64, b: f64| spectrum.log_lik(&[a, b], &z) - (a * a + b * b) / 8.0;
    let thinned: Vec<Vec<f64>> = post.chains[0]
        .theta
        .iter()
        .skip(2000)
        .step_by(3)
        .cloned()
        .collect();
    for k in 0..2 {
        let grid = if k == 0 {
            marginal_first((-7.0, 5.0), (-5.0, 6.0), 401, log_post)
        } else {
            marginal_first((-5.0, 6.0), (-7.0, 5.0), 401, |b, a| log_post(a, b))
        };
        let sample: Vec<f64> = thinned.iter().map(|t| t[k]).collect();
        let ks = grid.ks_distance(&sample);
        assert!(ks < 0.03, "coordinate {k}: KS {ks}");
    }
}

fn three_missing() -> (DirectedGraph, AttributeData) {
    let g = random_graph(&mut SeededRng::seed_from_u64(3), 10, 0.3);
    let mut missing = vec![false; 10];
    for i in [1, 4, 7] {
        missing[i] = true;
    }
    let data = AttributeData::new(
        vec![1, 0, 1, 1, 0, 0, 1, 0, 0, 1],
        missing,
        Covariates::new(),
    )
    .unwrap();
    (g, data)
}

#[test]
fn imputation_equilibrium_matches_enumeration() {
    let (g, data) = three_missing();
    let covs = Covariates::new();
    let spec = ModelSpec::parse(&["intercept", "contagion"]).unwrap();
    let m = Model::new(&g, &spec, &covs).unwrap();
    let theta = vec![-0.4, 0.5];
    let phi = [-1.0, 1.0, 0.1];
    let mech = MissingMechanism::MnarFixed(phi);
    let prior = Prior::Flat;
    let s = ExchangeSampler::new(
        &m,
        &data,
        &ClampMask::none(10),
        &prior,
        &mech,
        Proposal::new(DMatrix::identity(2, 2)).unwrap(),
        1,
        UpdateRule::Gibbs,
    )
    .unwrap();
    let mut state = ChainState::new(&m, theta.clone(), data.y.clone(), phi);
    let mut rng = SeededRng::seed_from_u64(5);
    let mut counts = [0.0; 8];
    let reps = 200_000;
    for _ in 0..reps {
        s.update_missing(&mut state, &mut rng);
        let k =
            usize::from(state.y[1]) | usize::from(state.y[4]) << 1 | usize::from(state.y[7]) << 2;
        counts[k] += 1.0;
    }
    let mut fixed: Vec<Option<u8>> = data.y.iter().map(|&v| Some(v)).collect();
    for i in [1, 4, 7] {
        fixed[i] = None;
    }
    let weights = enumerate::log_weights(&g, &spec, &covs, &theta, &fixed, |y| {
        missing::log_likelihood(&phi, y, &data.missing, &g)
    });
    let probs = enumerate::probabilities(&weights);
    let tv: f64 = probs
        .iter()
        .map(|(y, p)| {
            let k = usize::from(y[1]) | usize::from(y[4]) << 1 | usize::from(y[7]) << 2;
            (p - counts[k] / reps as f64).abs()
        })
        .sum::<f64>()
        / 2.0;
    assert!(tv < 0.02, "tv {tv}");
}

#[test]
fn zero_theta_mar_imputes_fair_coins() {
    let (g, data) = three_missing();
    let covs = Covariates::new();
    let spec = ModelSpec::parse(&["intercept", "contagion"]).unwrap();
    let m = Model::new(&g, &spec, &covs).unwrap();
    let s = ExchangeSampler::new(
        &m,
        &data,
        &ClampMask::none(10),
        &Prior::Flat,
        &MissingMechanism::Mar,
        Proposal::new(DMatrix::identity(2, 2)).unwrap(),
        1,
        UpdateRule::Gibbs,
    )
    .unwrap();
    let mut state = ChainState::new(&m, vec![0.0, 0.0], data.y.clone(), [0.0; 3]);
    let mut rng = SeededRng::seed_from_u64(6);
    let mut ones = [0.0; 3];
    for _ in 0..20_000 {
        s.update_missing(&mut state, &mut rng);
        for (o, i) in ones.iter_mut().zip([1, 4, 7]) {
            *o += f64::from(state.y[i]);
        }
    }
    for o in ones {
        assert!((o / 20_000.0 - 0.5).abs() < 0.02);
    }
}

#[test]
fn mar_is_invariant_to_phi0_and_phi2() {
    let (g, data) = three_missing();
    let covs = Covariates::new();
    let spec = ModelSpec::parse(&["intercept", "contagion"]).unwrap();
    let m = Model::new(&g, &spec, &covs).unwrap();
    let prior = Prior::isotropic(vec![0.0; 2], 2.0).unwrap();
    let run = |mech: MissingMechanism| {
        run_estimation(
            &m,
            &data,
            &ClampMask::none(10),
            &prior,
            &mech,
            &settings(500, 3),
        )
        .unwrap()
    };
    let mar = run(MissingMechanism::Mar);
    let shifted = run(MissingMechanism::MnarFixed([2.5, 0.0, -0.7]));
    // everything except the recorded (fixed) φ must agree
    for (a, b) in mar.chains.iter().zip(&shifted.chains) {
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.accepted, b.accepted);
        assert_eq!(a.predictive, b.predictive);
        assert_eq!(a.imputations, b.imputations);
        assert_eq!(a.missing_acceptance, b.missing_acceptance);
    }
}

#[test]
fn without_missing_data_mechanism_steps_are_no_ops() {
    let g = random_graph(&mut SeededRng::seed_from_u64(7), 12, 0.2);
    let covs = Covariates::new();
    let spec = ModelSpec::parse(&["intercept", "contagion"]).unwrap();
    let m = Model::new(&g, &spec, &covs).unwrap();
    let data = observed(common::random_outcomes(
        &mut SeededRng::seed_from_u64(8),
        12,
        0.4,
    ));
    let prior = Prior::isotropic(vec![0.0; 2], 2.0).unwrap();
    let post = run_estimation(
        &m,
        &data,
        &ClampMask::none(12),
        &prior,
        &MissingMechanism::Mar,
        &settings(300, 1),
    )
    .unwrap();
    let c = &post.chains[0];
    assert!(c.imputations.is_empty());
    let z = m.statistics(&data.y);
    assert!(c.data_stats.iter().all(|d| *d == z));
    assert!(c.missing_acceptance.is_none() && c.phi_acceptance.is_none());
}

#[test]
fn fixed_seed_is_bit_identical() {
    let g = random_graph(&mut SeededRng::seed_from_u64(9), 15, 0.2);
    let covs = Covariates::new();
    let spec = ModelSpec::parse(&["intercept", "contagion"]).unwrap();
    let m = Model::new(&g, &spec, &covs).unwrap();
    let mut missing = vec![false; 15];
    missing[2] = true;
    let data = AttributeData::new(
        common::random_outcomes(&mut SeededRng::seed_from_u64(1), 15, 0.4),
        missing,
        covs.clone(),
    )
    .unwrap();
    let prior = Prior::isotropic(vec![0.0; 2], 2.0).unwrap();
    let s = EstimationSettings {
        iterations: 400,
        chains: 3,
        seed: 77,
        record_gof: true,
        ..Default::default()
    };
    let a = run_estimation(
        &m,
        &data,
        &ClampMask::none(15),
        &prior,
        &MissingMechanism::Mar,
        &s,
    )
    .unwrap();
    let b = run_estimation(
        &m,
        &data,
        &ClampMask::none(15),
        &prior,
        &MissingMechanism::Mar,
        &s,
    )
    .unwrap();
    assert_eq!(a.chains, b.chains);
    assert_ne!(a.chains[0].theta, a.chains[1].theta);
}

#[test]
fn predictive_record_carries_forward_on_rejection() {
    let g = random_graph(&mut SeededRng::seed_from_u64(10), 12, 0.2);
    let covs = Covariates::new();
    let spec = ModelSpec::parse(&["intercept", "contagion"]).unwrap();
    let m = Model::new(&g, &spec, &covs).unwrap();
    let data = observed(common::random_outcomes(
        &mut SeededRng::seed_from_u64(2),
        12,
        0.5,
    ));
    let post = run_estimation(
        &m,
        &data,
        &ClampMask::none(12),
        &Prior::Flat,
        &MissingMechanism::Mar,
        &settings(2000, 5),
    )
    .unwrap();
    let c = &post.chains[0];
    for t in 1..c.len() {
        if !c.accepted[t] {
            assert_eq!(c.predictive[t], c.predictive[t - 1]);
            assert_eq!(c.theta[t], c.theta[t - 1]);
        }
    }
    let rate = c.acceptance_rate();
    assert!(rate > 0.05 && rate < 0.95, "{rate}");
}

#[test]
fn phi_update_targets_prior_times_indicator_likelihood() {
    // no missing data, all outcomes 0 and no arcs: only φ₀ is informed
    let n = 30;
    let g = DirectedGraph::empty(n);
    let covs = Covariates::new();
    let spec = ModelSpec::parse(&["intercept"]).unwrap();
    let m = Model::new(&g, &spec, &covs).unwrap();
    let data = observed(vec![0; n]);
    let prior_phi = PhiPrior {
        mean: [0.0; 3],
        sd: [2.0; 3],
    };
    let mech = MissingMechanism::MnarEstimated {
        init: [0.0; 3],
        prior: prior_phi,
        spread: 0.5,
    };
    let prior = Prior::Flat;
    let s = ExchangeSampler::new(
        &m,
        &data,
        &ClampMask::none(n),
        &prior,
        &mech,
        Proposal::new(DMatrix::identity(1, 1)).unwrap(),
        1,
        UpdateRule::Gibbs,
    )
    .unwrap();
    let mut state = ChainState::new(&m, vec![0.0], data.y.clone(), [0.0; 3]);
    let mut rng = SeededRng::seed_from_u64(11);
    let mut trace = [Vec::new(), Vec::new()];
    for _ in 0..200_000 {
        s.update_phi(&mut state, &mut rng);
        trace[0].push(state.phi[0]);
        trace[1].push(state.phi[1]);
    }
    let grid = Grid1::new(-15.0, 5.0, 4001, |a| {
        -a * a / 8.0 - n as f64 * (1.0 + a.exp()).ln()
    });
    let m0 = common::mean(&trace[0]);
    let se0 = common::batch_means_se(&trace[0], 50);
    assert!(
        (m0 - grid.mean()).abs() < 3.0 * se0,
        "{m0} vs {} (se {se0})",
        grid.mean()
    );
    let m1 = common::mean(&trace[1]);
    let se1 = common::batch_means_se(&trace[1], 50);
    assert!(m1.abs() < 3.0 * se1, "{m1} (se {se1})");
    assert!((common::sd(&trace[1]) - 2.0).abs() < 0.15);
}

#[test]
fn mechanism_coefficients_are_calibrated() {
    // Truths are drawn from the priors the sampler is given, so 95% intervals
    // should cover at the nominal rate. Priors are centred at
    // φ = (-1, 0.8, -0.2); under a vague prior φ is weakly identified at n=60.
    let phi_centre = [-1.0, 0.8, -0.2];
    let theta_centre = [-0.5, 0.3];
    let n = 60;
    let covs = Covariates::new();
    let spec = ModelSpec::parse(&["intercept", "contagion"]).unwrap();
    let reps = 50;
    let mut covered = [0usize; 3];
    let phi_prior = PhiPrior {
        mean: phi_centre,
        sd: [1.0; 3],
    };
    let theta_prior = Prior::isotropic(theta_centre.to_vec(), 0.3).unwrap();
    for r in 0..reps {
        let mut rng = SeededRng::seed_from_u64(1000 + r);
        let normal = |rng: &mut SeededRng, m: f64, s: f64| {
            m + s * rng.sample::<f64, _>(rand_distr::StandardNormal)
        };
        // Redrawing until enough outcomes are observed conditions on the data
        // only, which leaves posterior coverage unchanged.
        let (g, truth, y, missing) = loop {
            let theta: Vec<f64> = theta_centre
                .iter()
                .map(|&m| normal(&mut rng, m, 0.3))
                .collect();
            let truth: Vec<f64> = phi_centre
                .iter()
                .map(|&m| normal(&mut rng, m, 1.0))
                .collect();
            let g = random_graph(&mut rng, n, 0.05);
            let m = Model::new(&g, &spec, &covs).unwrap();
            let sim = SimulationSettings {
                burn_in: 200,
                draws: 1,
                seed: rng.random(),
                ..Default::default()
            };
            let y = alaam::sample(&m, &theta, &sim, &ClampMask::none(n), &vec![0; n])
                .unwrap()
                .draws[0]
                .clone();
            let missing: Vec<bool> = (0..n)
                .map(|i| {
                    let eta =
                        truth[0] + truth[1] * f64::from(y[i]) + truth[2] * g.in_degree(i) as f64;
                    rng.random::<f64>() < logistic(eta)
                })
                .collect();
            if missing.iter().filter(|&&b| !b).count() >= 10 {
                break (g, truth, y, missing);
            }
        };
        let m = Model::new(&g, &spec, &covs).unwrap();
        let data = AttributeData::new(y, missing, covs.clone()).unwrap();
        let mech = MissingMechanism::MnarEstimated {
            init: phi_centre,
            prior: phi_prior,
            spread: 0.4,
        };
        let s = EstimationSettings {
            iterations: 6000,
            seed: r,
            ..Default::default()
        };
        let post = run_estimation(&m, &data, &ClampMask::none(n), &theta_prior, &mech, &s).unwrap();
        let phis = &post.chains[0].phi[1000..];
        for k in 0..3 {
            let mut v: Vec<f64> = phis.iter().map(|p| p[k]).collect();
            v.sort_by(f64::total_cmp);
            let lo = v[(0.025 * v.len() as f64) as usize];
            let hi = v[(0.975 * v.len() as f64) as usize];
            covered[k] += usize::from(lo <= truth[k] && truth[k] <= hi);
        }
    }
    for (k, c) in covered.iter().enumerate() {
        assert!(*c as f64 >= 0.9 * reps as f64, "phi{k}: covered {c}/{reps}");
    }
}
