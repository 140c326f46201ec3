//! Marginal likelihood through the identity
//! `log m(y) = ℓ(θ′) + log π(θ′) − log π(θ′ | y)`.
//!
//! The posterior ordinate is a ratio of two expectations of exchange
//! acceptance probabilities: the numerator averages over posterior draws
//! and auxiliary draws under `θ′`, the denominator over proposals
//! `θⱼ ~ h(· | θ′)` and auxiliary draws under each `θⱼ`. With missing
//! outcomes the numerator pairs each posterior draw with its imputation and
//! the denominator imputes from the conditional distribution under `θ′`.
//! The likelihood ordinate comes from the path sampler.

use rand::SeedableRng;
use rayon::prelude::*;

use crate::attributes::{AttributeData, ClampMask};
use crate::error::{AlaamError, Result};
use crate::evaluation::path::{log_likelihood, PathSettings};
use crate::evaluation::summary::effective_sample_size;
use crate::exchange::{run_estimation, EstimationSettings, PosteriorSample};
use crate::logistic::independent_mle;
use crate::missing::{self, MissingMechanism};
use crate::prior::{Prior, Proposal};
use crate::simulate::{SimulationSettings, SiteSampler, UpdateRule};
use crate::statistics::Model;
use crate::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceSettings {
    /// Posterior draws discarded per chain before averaging.
    pub burn_in: usize,
    pub thinning: usize,
    /// Auxiliary draws under `θ′` for the numerator.
    pub g_draws: usize,
    /// Proposal draws `θⱼ` for the denominator.
    pub j_draws: usize,
    /// Auxiliary draws under each `θⱼ`.
    pub m_draws: usize,
    /// Sweeps before the first auxiliary draw of a chain.
    pub aux_burn_in: usize,
    /// Sweeps between auxiliary draws.
    pub aux_thinning: usize,
    /// Sweeps on moving to a new `θⱼ`.
    pub j_burn_in: usize,
    /// Evaluation point; the posterior mean when `None`.
    pub theta_prime: Option<Vec<f64>>,
    pub path: PathSettings,
    pub rule: UpdateRule,
    pub seed: u64,
}

impl Default for EvidenceSettings {
    fn default() -> Self {
        Self {
            burn_in: 0,
            thinning: 1,
            g_draws: 2000,
            j_draws: 1000,
            m_draws: 10,
            aux_burn_in: 200,
            aux_thinning: 2,
            j_burn_in: 20,
            theta_prime: None,
            path: PathSettings::default(),
            rule: UpdateRule::Gibbs,
            seed: 0,
        }
    }
}

impl EvidenceSettings {
    pub fn validate(&self) -> Result<()> {
        if self.g_draws == 0 || self.j_draws < 2 || self.m_draws == 0 {
            return Err(AlaamError::Config(
                "evaluation.G and M must be at least 1 and evaluation.J at least 2".into(),
            ));
        }
        if self.aux_thinning == 0 {
            return Err(AlaamError::Config(
                "auxiliary thinning must be at least 1".into(),
            ));
        }
        self.path.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorOrdinate {
    pub log_value: f64,
    /// Delta-method standard error of `log_value`.
    pub se: f64,
    pub numerator: f64,
    pub denominator: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceResult {
    pub theta_prime: Vec<f64>,
    pub log_likelihood: f64,
    pub log_likelihood_se: f64,
    pub log_prior: f64,
    pub log_posterior: f64,
    pub log_posterior_se: f64,
    pub log_evidence: f64,
    pub log_evidence_se: f64,
}

/// `ℓ + log π − log π̂`
pub fn log_marginal_identity(log_likelihood: f64, log_prior: f64, log_posterior: f64) -> f64 {
    log_likelihood + log_prior - log_posterior
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, var.sqrt())
}

fn dot_diff(a: &[f64], b: &[f64], z: &[f64]) -> f64 {
    a.iter().zip(b).zip(z).map(|((x, y), s)| (x - y) * s).sum()
}

fn accept_prob(log_ratio: f64) -> f64 {
    if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    }
}

/// Refuses improper priors and estimated missingness mechanisms.
pub fn check_supported(prior: &Prior, mechanism: &MissingMechanism) -> Result<()> {
    if !prior.is_proper() {
        return Err(AlaamError::Precondition(
            "the marginal likelihood requires a proper prior; the flat prior is improper".into(),
        ));
    }
    if mechanism.estimates_phi() {
        return Err(AlaamError::Precondition(
            "the marginal likelihood is only available with a fixed missingness mechanism".into(),
        ));
    }
    Ok(())
}

/// Estimate of `log π(θ′ | y)`.
#[allow(clippy::too_many_arguments)]
pub fn posterior_ordinate(
    model: &Model<'_>,
    data: &AttributeData,
    clamp: &ClampMask,
    prior: &Prior,
    mechanism: &MissingMechanism,
    sample: &PosteriorSample,
    proposal: &Proposal,
    theta_prime: &[f64],
    settings: &EvidenceSettings,
) -> Result<PosteriorOrdinate> {
    check_supported(prior, mechanism)?;
    settings.validate()?;
    crate::simulate::check_theta(model, theta_prime)?;
    let thetas = sample.pooled_theta(settings.burn_in, settings.thinning);
    let data_stats = sample.pooled(settings.burn_in, settings.thinning, |c| &c.data_stats);
    if thetas.is_empty() {
        return Err(AlaamError::Precondition(
            "no posterior draws remain after burn-in".into(),
        ));
    }
    let p = model.dim();
    let lp_prime = prior.log_density(theta_prime);
    let mut rng = SeededRng::seed_from_u64(settings.seed);
    let free_sampler = SiteSampler::new(model, clamp)?.rule(settings.rule);
    let mut scratch = vec![0.0; p];

    // numerator: auxiliary sample under θ′
    let mut y = data.y.clone();
    let mut z = model.statistics(&y);
    free_sampler.sweeps(
        settings.aux_burn_in,
        theta_prime,
        &mut y,
        &mut z,
        &mut scratch,
        &mut rng,
    );
    let mut aux = Vec::with_capacity(settings.g_draws);
    for _ in 0..settings.g_draws {
        free_sampler.sweeps(
            settings.aux_thinning,
            theta_prime,
            &mut y,
            &mut z,
            &mut scratch,
            &mut rng,
        );
        aux.push(z.clone());
    }
    let terms: Vec<f64> = thetas
        .par_iter()
        .zip(data_stats.par_iter())
        .map(|(theta, zd)| {
            let base = dot_diff(theta, theta_prime, zd);
            let prior_part = lp_prime - prior.log_density(theta);
            let mean_alpha = aux
                .iter()
                .map(|zg| accept_prob(dot_diff(theta, theta_prime, zg) - base + prior_part))
                .sum::<f64>()
                / aux.len() as f64;
            mean_alpha * proposal.log_density(theta, theta_prime).exp()
        })
        .collect();
    let (numerator, num_sd) = mean_sd(&terms);
    let num_ess = effective_sample_size(&terms)
        .unwrap_or(terms.len() as f64)
        .max(1.0);
    let num_se = num_sd / num_ess.sqrt();

    // denominator: θⱼ ~ h(· | θ′), imputations from the conditional under θ′
    let missing_nodes = data.missing_nodes();
    let imputer = if missing_nodes.is_empty() {
        None
    } else {
        let g = model.graph();
        let offsets = (0..model.node_count())
            .map(|i| {
                let (w0, w1) = missing::missing_log_weights(
                    mechanism,
                    &mechanism.initial_phi(),
                    g.in_degree(i),
                );
                w1 - w0
            })
            .collect();
        Some(
            SiteSampler::with_free(model, missing_nodes)?
                .offsets(Some(offsets))
                .rule(settings.rule),
        )
    };
    let mut y_imp = data.y.clone();
    let mut z_imp = model.statistics(&y_imp);
    if let Some(s) = &imputer {
        s.sweeps(
            settings.aux_burn_in,
            theta_prime,
            &mut y_imp,
            &mut z_imp,
            &mut scratch,
            &mut rng,
        );
    }
    let mut y_aux = y.clone();
    let mut z_aux = z.clone();
    let mut theta_j = vec![0.0; p];
    let mut den_terms = Vec::with_capacity(settings.j_draws);
    for _ in 0..settings.j_draws {
        proposal.propose(theta_prime, &mut rng, &mut theta_j);
        if let Some(s) = &imputer {
            s.sweeps(
                settings.aux_thinning,
                theta_prime,
                &mut y_imp,
                &mut z_imp,
                &mut scratch,
                &mut rng,
            );
        }
        let base = dot_diff(theta_prime, &theta_j, &z_imp);
        let prior_part = prior.log_density(&theta_j) - lp_prime;
        free_sampler.sweeps(
            settings.j_burn_in,
            &theta_j,
            &mut y_aux,
            &mut z_aux,
            &mut scratch,
            &mut rng,
        );
        let mut acc = 0.0;
        for _ in 0..settings.m_draws {
            free_sampler.sweeps(
                settings.aux_thinning,
                &theta_j,
                &mut y_aux,
                &mut z_aux,
                &mut scratch,
                &mut rng,
            );
            acc += accept_prob(dot_diff(theta_prime, &theta_j, &z_aux) - base + prior_part);
        }
        den_terms.push(acc / settings.m_draws as f64);
    }
    let (denominator, den_sd) = mean_sd(&den_terms);
    let den_se = den_sd / (den_terms.len() as f64).sqrt();
    if !(numerator > 0.0 && denominator > 0.0) {
        return Err(AlaamError::Numerical(
            "posterior ordinate estimate is zero; θ′ lies outside the sampled region".into(),
        ));
    }
    Ok(PosteriorOrdinate {
        log_value: numerator.ln() - denominator.ln(),
        se: ((num_se / numerator).powi(2) + (den_se / denominator).powi(2)).sqrt(),
        numerator,
        denominator,
    })
}

/// Log marginal likelihood at `θ′` (the posterior mean unless set).
pub fn evidence(
    model: &Model<'_>,
    data: &AttributeData,
    clamp: &ClampMask,
    prior: &Prior,
    mechanism: &MissingMechanism,
    sample: &PosteriorSample,
    settings: &EvidenceSettings,
) -> Result<EvidenceResult> {
    check_supported(prior, mechanism)?;
    let theta_prime = settings
        .theta_prime
        .clone()
        .unwrap_or_else(|| sample.posterior_mean(settings.burn_in, settings.thinning));
    let proposal = Proposal::new(sample.proposal_cov.clone())?;
    let ordinate = posterior_ordinate(
        model,
        data,
        clamp,
        prior,
        mechanism,
        sample,
        &proposal,
        &theta_prime,
        settings,
    )?;
    let reference = independent_mle(model, data, clamp)?;
    let phi = mechanism.initial_phi();
    let ll = log_likelihood(
        model,
        &theta_prime,
        &reference,
        data,
        clamp,
        mechanism,
        &phi,
        &settings.path,
    )?;
    let log_prior = prior.log_density(&theta_prime);
    Ok(EvidenceResult {
        log_evidence: log_marginal_identity(ll.value, log_prior, ordinate.log_value),
        log_evidence_se: ll.se.hypot(ordinate.se),
        theta_prime,
        log_likelihood: ll.value,
        log_likelihood_se: ll.se,
        log_prior,
        log_posterior: ordinate.log_value,
        log_posterior_se: ordinate.se,
    })
}

/// Settings for the scaled normal prior `N(μ₀, λ·Cov_{μ₀}(z)⁻¹)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPriorSettings {
    /// Centre the intercept at `logit(ȳ)` instead of 0.
    pub data_dependent_intercept: bool,
    /// Simulation used to estimate `Cov_{μ₀}(z)`.
    pub simulation: SimulationSettings,
}

impl Default for ScaledPriorSettings {
    fn default() -> Self {
        Self {
            data_dependent_intercept: false,
            simulation: SimulationSettings {
                draws: 1000,
                ..Default::default()
            },
        }
    }
}

/// Prior centre: zero, with the intercept at `logit(ȳ)` over observed
/// outcomes when requested.
pub fn prior_centre(
    model: &Model<'_>,
    data: &AttributeData,
    data_dependent_intercept: bool,
) -> Vec<f64> {
    let mut mu0 = vec![0.0; model.dim()];
    if data_dependent_intercept {
        if let Some(k) = model.spec().index_of(&crate::model::EffectTerm::Intercept) {
            let obs = data.observed_count().max(1) as f64;
            let ones = (0..data.len())
                .filter(|&i| !data.missing[i] && data.y[i] == 1)
                .count() as f64;
            // keep the logit finite when every outcome is 0 or 1
            let ybar = ((ones + 0.5) / (obs + 1.0)).clamp(1e-6, 1.0 - 1e-6);
            mu0[k] = (ybar / (1.0 - ybar)).ln();
        }
    }
    mu0
}

/// One point of an evidence curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub model: String,
    pub lambda: f64,
    pub result: EvidenceResult,
}

/// Log evidence of each model across prior scales `λ`. Every point
/// estimates its own posterior under `N(μ₀, λ·Cov_{μ₀}(z)⁻¹)`.
#[allow(clippy::too_many_arguments)]
pub fn evidence_curve(
    models: &[(String, Model<'_>)],
    data: &AttributeData,
    clamp: &ClampMask,
    mechanism: &MissingMechanism,
    lambdas: &[f64],
    prior_settings: &ScaledPriorSettings,
    estimation: &EstimationSettings,
    settings: &EvidenceSettings,
) -> Result<Vec<CurvePoint>> {
    let jobs: Vec<(usize, f64)> = (0..models.len())
        .flat_map(|m| lambdas.iter().map(move |&l| (m, l)))
        .collect();
    jobs.par_iter()
        .enumerate()
        .map(|(k, &(m, lambda))| {
            let (label, model) = &models[m];
            let mu0 = prior_centre(model, data, prior_settings.data_dependent_intercept);
            let y0: Vec<u8> = data.y.clone();
            let mut sim = prior_settings.simulation.clone();
            sim.seed = sim.seed.wrapping_add(k as u64);
            let prior = Prior::normal_scaled(model, mu0, lambda, clamp, &y0, &sim)?;
            let est = EstimationSettings {
                seed: estimation.seed.wrapping_add(1000 * k as u64),
                ..estimation.clone()
            };
            let sample = run_estimation(model, data, clamp, &prior, mechanism, &est)?;
            let ev = EvidenceSettings {
                seed: settings.seed.wrapping_add(k as u64),
                ..settings.clone()
            };
            let result = evidence(model, data, clamp, &prior, mechanism, &sample, &ev)?;
            Ok(CurvePoint {
                model: label.clone(),
                lambda,
                result,
            })
        })
        .collect()
}
