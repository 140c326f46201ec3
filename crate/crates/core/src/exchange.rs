//! Posterior sampling by the exchange algorithm, with missing outcomes and
//! an optional non-ignorable missingness mechanism.
//!
//! Each iteration proposes `θ* ~ N(θ, Σ_h)`, simulates an auxiliary outcome
//! vector `y*` under `θ*` by single-site updates started from the current
//! data, and accepts with probability `min{1, H}` where
//! `log H = (θ − θ*)ᵀ(z(y*) − z(y)) + log π(θ*) − log π(θ)`.
//! Missing outcomes are then updated by Metropolis toggles and, when the
//! mechanism is estimated, `φ` by a random walk.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::attributes::{AttributeData, ClampMask};
use crate::error::{AlaamError, Result};
use crate::logistic::independent_mle;
use crate::missing::{self, MissingMechanism, Phi};
use crate::prior::{Prior, Proposal};
use crate::simulate::{
    covariance_of, initial_outcomes, SimulationSettings, SiteSampler, UpdateRule,
};
use crate::statistics::{gof_statistics, Model};
use crate::SeededRng;

/// Largest parameter magnitude tolerated before a chain is declared
/// divergent.
pub const DIVERGENCE_BOUND: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct ProposalSettings {
    /// Scale constant `c` in `Σ_h = c·p^{-1/2}·Cov_{θ₀}(z)⁻¹`.
    pub scale: f64,
    /// Draws in the pilot simulation at `θ₀`.
    pub pilot_draws: usize,
    pub pilot_burn_in: usize,
    /// When positive, a pilot exchange run of this many iterations replaces
    /// `Cov_{θ₀}(z)⁻¹` by the pilot posterior covariance.
    pub adapt_iterations: usize,
}

impl Default for ProposalSettings {
    fn default() -> Self {
        Self {
            scale: 1.0,
            pilot_draws: 1000,
            pilot_burn_in: 100,
            adapt_iterations: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationSettings {
    /// Iterations per chain; every iteration is recorded.
    pub iterations: usize,
    /// Sweeps (one sweep = as many single-site updates as free nodes) used
    /// to draw each auxiliary vector.
    pub aux_sweeps: usize,
    pub proposal: ProposalSettings,
    pub chains: usize,
    pub seed: u64,
    pub rule: UpdateRule,
    /// Record the goodness-of-fit battery for predictive and imputed data.
    pub record_gof: bool,
    /// Starting parameter; defaults to the independent-submodel MLE.
    pub initial_theta: Option<Vec<f64>>,
}

impl Default for EstimationSettings {
    fn default() -> Self {
        Self {
            iterations: 5000,
            aux_sweeps: 50,
            proposal: ProposalSettings::default(),
            chains: 1,
            seed: 0,
            rule: UpdateRule::Gibbs,
            record_gof: false,
            initial_theta: None,
        }
    }
}

impl EstimationSettings {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(AlaamError::Config(
                "sampler.iterations must be at least 1".into(),
            ));
        }
        if self.aux_sweeps == 0 {
            return Err(AlaamError::Config(
                "sampler.aux_sweeps must be at least 1".into(),
            ));
        }
        if self.chains == 0 {
            return Err(AlaamError::Config(
                "sampler.chains must be at least 1".into(),
            ));
        }
        if !(self.proposal.scale > 0.0 && self.proposal.scale.is_finite()) {
            return Err(AlaamError::Config("sampler.scale must be positive".into()));
        }
        if self.proposal.pilot_draws < 100 {
            return Err(AlaamError::Config(
                "sampler.pilot_draws must be at least 100".into(),
            ));
        }
        Ok(())
    }
}

/// Mutable state of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub theta: Vec<f64>,
    /// Outcomes with missing entries imputed; observed entries never change.
    pub y: Vec<u8>,
    /// `z(y, x)` for the current `y`.
    pub z: Vec<f64>,
    pub phi: Phi,
    pub iteration: usize,
}

impl ChainState {
    pub fn new(model: &Model<'_>, theta: Vec<f64>, y: Vec<u8>, phi: Phi) -> Self {
        let z = model.statistics(&y);
        Self {
            theta,
            y,
            z,
            phi,
            iteration: 0,
        }
    }
}

/// `log H` of the exchange move from `theta` to `theta_star`.
pub fn exchange_log_ratio(
    theta: &[f64],
    theta_star: &[f64],
    z_data: &[f64],
    z_aux: &[f64],
    prior: &Prior,
) -> f64 {
    let exponent: f64 = theta
        .iter()
        .zip(theta_star)
        .zip(z_aux.iter().zip(z_data))
        .map(|((t, s), (a, d))| (t - s) * (a - d))
        .sum();
    exponent + prior.log_density(theta_star) - prior.log_density(theta)
}

/// Outcome of one exchange step.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeOutcome {
    pub accepted: bool,
    pub log_ratio: f64,
    pub aux_y: Vec<u8>,
    pub aux_z: Vec<f64>,
}

/// Draws from the posterior of one model on one data set.
pub struct ExchangeSampler<'m, 'a> {
    model: &'m Model<'a>,
    data: &'m AttributeData,
    prior: &'m Prior,
    mechanism: &'m MissingMechanism,
    proposal: Proposal,
    aux: SiteSampler<'m, 'a>,
    aux_sweeps: usize,
    missing_nodes: Vec<usize>,
}

impl<'m, 'a> ExchangeSampler<'m, 'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: &'m Model<'a>,
        data: &'m AttributeData,
        clamp: &ClampMask,
        prior: &'m Prior,
        mechanism: &'m MissingMechanism,
        proposal: Proposal,
        aux_sweeps: usize,
        rule: UpdateRule,
    ) -> Result<Self> {
        data.check_len(model.node_count())?;
        clamp.check(data)?;
        if proposal.dim() != model.dim() {
            return Err(AlaamError::Dimension(
                "proposal dimension differs from the model".into(),
            ));
        }
        Ok(Self {
            model,
            data,
            prior,
            mechanism,
            proposal,
            aux: SiteSampler::new(model, clamp)?.rule(rule),
            aux_sweeps,
            missing_nodes: data.missing_nodes(),
        })
    }

    pub fn proposal(&self) -> &Proposal {
        &self.proposal
    }

    pub fn missing_nodes(&self) -> &[usize] {
        &self.missing_nodes
    }

    /// Simulates `aux_sweeps` sweeps under `theta` starting from `y`.
    pub fn auxiliary<R: Rng + ?Sized>(
        &self,
        theta: &[f64],
        y: &[u8],
        z: &[f64],
        rng: &mut R,
    ) -> (Vec<u8>, Vec<f64>) {
        let mut ys = y.to_vec();
        let mut zs = z.to_vec();
        let mut scratch = vec![0.0; self.model.dim()];
        self.aux
            .sweeps(self.aux_sweeps, theta, &mut ys, &mut zs, &mut scratch, rng);
        (ys, zs)
    }

    /// Proposes `θ*`, draws `y*` under it and applies the exchange
    /// acceptance rule to `state`.
    pub fn exchange_step<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        rng: &mut R,
    ) -> Result<ExchangeOutcome> {
        let mut theta_star = vec![0.0; self.model.dim()];
        self.proposal.propose(&state.theta, rng, &mut theta_star);
        let (aux_y, aux_z) = self.auxiliary(&theta_star, &state.y, &state.z, rng);
        let log_ratio = exchange_log_ratio(&state.theta, &theta_star, &state.z, &aux_z, self.prior);
        let accepted = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
        if accepted {
            if let Some(k) = theta_star.iter().position(|t| t.abs() > DIVERGENCE_BOUND) {
                return Err(AlaamError::Numerical(format!(
                    "parameter {} reached {:.3e} at iteration {}; the posterior is likely degenerate \
                     (separation or a statistic on the boundary of its range)",
                    self.model.names()[k],
                    theta_star[k],
                    state.iteration
                )));
            }
            state.theta = theta_star;
        }
        Ok(ExchangeOutcome {
            accepted,
            log_ratio,
            aux_y,
            aux_z,
        })
    }

    /// Metropolis toggles of every missing outcome in random order.
    /// Returns the number of accepted toggles.
    pub fn update_missing<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) -> usize {
        if self.missing_nodes.is_empty() {
            return 0;
        }
        let mut order = self.missing_nodes.clone();
        order.shuffle(rng);
        let mut change = vec![0.0; self.model.dim()];
        let mut accepted = 0;
        for i in order {
            self.model.change_into(&state.y, i, &mut change);
            let sign = if state.y[i] == 0 { 1.0 } else { -1.0 };
            let model_part: f64 = sign
                * change
                    .iter()
                    .zip(&state.theta)
                    .map(|(c, t)| c * t)
                    .sum::<f64>();
            let mech_part = missing::toggle_log_ratio(
                self.mechanism,
                &state.phi,
                state.y[i],
                self.model.graph().in_degree(i),
            );
            let log_ratio = model_part + mech_part;
            if log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio {
                state.y[i] = 1 - state.y[i];
                for (zk, ck) in state.z.iter_mut().zip(&change) {
                    *zk += sign * ck;
                }
                accepted += 1;
            }
        }
        accepted
    }

    /// Random-walk Metropolis update of `φ`. A no-op returning `false`
    /// unless the mechanism is estimated.
    pub fn update_phi<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) -> bool {
        let MissingMechanism::MnarEstimated { prior, spread, .. } = self.mechanism else {
            return false;
        };
        let mut proposal = state.phi;
        for v in &mut proposal {
            *v += spread * rng.sample::<f64, _>(StandardNormal);
        }
        let g = self.model.graph();
        let log_ratio = missing::log_likelihood(&proposal, &state.y, &self.data.missing, g)
            + prior.log_density(&proposal)
            - missing::log_likelihood(&state.phi, &state.y, &self.data.missing, g)
            - prior.log_density(&state.phi);
        if log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio {
            state.phi = proposal;
            true
        } else {
            false
        }
    }

    /// Runs `iterations` full iterations from `state`, recording each.
    /// `predictive_y` seeds the predictive record until the first acceptance.
    pub fn run_chain<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        iterations: usize,
        predictive_y: &[u8],
        record_gof: bool,
        rng: &mut R,
    ) -> Result<ChainSample> {
        let g = self.model.graph();
        let has_missing = !self.missing_nodes.is_empty();
        let mut out = ChainSample::with_capacity(iterations);
        let mut pred_z = self.model.statistics(predictive_y);
        let mut pred_gof = if record_gof {
            gof_statistics(predictive_y, g)
        } else {
            Vec::new()
        };
        let mut missing_accepts = 0usize;
        let mut phi_accepts = 0usize;
        for _ in 0..iterations {
            let step = self.exchange_step(state, rng)?;
            if step.accepted {
                pred_z = step.aux_z;
                if record_gof {
                    pred_gof = gof_statistics(&step.aux_y, g);
                }
            }
            missing_accepts += self.update_missing(state, rng);
            phi_accepts += usize::from(self.update_phi(state, rng));
            state.iteration += 1;

            out.theta.push(state.theta.clone());
            out.accepted.push(step.accepted);
            out.predictive.push(pred_z.clone());
            out.data_stats.push(state.z.clone());
            out.phi.push(state.phi);
            if has_missing {
                out.imputations
                    .push(self.missing_nodes.iter().map(|&i| state.y[i]).collect());
            }
            if record_gof {
                out.predictive_gof.push(pred_gof.clone());
                if has_missing {
                    out.data_gof.push(gof_statistics(&state.y, g));
                }
            }
        }
        let proposals = iterations * self.missing_nodes.len();
        out.missing_acceptance = (proposals > 0).then(|| missing_accepts as f64 / proposals as f64);
        out.phi_acceptance = self
            .mechanism
            .estimates_phi()
            .then(|| phi_accepts as f64 / iterations as f64);
        Ok(out)
    }
}

/// Recorded history of one chain, one entry per iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainSample {
    pub theta: Vec<Vec<f64>>,
    pub accepted: Vec<bool>,
    /// `z` of the posterior-predictive draw: the latest accepted `y*`.
    pub predictive: Vec<Vec<f64>>,
    /// `z` of the data with current imputations.
    pub data_stats: Vec<Vec<f64>>,
    /// Imputed values at the missing nodes, in node order.
    pub imputations: Vec<Vec<u8>>,
    pub phi: Vec<Phi>,
    /// Goodness-of-fit battery of the predictive draw (when recorded).
    pub predictive_gof: Vec<Vec<f64>>,
    /// Battery of the imputed data (recorded only with missing outcomes).
    pub data_gof: Vec<Vec<f64>>,
    /// Fraction of accepted missing-outcome toggles; `None` without missing data.
    pub missing_acceptance: Option<f64>,
    /// `None` unless the mechanism is estimated.
    pub phi_acceptance: Option<f64>,
}

impl ChainSample {
    fn with_capacity(t: usize) -> Self {
        Self {
            theta: Vec::with_capacity(t),
            accepted: Vec::with_capacity(t),
            predictive: Vec::with_capacity(t),
            data_stats: Vec::with_capacity(t),
            phi: Vec::with_capacity(t),
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted.iter().filter(|&&a| a).count() as f64 / self.accepted.len().max(1) as f64
    }

    /// Draws of coordinate `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.theta.iter().map(|t| t[k]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PosteriorSample {
    pub names: Vec<String>,
    pub missing_nodes: Vec<usize>,
    pub chains: Vec<ChainSample>,
    /// Starting parameter and pilot-simulation point.
    pub theta0: Vec<f64>,
    pub proposal_cov: DMatrix<f64>,
    pub seed: u64,
}

impl PosteriorSample {
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    /// Draws of every chain after discarding `burn_in` per chain and keeping
    /// every `thinning`-th, concatenated in chain order.
    pub fn pooled_theta(&self, burn_in: usize, thinning: usize) -> Vec<Vec<f64>> {
        self.pooled(burn_in, thinning, |c| &c.theta)
    }

    pub fn pooled<T: Clone>(
        &self,
        burn_in: usize,
        thinning: usize,
        field: impl Fn(&ChainSample) -> &Vec<T>,
    ) -> Vec<T> {
        let step = thinning.max(1);
        self.chains
            .iter()
            .flat_map(|c| {
                field(c)
                    .iter()
                    .skip(burn_in)
                    .step_by(step)
                    .cloned()
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// Mean of the pooled draws.
    pub fn posterior_mean(&self, burn_in: usize, thinning: usize) -> Vec<f64> {
        let draws = self.pooled_theta(burn_in, thinning);
        let mut mean = vec![0.0; self.dim()];
        for t in &draws {
            for (m, v) in mean.iter_mut().zip(t) {
                *m += v / draws.len() as f64;
            }
        }
        mean
    }
}

fn chain_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = SeededRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Pilot simulation at `θ₀`: returns the proposal and the final pilot
/// outcome vector.
fn pilot(
    model: &Model<'_>,
    data: &AttributeData,
    clamp: &ClampMask,
    theta0: &[f64],
    settings: &EstimationSettings,
    rng: &mut SeededRng,
) -> Result<(Proposal, Vec<u8>)> {
    let y0 = initial_outcomes(data, rng);
    let sim = SimulationSettings {
        burn_in: settings.proposal.pilot_burn_in,
        thinning: 1,
        draws: settings.proposal.pilot_draws,
        rule: settings.rule,
        seed: rng.random(),
        ..Default::default()
    };
    let mut draws = Vec::with_capacity(sim.draws);
    let mut last = y0.clone();
    crate::simulate::sample_with(model, theta0, &sim, clamp, &y0, |y, z| {
        draws.push(z.to_vec());
        last.copy_from_slice(y);
    })?;
    let stats = covariance_of(&draws);
    if !stats.degenerate.is_empty() {
        log::warn!(
            "statistics {:?} do not vary at the starting parameter; the proposal is regularised",
            stats
                .degenerate
                .iter()
                .map(|&k| model.names()[k].clone())
                .collect::<Vec<_>>()
        );
    }
    Ok((
        Proposal::from_stat_covariance(&stats.cov, settings.proposal.scale)?,
        last,
    ))
}

/// Full estimation: pilot tuning at the independent-submodel MLE, then
/// independent chains (in parallel) from the same start.
pub fn run_estimation(
    model: &Model<'_>,
    data: &AttributeData,
    clamp: &ClampMask,
    prior: &Prior,
    mechanism: &MissingMechanism,
    settings: &EstimationSettings,
) -> Result<PosteriorSample> {
    settings.validate()?;
    mechanism.validate()?;
    data.check_len(model.node_count())?;
    clamp.check(data)?;
    if data.observed_count() == 0 {
        return Err(AlaamError::Precondition("no observed outcomes".into()));
    }
    if let Prior::Normal(d) = prior {
        if d.dim() != model.dim() {
            return Err(AlaamError::Dimension(
                "prior dimension differs from the model".into(),
            ));
        }
    }
    let theta0 = match &settings.initial_theta {
        Some(t) => {
            crate::simulate::check_theta(model, t)?;
            t.clone()
        }
        None => independent_mle(model, data, clamp)?,
    };

    let mut pilot_rng = chain_rng(settings.seed, 0);
    let (mut proposal, pilot_y) = pilot(model, data, clamp, &theta0, settings, &mut pilot_rng)?;
    let mut start_theta = theta0.clone();
    if settings.proposal.adapt_iterations > 0 {
        let sampler = ExchangeSampler::new(
            model,
            data,
            clamp,
            prior,
            mechanism,
            proposal.clone(),
            settings.aux_sweeps,
            settings.rule,
        )?;
        let mut state = ChainState::new(
            model,
            theta0.clone(),
            pilot_y.clone(),
            mechanism.initial_phi(),
        );
        let run = sampler.run_chain(
            &mut state,
            settings.proposal.adapt_iterations,
            &pilot_y,
            false,
            &mut pilot_rng,
        )?;
        let half = run.theta.len() / 2;
        let post = covariance_of(&run.theta[half..]);
        let p = model.dim() as f64;
        proposal = Proposal::new(post.cov * (settings.proposal.scale / p.sqrt()))?;
        start_theta = state.theta;
    }

    let sampler = ExchangeSampler::new(
        model,
        data,
        clamp,
        prior,
        mechanism,
        proposal.clone(),
        settings.aux_sweeps,
        settings.rule,
    )?;
    let chains = (0..settings.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = chain_rng(settings.seed, c as u64 + 1);
            let y = initial_outcomes(data, &mut rng);
            let mut state = ChainState::new(model, start_theta.clone(), y, mechanism.initial_phi());
            sampler.run_chain(
                &mut state,
                settings.iterations,
                &pilot_y,
                settings.record_gof,
                &mut rng,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    for (c, chain) in chains.iter().enumerate() {
        log::info!("chain {c}: acceptance {:.3}", chain.acceptance_rate());
    }
    Ok(PosteriorSample {
        names: model.names(),
        missing_nodes: data.missing_nodes(),
        chains,
        theta0,
        proposal_cov: proposal.cov().clone(),
        seed: settings.seed,
    })
}
