//! Bayesian inference for auto-logistic actor-attribute models (ALAAM).
//!
//! Binary node outcomes `y` on a fixed directed graph `x` follow the
//! exponential family `p(y | x) = exp{θᵀz(y, x) − ψ(θ)}`. This crate
//! provides the statistic catalogue, single-site samplers, exchange-algorithm
//! posterior sampling with missing outcomes, posterior-predictive
//! goodness of fit, path-sampled log-likelihoods, DIC and marginal
//! likelihood estimation.

pub mod attributes;
pub mod error;
pub mod evaluation;
pub mod exchange;
pub mod graph;
pub mod logistic;
pub mod missing;
pub mod model;
pub mod prior;
pub mod simulate;
pub mod statistics;

pub use attributes::{load_attributes, load_clamp, AttributeData, ClampMask, Covariates};
pub use error::{AlaamError, Result};
pub use exchange::{
    exchange_log_ratio, run_estimation, ChainSample, ChainState, EstimationSettings,
    ExchangeSampler, PosteriorSample, ProposalSettings,
};
pub use graph::{load_graph, write_graph, DirectedGraph, IndexBase};
pub use logistic::{fit_logistic, independent_mle, LogisticFit};
pub use missing::{MissingMechanism, Phi, PhiPrior};
pub use model::{validate_spec, EffectTerm, ModelSpec, SpecViolation};
pub use prior::{MvNormal, Prior, Proposal};
pub use simulate::{
    estimate_stat_covariance, exact_distribution, full_conditional, sample, ExactDistribution,
    ScanOrder, SimulationOutput, SimulationSettings, SiteSampler, StatCovariance, UpdateRule,
};
pub use statistics::{
    bind_model, change_statistics, compute_statistics, gof_statistics, Model, GOF_NAMES,
};

/// Random number generator used by every sampler in the crate.
pub type SeededRng = rand_chacha::ChaCha8Rng;
