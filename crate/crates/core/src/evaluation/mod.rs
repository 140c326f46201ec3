//! Post-estimation tools: summaries, goodness of fit, likelihood and
//! deviance estimates, the marginal likelihood and the sensitivity sweep.

pub mod dic;
pub mod evidence;
pub mod gof;
pub mod path;
pub mod sensitivity;
pub mod summary;

pub use dic::{posterior_deviance, DicResult, DicSettings};
pub use evidence::{
    check_supported, evidence, evidence_curve, log_marginal_identity, posterior_ordinate,
    prior_centre, CurvePoint, EvidenceResult, EvidenceSettings, PosteriorOrdinate,
    ScaledPriorSettings,
};
pub use gof::{gof, GofRow};
pub use path::{
    log_likelihood, missing_data_loglik, path_loglik, reference_loglik, PathEstimate, PathSettings,
};
pub use sensitivity::{mnar_sweep, sweep_rows, SweepPoint};
pub use summary::{
    autocorrelation, effective_sample_size, summarize, summarize_phi, ParameterSummary,
};
