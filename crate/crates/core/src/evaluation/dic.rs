//! Posterior deviance and the two DIC variants.

use rayon::prelude::*;

use crate::attributes::{AttributeData, ClampMask};
use crate::error::{AlaamError, Result};
use crate::evaluation::path::{log_likelihood, reference_loglik, PathSettings};
use crate::exchange::PosteriorSample;
use crate::logistic::independent_mle;
use crate::missing::{MissingMechanism, Phi};
use crate::statistics::Model;

#[derive(Debug, Clone, PartialEq)]
pub struct DicSettings {
    pub burn_in: usize,
    pub thinning: usize,
    /// Upper bound on the number of posterior draws evaluated; draws are
    /// taken evenly spaced from the thinned sample.
    pub max_draws: Option<usize>,
    pub path: PathSettings,
}

impl Default for DicSettings {
    fn default() -> Self {
        Self {
            burn_in: 0,
            thinning: 1,
            max_draws: Some(200),
            path: PathSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DicResult {
    /// Independent-submodel parameter the log-likelihoods are anchored to.
    pub reference: Vec<f64>,
    /// `D(θ_t) = −2ℓ̂(θ_t)` per evaluated draw.
    pub deviances: Vec<f64>,
    pub d_bar: f64,
    /// Deviance at the posterior mean.
    pub d_hat: f64,
    pub p_d: f64,
    pub p_v: f64,
    pub dic_pd: f64,
    pub dic_pv: f64,
}

/// `p_D = D̄ − D(θ̄)`, `p_V = var(D)/2` and `DIC = D̄ + p`.
pub fn dic_from_deviances(deviances: &[f64], d_hat: f64) -> DicResult {
    let n = deviances.len() as f64;
    let d_bar = deviances.iter().sum::<f64>() / n;
    let var = if deviances.len() > 1 {
        deviances.iter().map(|d| (d - d_bar).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let p_d = d_bar - d_hat;
    let p_v = var / 2.0;
    DicResult {
        reference: Vec::new(),
        deviances: deviances.to_vec(),
        d_bar,
        d_hat,
        p_d,
        p_v,
        dic_pd: d_bar + p_d,
        dic_pv: d_bar + p_v,
    }
}

/// Empirical CDF as `(value, cumulative probability)` pairs.
pub fn deviance_cdf(deviances: &[f64]) -> Vec<(f64, f64)> {
    let mut v = deviances.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.into_iter()
        .enumerate()
        .map(|(k, d)| (d, (k + 1) as f64 / n))
        .collect()
}

/// Evenly spaced subset of at most `max` items.
fn spread<T: Clone>(items: Vec<T>, max: Option<usize>) -> Vec<T> {
    match max {
        Some(m) if m > 0 && items.len() > m => {
            let step = items.len() as f64 / m as f64;
            (0..m)
                .map(|k| items[(k as f64 * step) as usize].clone())
                .collect()
        }
        _ => items,
    }
}

/// Deviance of each selected posterior draw relative to the independent
/// submodel MLE, and the DIC summaries.
///
/// Models without dependence terms have a closed-form likelihood, which is
/// used directly instead of path sampling.
pub fn posterior_deviance(
    model: &Model<'_>,
    data: &AttributeData,
    clamp: &ClampMask,
    mechanism: &MissingMechanism,
    sample: &PosteriorSample,
    settings: &DicSettings,
) -> Result<DicResult> {
    let thetas = sample.pooled_theta(settings.burn_in, settings.thinning);
    if thetas.is_empty() {
        return Err(AlaamError::Precondition(
            "no posterior draws remain after burn-in".into(),
        ));
    }
    let phis: Vec<Phi> = sample.pooled(settings.burn_in, settings.thinning, |c| &c.phi);
    let draws = spread(
        thetas.into_iter().zip(phis).collect::<Vec<_>>(),
        settings.max_draws,
    );
    let reference = independent_mle(model, data, clamp)?;
    let exact = !model.spec().has_dependence();

    let loglik = |theta: &[f64], phi: &Phi, seed: u64| -> Result<f64> {
        if exact {
            return reference_loglik(model, theta, data, clamp, mechanism, phi);
        }
        let path = PathSettings {
            seed,
            ..settings.path.clone()
        };
        Ok(log_likelihood(model, theta, &reference, data, clamp, mechanism, phi, &path)?.value)
    };

    let deviances = draws
        .par_iter()
        .enumerate()
        .map(|(t, (theta, phi))| {
            loglik(theta, phi, settings.path.seed.wrapping_add(t as u64 + 1)).map(|l| -2.0 * l)
        })
        .collect::<Result<Vec<_>>>()?;

    let p = model.dim();
    let k = draws.len() as f64;
    let mut mean_theta = vec![0.0; p];
    let mut mean_phi = [0.0; 3];
    for (theta, phi) in &draws {
        for j in 0..p {
            mean_theta[j] += theta[j] / k;
        }
        for j in 0..3 {
            mean_phi[j] += phi[j] / k;
        }
    }
    let d_hat = -2.0 * loglik(&mean_theta, &mean_phi, settings.path.seed)?;
    let mut result = dic_from_deviances(&deviances, d_hat);
    result.reference = reference;
    Ok(result)
}
