//! Log-likelihood estimation by path sampling.
//!
//! `ψ(θ) − ψ(θ_ref) = ∫₀¹ (θ − θ_ref)ᵀ E_{θ_u}[z] du` along the line
//! `θ_u = θ_ref + u(θ − θ_ref)`, evaluated by the trapezoid rule on a
//! uniform grid of bridges. One chain runs through the bridges in order,
//! warm-started from the previous bridge.
//!
//! By default the expectation at each bridge uses a Rao–Blackwellised
//! estimator. Each statistic is multilinear and homogeneous of degree
//! `d_k` in `y`, so `d_k z_k(y) = Σᵢ yᵢ Δᵢₖ(y)` with `Δᵢₖ` free of `yᵢ`,
//! and `E[yᵢ Δᵢₖ] = E[pᵢ(y) Δᵢₖ(y)]` where `pᵢ` is the full conditional.

use rand::SeedableRng;

use crate::attributes::{AttributeData, ClampMask};
use crate::error::{AlaamError, Result};
use crate::logistic::independent_log_likelihood;
use crate::missing::{self, MissingMechanism, Phi};
use crate::simulate::{check_theta, logistic, SiteSampler, UpdateRule};
use crate::statistics::Model;
use crate::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct PathSettings {
    /// Grid points in `u`, including both ends.
    pub bridges: usize,
    /// Recorded samples per bridge.
    pub samples: usize,
    /// Sweeps before the first bridge.
    pub burn_in: usize,
    /// Sweeps on arrival at each later bridge.
    pub bridge_burn_in: usize,
    /// Sweeps between recorded samples. At 1 the samples within a bridge
    /// are correlated enough to double the error of the estimate.
    pub thinning: usize,
    pub rao_blackwell: bool,
    pub rule: UpdateRule,
    pub seed: u64,
}

impl Default for PathSettings {
    fn default() -> Self {
        Self {
            bridges: 20,
            samples: 100,
            burn_in: 50,
            bridge_burn_in: 5,
            thinning: 5,
            rao_blackwell: true,
            rule: UpdateRule::Gibbs,
            seed: 0,
        }
    }
}

impl PathSettings {
    pub fn validate(&self) -> Result<()> {
        if self.bridges < 2 {
            return Err(AlaamError::Config(
                "evaluation.bridges must be at least 2".into(),
            ));
        }
        if self.samples == 0 {
            return Err(AlaamError::Config(
                "evaluation.samples_per_bridge must be at least 1".into(),
            ));
        }
        if self.thinning == 0 {
            return Err(AlaamError::Config(
                "path thinning must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Point estimate with an approximate Monte Carlo standard error (samples
/// within a bridge treated as independent).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEstimate {
    pub value: f64,
    pub se: f64,
}

impl PathEstimate {
    pub const ZERO: Self = Self {
        value: 0.0,
        se: 0.0,
    };

    fn plus(self, other: Self, sign: f64) -> Self {
        Self {
            value: self.value + sign * other.value,
            se: self.se.hypot(other.se),
        }
    }
}

/// Rao–Blackwellised `E[z | y_{-i}]`-style estimate of `z` from one state.
fn rao_blackwell_stats(
    sampler: &SiteSampler<'_, '_>,
    is_free: &[bool],
    degrees: &[f64],
    theta: &[f64],
    y: &[u8],
    scratch: &mut [f64],
    out: &mut [f64],
) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..y.len() {
        let weight = if is_free[i] {
            logistic(sampler.conditional_log_odds(theta, y, i, scratch))
        } else if y[i] == 1 {
            sampler.model().change_into(y, i, scratch);
            1.0
        } else {
            continue;
        };
        for (o, c) in out.iter_mut().zip(scratch.iter()) {
            *o += weight * c;
        }
    }
    for (o, d) in out.iter_mut().zip(degrees) {
        *o /= d;
    }
}

/// `ψ(θ) − ψ(θ_ref)` where `ψ` sums `exp{θᵀz(y) + Σᵢ oᵢyᵢ}` over the
/// configurations of `free`, other nodes fixed at their values in `base`.
pub fn log_normalizer_difference(
    model: &Model<'_>,
    theta_ref: &[f64],
    theta: &[f64],
    free: Vec<usize>,
    offsets: Option<Vec<f64>>,
    base: &[u8],
    settings: &PathSettings,
) -> Result<PathEstimate> {
    settings.validate()?;
    check_theta(model, theta)?;
    check_theta(model, theta_ref)?;
    if theta == theta_ref {
        return Ok(PathEstimate::ZERO);
    }
    let n = model.node_count();
    let p = model.dim();
    let mut is_free = vec![false; n];
    for &i in &free {
        is_free[i] = true;
    }
    let sampler = SiteSampler::with_free(model, free)?
        .offsets(offsets)
        .rule(settings.rule);
    let degrees: Vec<f64> = model
        .spec()
        .terms
        .iter()
        .map(|t| f64::from(t.outcome_degree()))
        .collect();
    let delta: Vec<f64> = theta.iter().zip(theta_ref).map(|(a, b)| a - b).collect();
    let mut rng = SeededRng::seed_from_u64(settings.seed);

    let mut y = base.to_vec();
    let mut z = model.statistics(&y);
    let mut scratch = vec![0.0; p];
    let mut est = vec![0.0; p];
    let mut theta_u = theta_ref.to_vec();
    let h = 1.0 / (settings.bridges - 1) as f64;
    let m = settings.samples as f64;
    let (mut value, mut var) = (0.0, 0.0);
    for b in 0..settings.bridges {
        let u = b as f64 * h;
        for k in 0..p {
            theta_u[k] = theta_ref[k] + u * delta[k];
        }
        let warm = if b == 0 {
            settings.burn_in
        } else {
            settings.bridge_burn_in
        };
        sampler.sweeps(warm, &theta_u, &mut y, &mut z, &mut scratch, &mut rng);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..settings.samples {
            sampler.sweeps(
                settings.thinning,
                &theta_u,
                &mut y,
                &mut z,
                &mut scratch,
                &mut rng,
            );
            let stats: &[f64] = if settings.rao_blackwell {
                rao_blackwell_stats(
                    &sampler,
                    &is_free,
                    &degrees,
                    &theta_u,
                    &y,
                    &mut scratch,
                    &mut est,
                );
                &est
            } else {
                &z
            };
            let v: f64 = delta.iter().zip(stats).map(|(d, s)| d * s).sum();
            s1 += v;
            s2 += v * v;
        }
        let mean = s1 / m;
        let var_mean = if settings.samples > 1 {
            ((s2 - m * mean * mean) / (m - 1.0)).max(0.0) / m
        } else {
            0.0
        };
        let w = if b == 0 || b + 1 == settings.bridges {
            0.5 * h
        } else {
            h
        };
        value += w * mean;
        var += w * w * var_mean;
    }
    Ok(PathEstimate {
        value,
        se: var.sqrt(),
    })
}

/// `ℓ(θ) − ℓ(θ_ref)` for fully observed outcomes `y`, conditional on clamped
/// nodes.
pub fn path_loglik(
    model: &Model<'_>,
    theta: &[f64],
    theta_ref: &[f64],
    y: &[u8],
    clamp: &ClampMask,
    settings: &PathSettings,
) -> Result<PathEstimate> {
    if clamp.len() != y.len() || y.len() != model.node_count() {
        return Err(AlaamError::Dimension(
            "outcome vector or clamp mask length differs from n".into(),
        ));
    }
    let z = model.statistics(y);
    let linear: f64 = theta
        .iter()
        .zip(theta_ref)
        .zip(&z)
        .map(|((a, b), s)| (a - b) * s)
        .sum();
    let psi = log_normalizer_difference(
        model,
        theta_ref,
        theta,
        clamp.free_nodes(),
        None,
        y,
        settings,
    )?;
    Ok(PathEstimate {
        value: linear - psi.value,
        se: psi.se,
    })
}

/// `ℓ(θ) − ℓ(θ_ref)` with missing outcomes, `ℓ(θ) = ψ(θ, φ, I) − ψ(θ)`.
/// The first term sums over missing outcomes only (observed ones fixed),
/// weighting each by the mechanism; the second over all unclamped nodes.
#[allow(clippy::too_many_arguments)]
pub fn missing_data_loglik(
    model: &Model<'_>,
    theta: &[f64],
    theta_ref: &[f64],
    data: &AttributeData,
    clamp: &ClampMask,
    mechanism: &MissingMechanism,
    phi: &Phi,
    settings: &PathSettings,
) -> Result<PathEstimate> {
    let missing = data.missing_nodes();
    if missing.is_empty() {
        return path_loglik(model, theta, theta_ref, &data.y, clamp, settings);
    }
    let g = model.graph();
    let offsets: Vec<f64> = (0..model.node_count())
        .map(|i| {
            let (w0, w1) = missing::missing_log_weights(mechanism, phi, g.in_degree(i));
            w1 - w0
        })
        .collect();
    let restricted = log_normalizer_difference(
        model,
        theta_ref,
        theta,
        missing,
        Some(offsets),
        &data.y,
        settings,
    )?;
    let full_settings = PathSettings {
        seed: settings.seed ^ 0x9e37_79b9_7f4a_7c15,
        ..settings.clone()
    };
    let full = log_normalizer_difference(
        model,
        theta_ref,
        theta,
        clamp.free_nodes(),
        None,
        &data.y,
        &full_settings,
    )?;
    Ok(restricted.plus(full, -1.0))
}

/// Exact `ℓ(θ_ref)` for an independent reference parameter, including the
/// missingness mechanism's contribution.
pub fn reference_loglik(
    model: &Model<'_>,
    theta_ref: &[f64],
    data: &AttributeData,
    clamp: &ClampMask,
    mechanism: &MissingMechanism,
    phi: &Phi,
) -> Result<f64> {
    check_theta(model, theta_ref)?;
    if model
        .spec()
        .terms
        .iter()
        .zip(theta_ref)
        .any(|(t, v)| t.is_dependence() && *v != 0.0)
    {
        return Err(AlaamError::Precondition(
            "reference parameter must have every dependence coordinate at zero".into(),
        ));
    }
    let g = model.graph();
    let base = independent_log_likelihood(model, theta_ref, data, clamp, |i| {
        missing::missing_log_weights(mechanism, phi, g.in_degree(i))
    });
    Ok(base + observed_indicator_loglik(data, model, mechanism, phi))
}

/// `Σ log f(Iᵢ = 0 | yᵢ, φ)` over observed nodes; zero for ignorable
/// missingness and for the odds-shift limit, where these factors are
/// constants.
fn observed_indicator_loglik(
    data: &AttributeData,
    model: &Model<'_>,
    mechanism: &MissingMechanism,
    phi: &Phi,
) -> f64 {
    if matches!(
        mechanism,
        MissingMechanism::Mar | MissingMechanism::MnarOddsShift(_)
    ) {
        return 0.0;
    }
    let g = model.graph();
    (0..data.len())
        .filter(|&i| !data.missing[i])
        .map(|i| missing::node_log_prob(phi, data.y[i], g.in_degree(i), false))
        .sum()
}

/// Absolute `ℓ̂(θ)`: the exact reference value plus the path-sampled
/// difference.
#[allow(clippy::too_many_arguments)]
pub fn log_likelihood(
    model: &Model<'_>,
    theta: &[f64],
    theta_ref: &[f64],
    data: &AttributeData,
    clamp: &ClampMask,
    mechanism: &MissingMechanism,
    phi: &Phi,
    settings: &PathSettings,
) -> Result<PathEstimate> {
    let reference = reference_loglik(model, theta_ref, data, clamp, mechanism, phi)?;
    let diff = missing_data_loglik(
        model, theta, theta_ref, data, clamp, mechanism, phi, settings,
    )?;
    Ok(PathEstimate {
        value: reference + diff.value,
        se: diff.se,
    })
}
