//! Missing-outcome mechanisms `f(I | y, φ)`.
//!
//! The indicator `Iᵢ = 1` marks an unobserved outcome, with
//! `logit Pr(Iᵢ = 1 | y, x) = φ₀ + φ₁ yᵢ + φ₂ x₊ᵢ` independently over nodes.

use crate::error::{AlaamError, Result};
use crate::graph::DirectedGraph;
use crate::simulate::log1p_exp;

pub type Phi = [f64; 3];

/// Independent normal prior on the three mechanism coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiPrior {
    pub mean: Phi,
    pub sd: Phi,
}

impl Default for PhiPrior {
    fn default() -> Self {
        Self {
            mean: [0.0; 3],
            sd: [10.0; 3],
        }
    }
}

impl PhiPrior {
    pub fn log_density(&self, phi: &Phi) -> f64 {
        (0..3)
            .map(|k| {
                let z = (phi[k] - self.mean[k]) / self.sd[k];
                -0.5 * z * z - self.sd[k].ln()
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum MissingMechanism {
    /// Ignorable missingness: `f` does not depend on `y` and drops out.
    #[default]
    Mar,
    /// Non-ignorable missingness with known coefficients.
    MnarFixed(Phi),
    /// Limit of the logistic mechanism as missingness becomes rare
    /// (`φ₀ → −∞`): a missing outcome has its odds of being 1 multiplied
    /// by `exp(φ₁)`, and `φ₀`, `φ₂` drop out. Constant factors of `f` are
    /// dropped, so likelihoods under this mechanism are defined up to a
    /// term that does not depend on `θ`.
    MnarOddsShift(f64),
    /// Coefficients sampled by random-walk Metropolis with independent
    /// normal steps of standard deviation `spread`.
    MnarEstimated {
        init: Phi,
        prior: PhiPrior,
        spread: f64,
    },
}

impl MissingMechanism {
    pub fn initial_phi(&self) -> Phi {
        match self {
            Self::Mar => [0.0; 3],
            Self::MnarFixed(phi) => *phi,
            Self::MnarOddsShift(phi1) => [0.0, *phi1, 0.0],
            Self::MnarEstimated { init, .. } => *init,
        }
    }

    pub fn is_ignorable(&self) -> bool {
        matches!(self, Self::Mar)
    }

    pub fn estimates_phi(&self) -> bool {
        matches!(self, Self::MnarEstimated { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |phi: &Phi| phi.iter().any(|v| !v.is_finite());
        match self {
            Self::Mar => Ok(()),
            Self::MnarFixed(phi) if bad(phi) => {
                Err(AlaamError::Config("missing.phi must be finite".into()))
            }
            Self::MnarFixed(_) => Ok(()),
            Self::MnarOddsShift(phi1) if !phi1.is_finite() => {
                Err(AlaamError::Config("missing.phi1 must be finite".into()))
            }
            Self::MnarOddsShift(_) => Ok(()),
            Self::MnarEstimated {
                init,
                prior,
                spread,
            } => {
                if bad(init) || bad(&prior.mean) {
                    return Err(AlaamError::Config("missing.phi must be finite".into()));
                }
                if prior.sd.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(AlaamError::Config(
                        "missing.phi_prior_sd must be positive".into(),
                    ));
                }
                if !(*spread > 0.0 && spread.is_finite()) {
                    return Err(AlaamError::Config(
                        "missing.phi_spread must be positive".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

fn log_sigmoid(t: f64) -> f64 {
    -log1p_exp(-t)
}

/// `log Pr(Iᵢ = indicator | yᵢ, x₊ᵢ, φ)`
pub fn node_log_prob(phi: &Phi, y_i: u8, in_degree: usize, indicator: bool) -> f64 {
    let eta = phi[0] + phi[1] * f64::from(y_i) + phi[2] * in_degree as f64;
    if indicator {
        log_sigmoid(eta)
    } else {
        log_sigmoid(-eta)
    }
}

/// `log f(I | y, φ)` over all nodes.
pub fn log_likelihood(phi: &Phi, y: &[u8], missing: &[bool], graph: &DirectedGraph) -> f64 {
    (0..y.len())
        .map(|i| node_log_prob(phi, y[i], graph.in_degree(i), missing[i]))
        .sum()
}

/// `log f(I | Δᵢy, φ) − log f(I | y, φ)` for a missing node `i`. Only node
/// `i`'s own factor changes.
pub fn toggle_log_ratio(mechanism: &MissingMechanism, phi: &Phi, y_i: u8, in_degree: usize) -> f64 {
    match mechanism {
        MissingMechanism::Mar => 0.0,
        MissingMechanism::MnarOddsShift(phi1) => phi1 * (1.0 - 2.0 * f64::from(y_i)),
        _ => {
            node_log_prob(phi, 1 - y_i, in_degree, true) - node_log_prob(phi, y_i, in_degree, true)
        }
    }
}

/// Log weights `(log f_i(yᵢ = 0), log f_i(yᵢ = 1))` of a missing node's
/// indicator factor; both zero when missingness is ignorable.
pub fn missing_log_weights(
    mechanism: &MissingMechanism,
    phi: &Phi,
    in_degree: usize,
) -> (f64, f64) {
    match mechanism {
        MissingMechanism::Mar => (0.0, 0.0),
        MissingMechanism::MnarOddsShift(phi1) => (0.0, *phi1),
        _ => (
            node_log_prob(phi, 0, in_degree, true),
            node_log_prob(phi, 1, in_degree, true),
        ),
    }
}
