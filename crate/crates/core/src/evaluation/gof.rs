//! Posterior-predictive goodness of fit on the fixed statistic battery.
//!
//! Tail probabilities use the min-tail convention with ties counted half:
//! `p = min{(#{s > s_obs} + ½#{s = s_obs}) / N, (#{s < s_obs} + ½#{s = s_obs}) / N}`,
//! so `p ∈ [0, 0.5]`.

use crate::error::{AlaamError, Result};
use crate::exchange::PosteriorSample;
use crate::graph::DirectedGraph;
use crate::statistics::{gof_statistics, GOF_NAMES};

#[derive(Debug, Clone, PartialEq)]
pub struct GofRow {
    pub name: String,
    /// Observed value; with missing outcomes, the posterior mean over
    /// imputations.
    pub observed: f64,
    pub predictive_mean: f64,
    pub p_value: f64,
}

/// Min-tail p-value of `observed` against simulated values.
pub fn tail_p_value(observed: f64, simulated: &[f64]) -> f64 {
    paired_tail_p_value(simulated.iter().map(|&s| (observed, s)))
}

/// Min-tail p-value over `(observed, simulated)` pairs, used when the
/// observed value varies with imputed data.
pub fn paired_tail_p_value(pairs: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let (mut above, mut below, mut ties, mut n) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (obs, sim) in pairs {
        n += 1.0;
        if sim > obs {
            above += 1.0;
        } else if sim < obs {
            below += 1.0;
        } else {
            ties += 1.0;
        }
    }
    if n == 0.0 {
        return f64::NAN;
    }
    ((above + 0.5 * ties) / n).min((below + 0.5 * ties) / n)
}

/// Goodness-of-fit table from a posterior sample recorded with the battery.
/// `y` holds the observed outcomes (missing entries ignored when imputed
/// batteries are present).
pub fn gof(
    sample: &PosteriorSample,
    y: &[u8],
    graph: &DirectedGraph,
    burn_in: usize,
    thinning: usize,
) -> Result<Vec<GofRow>> {
    let predictive = sample.pooled(burn_in, thinning, |c| &c.predictive_gof);
    if predictive.is_empty() {
        return Err(AlaamError::Precondition(
            "posterior sample has no predictive battery; estimate with goodness of fit recording enabled".into(),
        ));
    }
    let imputed = if sample.missing_nodes.is_empty() {
        Vec::new()
    } else {
        sample.pooled(burn_in, thinning, |c| &c.data_gof)
    };
    let fixed = gof_statistics(y, graph);
    let n = predictive.len() as f64;
    Ok(GOF_NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let predictive_mean = predictive.iter().map(|s| s[k]).sum::<f64>() / n;
            let (observed, p_value) = if imputed.is_empty() {
                (
                    fixed[k],
                    tail_p_value(
                        fixed[k],
                        &predictive.iter().map(|s| s[k]).collect::<Vec<_>>(),
                    ),
                )
            } else {
                let obs_mean = imputed.iter().map(|s| s[k]).sum::<f64>() / imputed.len() as f64;
                let p =
                    paired_tail_p_value(imputed.iter().zip(&predictive).map(|(o, s)| (o[k], s[k])));
                (obs_mean, p)
            };
            GofRow {
                name: (*name).to_owned(),
                observed,
                predictive_mean,
                p_value,
            }
        })
        .collect())
}
