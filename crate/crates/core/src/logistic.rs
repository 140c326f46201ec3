//! Maximum likelihood for the independent submodel.
//!
//! With every dependence term removed the outcomes are independent
//! Bernoulli variables and the model is an ordinary logistic regression on
//! the (constant) change statistics. The fit starts the samplers and serves
//! as the reference point for log-likelihood estimates.

use nalgebra::{DMatrix, DVector};

use crate::attributes::{AttributeData, ClampMask};
use crate::error::{AlaamError, Result};
use crate::simulate::{log1p_exp, logistic};
use crate::statistics::Model;

/// Ridge added to the Hessian so separated data still give a finite fit.
pub const DEFAULT_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    /// Inverse of the penalised observed information.
    pub covariance: DMatrix<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
}

/// Newton–Raphson fit of `logit Pr(yᵢ = 1) = xᵢᵀβ` with a small ridge.
pub fn fit_logistic(rows: &[Vec<f64>], y: &[u8], ridge: f64) -> Result<LogisticFit> {
    if rows.len() != y.len() {
        return Err(AlaamError::Dimension(
            "design rows and outcomes differ in length".into(),
        ));
    }
    let p = rows.first().map_or(0, Vec::len);
    let penalised = |beta: &DVector<f64>| -> f64 {
        let ll: f64 = rows
            .iter()
            .zip(y)
            .map(|(x, &yi)| {
                let eta: f64 = x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
                f64::from(yi) * eta - log1p_exp(eta)
            })
            .sum();
        ll - 0.5 * ridge * beta.norm_squared()
    };

    let mut beta = DVector::<f64>::zeros(p);
    let mut current = penalised(&beta);
    let mut hessian = DMatrix::<f64>::identity(p, p) * ridge;
    for iter in 1..=200 {
        let mut grad = -ridge * &beta;
        hessian = DMatrix::<f64>::identity(p, p) * ridge;
        for (x, &yi) in rows.iter().zip(y) {
            let eta: f64 = x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
            let mu = logistic(eta);
            let w = mu * (1.0 - mu);
            for a in 0..p {
                grad[a] += (f64::from(yi) - mu) * x[a];
                for b in 0..p {
                    hessian[(a, b)] += w * x[a] * x[b];
                }
            }
        }
        let chol = hessian.clone().cholesky().ok_or_else(|| {
            AlaamError::Numerical("logistic information matrix is not positive definite".into())
        })?;
        let step = chol.solve(&grad);
        let mut t = 1.0;
        let mut next = &beta + &step;
        let mut value = penalised(&next);
        while value < current - 1e-12 && t > 1e-8 {
            t *= 0.5;
            next = &beta + t * &step;
            value = penalised(&next);
        }
        let moved = (t * step.amax()).abs();
        beta = next;
        current = value;
        if moved < 1e-10 {
            let covariance = hessian
                .try_inverse()
                .unwrap_or_else(|| DMatrix::identity(p, p));
            return Ok(LogisticFit {
                coefficients: beta.iter().copied().collect(),
                covariance,
                log_likelihood: current + 0.5 * ridge * beta.norm_squared(),
                iterations: iter,
            });
        }
    }
    log::warn!("logistic fit stopped at the iteration limit");
    let covariance = hessian
        .try_inverse()
        .unwrap_or_else(|| DMatrix::identity(p, p));
    Ok(LogisticFit {
        coefficients: beta.iter().copied().collect(),
        covariance,
        log_likelihood: current + 0.5 * ridge * beta.norm_squared(),
        iterations: 200,
    })
}

/// Positions of the model's non-dependence terms.
pub fn independent_terms(model: &Model<'_>) -> Vec<usize> {
    model
        .spec()
        .terms
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.is_dependence())
        .map(|(k, _)| k)
        .collect()
}

/// Per-node linear predictors `ηᵢ = θᵀΔᵢ` for a parameter whose dependence
/// coordinates are zero, so that the outcomes are independent.
pub fn independent_log_odds(model: &Model<'_>, theta: &[f64]) -> Vec<f64> {
    let zeros = vec![0u8; model.node_count()];
    (0..model.node_count())
        .map(|i| model.log_odds(&zeros, i, theta))
        .collect()
}

/// Fits the independent submodel on observed, unclamped nodes and returns a
/// full-length parameter with dependence coordinates set to zero.
pub fn independent_mle(
    model: &Model<'_>,
    data: &AttributeData,
    clamp: &ClampMask,
) -> Result<Vec<f64>> {
    let keep = independent_terms(model);
    let mut theta = vec![0.0; model.dim()];
    if keep.is_empty() {
        return Ok(theta);
    }
    let zeros = vec![0u8; model.node_count()];
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    let mut change = vec![0.0; model.dim()];
    for i in 0..model.node_count() {
        if data.missing[i] || clamp.is_clamped(i) {
            continue;
        }
        model.change_into(&zeros, i, &mut change);
        rows.push(keep.iter().map(|&k| change[k]).collect());
        ys.push(data.y[i]);
    }
    if rows.is_empty() {
        return Err(AlaamError::Precondition(
            "no observed, unclamped outcomes to fit".into(),
        ));
    }
    let fit = fit_logistic(&rows, &ys, DEFAULT_RIDGE)?;
    for (&k, b) in keep.iter().zip(fit.coefficients) {
        theta[k] = b;
    }
    Ok(theta)
}

/// Exact log-likelihood under an independent parameter, treating missing
/// outcomes as summed out with per-node weights `w(0), w(1)` given on the
/// log scale by `missing_log_weights` (zero for ignorable missingness).
/// Clamped nodes contribute nothing.
pub fn independent_log_likelihood(
    model: &Model<'_>,
    theta: &[f64],
    data: &AttributeData,
    clamp: &ClampMask,
    missing_log_weights: impl Fn(usize) -> (f64, f64),
) -> f64 {
    let eta = independent_log_odds(model, theta);
    (0..model.node_count())
        .filter(|&i| !clamp.is_clamped(i))
        .map(|i| {
            let base = -log1p_exp(eta[i]);
            if data.missing[i] {
                let (w0, w1) = missing_log_weights(i);
                base + log_add_exp(w0, eta[i] + w1)
            } else {
                base + f64::from(data.y[i]) * eta[i]
            }
        })
        .sum()
}

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intercept_only_is_logit_of_mean() {
        let rows = vec![vec![1.0]; 10];
        let y = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
        let fit = fit_logistic(&rows, &y, 0.0).unwrap();
        assert!((fit.coefficients[0] - (0.3f64 / 0.7).ln()).abs() < 1e-8);
        // variance 1 / (n p (1 - p))
        assert!((fit.covariance[(0, 0)] - 1.0 / 2.1).abs() < 1e-6);
    }

    #[test]
    fn score_vanishes_at_fit() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, f64::from(i) / 10.0]).collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(i % 3 != 0 && i > 4)).collect();
        let fit = fit_logistic(&rows, &y, 0.0).unwrap();
        let mut score = [0.0; 2];
        for (x, &yi) in rows.iter().zip(&y) {
            let mu = logistic(x[0] * fit.coefficients[0] + x[1] * fit.coefficients[1]);
            score[0] += f64::from(yi) - mu;
            score[1] += (f64::from(yi) - mu) * x[1];
        }
        assert!(score.iter().all(|s| s.abs() < 1e-8), "{score:?}");
    }

    #[test]
    fn separated_data_stays_finite() {
        let rows = vec![vec![1.0]; 5];
        let fit = fit_logistic(&rows, &[0; 5], DEFAULT_RIDGE).unwrap();
        assert!(fit.coefficients[0].is_finite() && fit.coefficients[0] < -5.0);
    }

    #[test]
    fn log_add_exp_basic() {
        assert!((log_add_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 1.0), 1.0);
    }
}
