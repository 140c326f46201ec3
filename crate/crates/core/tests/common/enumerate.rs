//! Exact distributions by listing every outcome configuration.

use std::collections::HashMap;

use alaam::{compute_statistics, Covariates, DirectedGraph, ModelSpec};

/// All `2^n` outcome vectors with their unnormalised log weights
/// `θᵀz(y) + extra(y)`, restricted to vectors agreeing with `fixed`.
pub fn log_weights(
    g: &DirectedGraph,
    spec: &ModelSpec,
    covs: &Covariates,
    theta: &[f64],
    fixed: &[Option<u8>],
    extra: impl Fn(&[u8]) -> f64,
) -> Vec<(Vec<u8>, f64)> {
    let n = g.node_count();
    assert!(n <= 16);
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        let y: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
        if fixed
            .iter()
            .zip(&y)
            .any(|(f, &v)| matches!(f, Some(c) if *c != v))
        {
            continue;
        }
        let z = compute_statistics(&y, g, spec, covs).unwrap();
        let lw: f64 = theta.iter().zip(&z).map(|(t, s)| t * s).sum::<f64>() + extra(&y);
        out.push((y, lw));
    }
    out
}

/// Normalised probabilities keyed by outcome vector.
pub fn probabilities(weights: &[(Vec<u8>, f64)]) -> HashMap<Vec<u8>, f64> {
    let m = weights
        .iter()
        .map(|w| w.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = weights.iter().map(|w| (w.1 - m).exp()).sum();
    weights
        .iter()
        .map(|(y, lw)| (y.clone(), (lw - m).exp() / total))
        .collect()
}

pub fn log_sum_exp(v: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Distinct statistic vectors with multiplicities, for fast `ψ(θ)`.
pub struct StatisticSpectrum {
    pub zs: Vec<Vec<f64>>,
    pub counts: Vec<f64>,
}

impl StatisticSpectrum {
    pub fn new(g: &DirectedGraph, spec: &ModelSpec, covs: &Covariates) -> Self {
        let n = g.node_count();
        let mut map: HashMap<Vec<u64>, (Vec<f64>, f64)> = HashMap::new();
        for mask in 0u32..(1 << n) {
            let y: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
            let z = compute_statistics(&y, g, spec, covs).unwrap();
            let key = z.iter().map(|v| v.to_bits()).collect();
            map.entry(key).or_insert((z, 0.0)).1 += 1.0;
        }
        let (zs, counts) = map.into_values().unzip();
        Self { zs, counts }
    }

    pub fn log_psi(&self, theta: &[f64]) -> f64 {
        log_sum_exp(
            self.zs
                .iter()
                .zip(&self.counts)
                .map(|(z, c)| c.ln() + theta.iter().zip(z).map(|(t, s)| t * s).sum::<f64>()),
        )
    }

    /// Mean and covariance of `z` under `θ`.
    pub fn moments(&self, theta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let psi = self.log_psi(theta);
        let p = theta.len();
        let mut mean = vec![0.0; p];
        let mut second = vec![vec![0.0; p]; p];
        for (z, c) in self.zs.iter().zip(&self.counts) {
            let w = (c.ln() + theta.iter().zip(z).map(|(t, s)| t * s).sum::<f64>() - psi).exp();
            for a in 0..p {
                mean[a] += w * z[a];
                for b in 0..p {
                    second[a][b] += w * z[a] * z[b];
                }
            }
        }
        let cov = (0..p)
            .map(|a| (0..p).map(|b| second[a][b] - mean[a] * mean[b]).collect())
            .collect();
        (mean, cov)
    }

    pub fn log_lik(&self, theta: &[f64], z_obs: &[f64]) -> f64 {
        theta.iter().zip(z_obs).map(|(t, s)| t * s).sum::<f64>() - self.log_psi(theta)
    }
}
