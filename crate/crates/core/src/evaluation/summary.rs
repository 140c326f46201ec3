//! Posterior summaries: moments, quantiles, autocorrelation and effective
//! sample size.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{AlaamError, Result};
use crate::exchange::PosteriorSample;

/// One row of a posterior summary table. Fields that are undefined for a
/// constant chain are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub ess: Option<f64>,
    pub sacf10: Option<f64>,
    pub sacf30: Option<f64>,
    pub q025: f64,
    pub q975: f64,
}

/// Sample autocorrelations at lags `0..=max_lag` via FFT. `None` when the
/// series is constant.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    buf.resize(size, Complex::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in &mut buf {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    if c0.is_nan() || c0 <= 1e-12 * n as f64 * (1.0 + mean * mean) {
        return None;
    }
    Some((0..=max_lag.min(n - 1)).map(|k| buf[k].re / c0).collect())
}

/// `T / (1 + 2 Σ ρ_k)`, summing lags from 1 up to (excluding) the first
/// nonpositive autocorrelation; capped at `T`.
pub fn effective_sample_size(x: &[f64]) -> Option<f64> {
    let rho = autocorrelation(x, x.len().saturating_sub(1))?;
    let sum: f64 = rho[1..].iter().take_while(|&&r| r > 0.0).sum();
    let t = x.len() as f64;
    Some((t / (1.0 + 2.0 * sum)).min(t))
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summarises one quantity recorded by several chains. Moments and
/// quantiles use the pooled post-burn-in draws thinned by `thinning`;
/// ESS (summed over chains) and SACF (averaged over chains) use the
/// un-thinned post-burn-in draws.
pub fn summarize_series(
    name: &str,
    chains: &[Vec<f64>],
    burn_in: usize,
    thinning: usize,
) -> Result<ParameterSummary> {
    let kept: Vec<&[f64]> = chains.iter().map(|c| &c[burn_in.min(c.len())..]).collect();
    let mut pooled: Vec<f64> = kept
        .iter()
        .flat_map(|c| c.iter().step_by(thinning.max(1)).copied())
        .collect();
    if pooled.is_empty() {
        return Err(AlaamError::Precondition(format!(
            "no draws of {name} remain after burn-in"
        )));
    }
    let t = pooled.len() as f64;
    let mean = pooled.iter().sum::<f64>() / t;
    let sd = if pooled.len() > 1 {
        (pooled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0)).sqrt()
    } else {
        0.0
    };
    pooled.sort_by(f64::total_cmp);

    let mut ess = Some(0.0);
    let mut acf10 = Some(0.0);
    let mut acf30 = Some(0.0);
    for c in &kept {
        let rho = autocorrelation(c, 30);
        ess = ess
            .zip(effective_sample_size_guarded(c))
            .map(|(a, b)| a + b);
        acf10 = acf10
            .zip(rho.as_ref().and_then(|r| r.get(10).copied()))
            .map(|(a, b)| a + b);
        acf30 = acf30
            .zip(rho.as_ref().and_then(|r| r.get(30).copied()))
            .map(|(a, b)| a + b);
    }
    let m = kept.len() as f64;
    Ok(ParameterSummary {
        name: name.to_owned(),
        mean,
        sd,
        ess,
        sacf10: acf10.map(|v| v / m),
        sacf30: acf30.map(|v| v / m),
        q025: quantile(&pooled, 0.025),
        q975: quantile(&pooled, 0.975),
    })
}

fn effective_sample_size_guarded(x: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    effective_sample_size(x)
}

/// Summary table for every model parameter.
pub fn summarize(
    sample: &PosteriorSample,
    burn_in: usize,
    thinning: usize,
) -> Result<Vec<ParameterSummary>> {
    (0..sample.dim())
        .map(|k| {
            let chains: Vec<Vec<f64>> = sample.chains.iter().map(|c| c.column(k)).collect();
            summarize_series(&sample.names[k], &chains, burn_in, thinning)
        })
        .collect()
}

/// Summary rows for the three missingness coefficients.
pub fn summarize_phi(
    sample: &PosteriorSample,
    burn_in: usize,
    thinning: usize,
) -> Result<Vec<ParameterSummary>> {
    (0..3)
        .map(|k| {
            let chains: Vec<Vec<f64>> = sample
                .chains
                .iter()
                .map(|c| c.phi.iter().map(|p| p[k]).collect())
                .collect();
            summarize_series(&format!("phi{k}"), &chains, burn_in, thinning)
        })
        .collect()
}
