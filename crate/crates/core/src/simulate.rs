//! Drawing outcome vectors from `p_θ(y | x)` by single-site updates, and
//! exact enumeration for small free sets.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};

use crate::attributes::{AttributeData, ClampMask};
use crate::error::{AlaamError, Result};
use crate::statistics::Model;
use crate::SeededRng;

/// Default limit on free nodes for exact enumeration (about 4M states).
pub const DEFAULT_ENUMERATION_CAP: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateRule {
    #[default]
    Gibbs,
    Metropolis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanOrder {
    /// Each step picks a free node uniformly at random, with replacement.
    #[default]
    Random,
    /// Each sweep visits free nodes in index order.
    Systematic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSettings {
    /// Sweeps discarded before the first recorded draw.
    pub burn_in: usize,
    /// Sweeps between recorded draws.
    pub thinning: usize,
    pub draws: usize,
    pub rule: UpdateRule,
    pub scan: ScanOrder,
    pub seed: u64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            burn_in: 100,
            thinning: 1,
            draws: 1000,
            rule: UpdateRule::Gibbs,
            scan: ScanOrder::Random,
            seed: 0,
        }
    }
}

impl SimulationSettings {
    pub fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(AlaamError::Config("thinning must be at least 1".into()));
        }
        if self.draws == 0 {
            return Err(AlaamError::Config("at least one draw is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub draws: Vec<Vec<u8>>,
    pub statistics: Vec<Vec<f64>>,
    pub seed: u64,
}

#[inline]
pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
#[inline]
pub fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `Pr_θ(Yᵢ = 1 | y₋ᵢ, x)`
pub fn full_conditional(model: &Model<'_>, y: &[u8], i: usize, theta: &[f64]) -> f64 {
    logistic(model.log_odds(y, i, theta))
}

/// Single-site updater over a fixed set of free nodes.
///
/// Optional per-node log-odds offsets tilt the target to
/// `p_θ(y) · Πᵢ exp(offsetᵢ · yᵢ)`, which is how a missing-data mechanism
/// enters conditional simulation of unobserved outcomes.
#[derive(Debug, Clone)]
pub struct SiteSampler<'m, 'a> {
    model: &'m Model<'a>,
    free: Vec<usize>,
    offsets: Option<Vec<f64>>,
    rule: UpdateRule,
    scan: ScanOrder,
}

impl<'m, 'a> SiteSampler<'m, 'a> {
    pub fn new(model: &'m Model<'a>, clamp: &ClampMask) -> Result<Self> {
        if clamp.len() != model.node_count() {
            return Err(AlaamError::Dimension(
                "clamp mask length differs from n".into(),
            ));
        }
        Self::with_free(model, clamp.free_nodes())
    }

    pub fn with_free(model: &'m Model<'a>, free: Vec<usize>) -> Result<Self> {
        if free.is_empty() {
            return Err(AlaamError::Config(
                "every node is clamped; nothing to sample".into(),
            ));
        }
        Ok(Self {
            model,
            free,
            offsets: None,
            rule: UpdateRule::Gibbs,
            scan: ScanOrder::Random,
        })
    }

    pub fn rule(mut self, rule: UpdateRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn scan(mut self, scan: ScanOrder) -> Self {
        self.scan = scan;
        self
    }

    /// Per-node log-odds offsets (length `n`; entries for fixed nodes unused).
    pub fn offsets(mut self, offsets: Option<Vec<f64>>) -> Self {
        self.offsets = offsets;
        self
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn model(&self) -> &'m Model<'a> {
        self.model
    }

    #[inline]
    pub fn offset(&self, i: usize) -> f64 {
        self.offsets.as_ref().map_or(0.0, |o| o[i])
    }

    /// Conditional log-odds of `yᵢ = 1`; leaves the change vector in `scratch`.
    #[inline]
    pub fn conditional_log_odds(
        &self,
        theta: &[f64],
        y: &[u8],
        i: usize,
        scratch: &mut [f64],
    ) -> f64 {
        self.model.change_into(y, i, scratch);
        scratch.iter().zip(theta).map(|(c, t)| c * t).sum::<f64>() + self.offset(i)
    }

    /// One update of node `i`, keeping `z` in step with `y`.
    pub fn update_site<R: Rng + ?Sized>(
        &self,
        theta: &[f64],
        y: &mut [u8],
        z: &mut [f64],
        scratch: &mut [f64],
        i: usize,
        rng: &mut R,
    ) {
        let eta = self.conditional_log_odds(theta, y, i, scratch);
        let new = match self.rule {
            UpdateRule::Gibbs => u8::from(rng.random::<f64>() < logistic(eta)),
            UpdateRule::Metropolis => {
                let log_ratio = if y[i] == 0 { eta } else { -eta };
                let accept = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
                if accept {
                    1 - y[i]
                } else {
                    y[i]
                }
            }
        };
        if new != y[i] {
            let sign = if new == 1 { 1.0 } else { -1.0 };
            for (zk, ck) in z.iter_mut().zip(scratch.iter()) {
                *zk += sign * ck;
            }
            y[i] = new;
        }
    }

    /// One sweep: as many single-site updates as there are free nodes.
    pub fn sweep<R: Rng + ?Sized>(
        &self,
        theta: &[f64],
        y: &mut [u8],
        z: &mut [f64],
        scratch: &mut [f64],
        rng: &mut R,
    ) {
        match self.scan {
            ScanOrder::Random => {
                let m = self.free.len();
                for _ in 0..m {
                    let i = self.free[rng.random_range(0..m)];
                    self.update_site(theta, y, z, scratch, i, rng);
                }
            }
            ScanOrder::Systematic => {
                for k in 0..self.free.len() {
                    let i = self.free[k];
                    self.update_site(theta, y, z, scratch, i, rng);
                }
            }
        }
    }

    pub fn sweeps<R: Rng + ?Sized>(
        &self,
        count: usize,
        theta: &[f64],
        y: &mut [u8],
        z: &mut [f64],
        scratch: &mut [f64],
        rng: &mut R,
    ) {
        for _ in 0..count {
            self.sweep(theta, y, z, scratch, rng);
        }
    }
}

/// Runs the sampler and hands every recorded draw and its statistics to
/// `visit`. Clamped coordinates keep their values from `y0`.
pub fn sample_with<F>(
    model: &Model<'_>,
    theta: &[f64],
    settings: &SimulationSettings,
    clamp: &ClampMask,
    y0: &[u8],
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&[u8], &[f64]),
{
    settings.validate()?;
    check_theta(model, theta)?;
    if y0.len() != model.node_count() {
        return Err(AlaamError::Dimension(
            "initial outcome vector has the wrong length".into(),
        ));
    }
    let sampler = SiteSampler::new(model, clamp)?
        .rule(settings.rule)
        .scan(settings.scan);
    let mut rng = SeededRng::seed_from_u64(settings.seed);
    let mut y = y0.to_vec();
    let mut z = model.statistics(&y);
    let mut scratch = vec![0.0; model.dim()];
    sampler.sweeps(
        settings.burn_in,
        theta,
        &mut y,
        &mut z,
        &mut scratch,
        &mut rng,
    );
    for _ in 0..settings.draws {
        sampler.sweeps(
            settings.thinning,
            theta,
            &mut y,
            &mut z,
            &mut scratch,
            &mut rng,
        );
        visit(&y, &z);
    }
    Ok(())
}

/// Collects draws from `p_θ(· | x)`, holding clamped nodes at their `y0` values.
pub fn sample(
    model: &Model<'_>,
    theta: &[f64],
    settings: &SimulationSettings,
    clamp: &ClampMask,
    y0: &[u8],
) -> Result<SimulationOutput> {
    let mut out = SimulationOutput {
        draws: Vec::with_capacity(settings.draws),
        statistics: Vec::with_capacity(settings.draws),
        seed: settings.seed,
    };
    sample_with(model, theta, settings, clamp, y0, |y, z| {
        out.draws.push(y.to_vec());
        out.statistics.push(z.to_vec());
    })?;
    Ok(out)
}

/// Observed outcomes with unobserved entries filled by fair coins.
pub fn initial_outcomes<R: Rng + ?Sized>(data: &AttributeData, rng: &mut R) -> Vec<u8> {
    data.y
        .iter()
        .zip(&data.missing)
        .map(|(&v, &m)| if m { u8::from(rng.random_bool(0.5)) } else { v })
        .collect()
}

pub(crate) fn check_theta(model: &Model<'_>, theta: &[f64]) -> Result<()> {
    if theta.len() != model.dim() {
        return Err(AlaamError::Dimension(format!(
            "parameter vector has length {}, model has {} terms",
            theta.len(),
            model.dim()
        )));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(AlaamError::Numerical(
            "parameter vector has non-finite entries".into(),
        ));
    }
    Ok(())
}

/// Visits every configuration of the `free` nodes in Gray-code order,
/// starting from `base` with all free nodes at 0. The callback receives the
/// configuration's bitmask over `free`, the outcome vector and `z`.
pub fn enumerate_configurations<F>(model: &Model<'_>, free: &[usize], base: &[u8], mut visit: F)
where
    F: FnMut(u64, &[u8], &[f64]),
{
    assert!(free.len() < 63, "too many free nodes to enumerate");
    let mut y = base.to_vec();
    for &i in free {
        y[i] = 0;
    }
    let mut z = model.statistics(&y);
    let mut change = vec![0.0; model.dim()];
    visit(0, &y, &z);
    for k in 1u64..(1u64 << free.len()) {
        let bit = k.trailing_zeros() as usize;
        let i = free[bit];
        model.change_into(&y, i, &mut change);
        let sign = if y[i] == 0 { 1.0 } else { -1.0 };
        for (zk, ck) in z.iter_mut().zip(&change) {
            *zk += sign * ck;
        }
        y[i] = 1 - y[i];
        visit(k ^ (k >> 1), &y, &z);
    }
}

/// Exact distribution over the free nodes' configurations.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    pub free: Vec<usize>,
    base: Vec<u8>,
    /// Probability of each configuration, indexed by bitmask over `free`.
    pub probabilities: Vec<f64>,
    /// `ψ(θ)`, the log-sum over free configurations of `exp{θᵀz}`.
    pub log_normalizer: f64,
}

impl ExactDistribution {
    pub fn outcome(&self, mask: u64) -> Vec<u8> {
        let mut y = self.base.clone();
        for (b, &i) in self.free.iter().enumerate() {
            y[i] = ((mask >> b) & 1) as u8;
        }
        y
    }

    pub fn mask_of(&self, y: &[u8]) -> u64 {
        self.free
            .iter()
            .enumerate()
            .fold(0u64, |m, (b, &i)| m | (u64::from(y[i]) << b))
    }

    pub fn probability_of(&self, y: &[u8]) -> f64 {
        self.probabilities[self.mask_of(y) as usize]
    }

    /// Mean and covariance of `z` under this distribution.
    pub fn moments(&self, model: &Model<'_>) -> (Vec<f64>, DMatrix<f64>) {
        let p = model.dim();
        let mut mean = vec![0.0; p];
        let mut second = DMatrix::<f64>::zeros(p, p);
        enumerate_configurations(model, &self.free, &self.base, |mask, _, z| {
            let w = self.probabilities[mask as usize];
            for a in 0..p {
                mean[a] += w * z[a];
                for b in 0..p {
                    second[(a, b)] += w * z[a] * z[b];
                }
            }
        });
        for a in 0..p {
            for b in 0..p {
                second[(a, b)] -= mean[a] * mean[b];
            }
        }
        (mean, second)
    }
}

/// Exact `p_θ(y | x)` over the non-clamped nodes, clamped nodes fixed at
/// their values in `base`. Refuses when more than `cap` nodes are free.
pub fn exact_distribution(
    model: &Model<'_>,
    theta: &[f64],
    clamp: &ClampMask,
    base: &[u8],
    cap: usize,
) -> Result<ExactDistribution> {
    check_theta(model, theta)?;
    let free = clamp.free_nodes();
    if free.is_empty() {
        return Err(AlaamError::Config(
            "every node is clamped; nothing to enumerate".into(),
        ));
    }
    if free.len() > cap {
        return Err(AlaamError::Precondition(format!(
            "exact enumeration over {} free nodes exceeds the cap of {cap}",
            free.len()
        )));
    }
    let mut log_w = vec![0.0; 1usize << free.len()];
    enumerate_configurations(model, &free, base, |mask, _, z| {
        log_w[mask as usize] = z.iter().zip(theta).map(|(a, b)| a * b).sum();
    });
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = log_w.iter().map(|v| (v - max).exp()).sum();
    let log_normalizer = max + total.ln();
    let probabilities = log_w.iter().map(|v| (v - log_normalizer).exp()).collect();
    Ok(ExactDistribution {
        free,
        base: base.to_vec(),
        probabilities,
        log_normalizer,
    })
}

/// Monte Carlo mean and covariance of the statistic vector.
#[derive(Debug, Clone)]
pub struct StatCovariance {
    pub mean: Vec<f64>,
    pub cov: DMatrix<f64>,
    /// Coordinates whose sample variance is numerically zero.
    pub degenerate: Vec<usize>,
}

/// Variance below which a statistic coordinate counts as degenerate.
pub const DEGENERATE_VARIANCE: f64 = 1e-9;

/// Samples `settings.draws` statistic vectors under `θ₀` and returns their
/// sample covariance.
pub fn estimate_stat_covariance(
    model: &Model<'_>,
    theta0: &[f64],
    clamp: &ClampMask,
    y0: &[u8],
    settings: &SimulationSettings,
) -> Result<StatCovariance> {
    if settings.draws < 100 {
        return Err(AlaamError::Precondition(format!(
            "covariance estimation needs at least 100 draws, got {}",
            settings.draws
        )));
    }
    let mut draws = Vec::with_capacity(settings.draws);
    sample_with(model, theta0, settings, clamp, y0, |_, z| {
        draws.push(z.to_vec())
    })?;
    Ok(covariance_of(&draws))
}

pub(crate) fn covariance_of(draws: &[Vec<f64>]) -> StatCovariance {
    let p = draws[0].len();
    let m = draws.len() as f64;
    let mut mean = vec![0.0; p];
    for z in draws {
        for (a, v) in mean.iter_mut().zip(z) {
            *a += v / m;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for z in draws {
        for a in 0..p {
            let da = z[a] - mean[a];
            for b in a..p {
                cov[(a, b)] += da * (z[b] - mean[b]);
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            let v = cov[(a, b)] / (m - 1.0);
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let degenerate = (0..p)
        .filter(|&k| cov[(k, k)] < DEGENERATE_VARIANCE)
        .collect();
    StatCovariance {
        mean,
        cov,
        degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Covariates, DirectedGraph, ModelSpec};

    fn ring(n: usize) -> DirectedGraph {
        DirectedGraph::from_arcs(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn zero_theta_is_one_half() {
        let g = ring(5);
        let covs = Covariates::new();
        let spec = ModelSpec::parse(&["intercept", "contagion"]).unwrap();
        let m = Model::new(&g, &spec, &covs).unwrap();
        for i in 0..5 {
            assert_eq!(full_conditional(&m, &[1, 0, 1, 1, 0], i, &[0.0, 0.0]), 0.5);
        }
    }

    #[test]
    fn intercept_ln3_is_three_quarters() {
        let g = ring(4);
        let covs = Covariates::new();
        let spec = ModelSpec::parse(&["intercept"]).unwrap();
        let m = Model::new(&g, &spec, &covs).unwrap();
        let p = full_conditional(&m, &[0, 1, 0, 0], 2, &[3f64.ln()]);
        assert!((p - 0.75).abs() < 1e-15);
    }

    #[test]
    fn exact_uniform_at_zero() {
        let g = ring(6);
        let covs = Covariates::new();
        let spec = ModelSpec::parse(&["intercept", "contagion"]).unwrap();
        let m = Model::new(&g, &spec, &covs).unwrap();
        let d = exact_distribution(&m, &[0.0, 0.0], &ClampMask::none(6), &[0; 6], 22).unwrap();
        assert!((d.log_normalizer - 6.0 * 2f64.ln()).abs() < 1e-12);
        assert!(d
            .probabilities
            .iter()
            .all(|&p| (p - 1.0 / 64.0).abs() < 1e-15));
    }

    #[test]
    fn exact_single_node() {
        let g = DirectedGraph::empty(1);
        let covs = Covariates::new();
        let spec = ModelSpec::parse(&["intercept"]).unwrap();
        let m = Model::new(&g, &spec, &covs).unwrap();
        let d = exact_distribution(&m, &[0.7], &ClampMask::none(1), &[0], 22).unwrap();
        assert!((d.probability_of(&[1]) - logistic(0.7)).abs() < 1e-15);
    }

    #[test]
    fn enumeration_cap_refuses() {
        let g = ring(5);
        let covs = Covariates::new();
        let spec = ModelSpec::parse(&["intercept"]).unwrap();
        let m = Model::new(&g, &spec, &covs).unwrap();
        let err = exact_distribution(&m, &[0.0], &ClampMask::none(5), &[0; 5], 4).unwrap_err();
        assert!(matches!(err, AlaamError::Precondition(_)));
    }

    #[test]
    fn all_clamped_is_configuration_error() {
        let g = ring(3);
        let covs = Covariates::new();
        let spec = ModelSpec::parse(&["intercept"]).unwrap();
        let m = Model::new(&g, &spec, &covs).unwrap();
        let clamp = ClampMask::from_nodes(3, [0, 1, 2]).unwrap();
        let err = sample(
            &m,
            &[0.0],
            &SimulationSettings::default(),
            &clamp,
            &[0, 1, 0],
        )
        .unwrap_err();
        assert!(matches!(err, AlaamError::Config(_)));
    }

    #[test]
    fn seed_determinism() {
        let g = ring(8);
        let covs = Covariates::new();
        let spec = ModelSpec::parse(&["intercept", "contagion"]).unwrap();
        let m = Model::new(&g, &spec, &covs).unwrap();
        let s = SimulationSettings {
            draws: 50,
            seed: 9,
            ..Default::default()
        };
        let a = sample(&m, &[-0.2, 0.5], &s, &ClampMask::none(8), &[0; 8]).unwrap();
        let b = sample(&m, &[-0.2, 0.5], &s, &ClampMask::none(8), &[0; 8]).unwrap();
        assert_eq!(a, b);
        for (y, z) in a.draws.iter().zip(&a.statistics) {
            assert_eq!(&m.statistics(y), z);
        }
    }

    #[test]
    fn covariance_needs_100_draws() {
        let g = ring(4);
        let covs = Covariates::new();
        let spec = ModelSpec::parse(&["intercept"]).unwrap();
        let m = Model::new(&g, &spec, &covs).unwrap();
        let s = SimulationSettings {
            draws: 50,
            ..Default::default()
        };
        assert!(estimate_stat_covariance(&m, &[0.0], &ClampMask::none(4), &[0; 4], &s).is_err());
    }
}
