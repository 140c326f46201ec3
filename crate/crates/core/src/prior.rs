//! Multivariate normal densities, parameter priors and random-walk
//! proposals.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::attributes::ClampMask;
use crate::error::{AlaamError, Result};
use crate::simulate::{estimate_stat_covariance, SimulationSettings};
use crate::statistics::Model;

/// Diagonal jitter added when a covariance is not numerically positive
/// definite.
pub const COVARIANCE_JITTER: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct MvNormal {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl MvNormal {
    /// Fails unless `cov` is symmetric positive definite.
    pub fn new(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let p = mean.len();
        if cov.nrows() != p || cov.ncols() != p {
            return Err(AlaamError::Dimension(format!(
                "covariance is {}x{}, mean has length {p}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(AlaamError::Numerical(
                "covariance has non-finite entries".into(),
            ));
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > 1e-9 * cov.amax().max(1.0) {
            return Err(AlaamError::Numerical("covariance is not symmetric".into()));
        }
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| AlaamError::Numerical("covariance is not positive definite".into()))?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Self {
            mean: DVector::from_vec(mean),
            cov,
            chol,
            log_det,
        })
    }

    /// Like [`MvNormal::new`], but adds `COVARIANCE_JITTER·I` once if the
    /// Cholesky factorisation fails.
    pub fn regularized(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let sym = (&cov + cov.transpose()) * 0.5;
        match Self::new(mean.clone(), sym.clone()) {
            Ok(d) => Ok(d),
            Err(_) => {
                let p = mean.len();
                Self::new(mean, sym + DMatrix::identity(p, p) * COVARIANCE_JITTER)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d = DVector::from_column_slice(x) - &self.mean;
        let w = self
            .chol
            .l()
            .solve_lower_triangular(&d)
            .expect("cholesky factor is nonsingular");
        let p = self.dim() as f64;
        -0.5 * (p * (2.0 * std::f64::consts::PI).ln() + self.log_det + w.norm_squared())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        out
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let e = DVector::<f64>::from_fn(self.dim(), |_, _| rng.sample(StandardNormal));
        let x = self.chol.l() * e + &self.mean;
        out.copy_from_slice(x.as_slice());
    }
}

/// Prior on the model parameter.
#[derive(Debug, Clone)]
pub enum Prior {
    /// Improper uniform prior. Posterior sampling is allowed; evidence is not.
    Flat,
    Normal(MvNormal),
}

impl Prior {
    pub fn normal(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        Ok(Self::Normal(MvNormal::new(mean, cov)?))
    }

    /// Independent normal prior with common standard deviation.
    pub fn isotropic(mean: Vec<f64>, sd: f64) -> Result<Self> {
        let p = mean.len();
        Self::normal(mean, DMatrix::identity(p, p) * (sd * sd))
    }

    /// `N(μ₀, λ·Cov_{μ₀}(z)⁻¹)`, with the statistic covariance estimated by
    /// simulation at `μ₀`.
    pub fn normal_scaled(
        model: &Model<'_>,
        mu0: Vec<f64>,
        lambda: f64,
        clamp: &ClampMask,
        y0: &[u8],
        settings: &SimulationSettings,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(AlaamError::Config(format!(
                "prior scale must be positive, got {lambda}"
            )));
        }
        let info = estimate_stat_covariance(model, &mu0, clamp, y0, settings)?;
        if !info.degenerate.is_empty() {
            log::warn!(
                "statistics {:?} are degenerate at the prior centre; the prior covariance is regularised",
                info.degenerate
            );
        }
        let inv = invert_spd(&info.cov)?;
        Ok(Self::Normal(MvNormal::regularized(mu0, inv * lambda)?))
    }

    pub fn is_proper(&self) -> bool {
        matches!(self, Self::Normal(_))
    }

    pub fn log_density(&self, theta: &[f64]) -> f64 {
        match self {
            Self::Flat => 0.0,
            Self::Normal(d) => d.log_density(theta),
        }
    }
}

/// Inverse of a symmetric positive semi-definite matrix, adding
/// `COVARIANCE_JITTER·I` when needed.
pub fn invert_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let chol = sym
        .clone()
        .cholesky()
        .or_else(|| (sym + DMatrix::identity(p, p) * COVARIANCE_JITTER).cholesky())
        .ok_or_else(|| AlaamError::Numerical("matrix is not positive semi-definite".into()))?;
    Ok(chol.inverse())
}

/// Symmetric normal random-walk proposal `h(θ* | θ) = N(θ, Σ_h)`.
#[derive(Debug, Clone)]
pub struct Proposal {
    step: MvNormal,
}

impl Proposal {
    pub fn new(cov: DMatrix<f64>) -> Result<Self> {
        let p = cov.nrows();
        Ok(Self {
            step: MvNormal::regularized(vec![0.0; p], cov)?,
        })
    }

    /// `c·p^{-1/2}·Cov(z)⁻¹`.
    pub fn from_stat_covariance(stat_cov: &DMatrix<f64>, scale: f64) -> Result<Self> {
        let p = stat_cov.nrows() as f64;
        Self::new(invert_spd(stat_cov)? * (scale / p.sqrt()))
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        self.step.cov()
    }

    pub fn dim(&self) -> usize {
        self.step.dim()
    }

    pub fn propose<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R, out: &mut [f64]) {
        self.step.sample_into(rng, out);
        for (o, t) in out.iter_mut().zip(theta) {
            *o += t;
        }
    }

    /// `log h(to | from)`
    pub fn log_density(&self, from: &[f64], to: &[f64]) -> f64 {
        let d: Vec<f64> = to.iter().zip(from).map(|(a, b)| a - b).collect();
        self.step.log_density(&d)
    }
}
