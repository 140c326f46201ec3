//! Sensitivity of the posterior to a fixed not-at-random mechanism.
//!
//! Each grid point multiplies the odds that a missing outcome is 1 by
//! `exp(φ₁)`, the rare-missingness form of the logistic mechanism in which
//! `φ₀` and `φ₂` cancel from every missing-outcome toggle. At `φ₁ = 4` a
//! missing outcome is imputed as 1 almost surely unless the model strongly
//! favours 0.

use rayon::prelude::*;

use crate::attributes::{AttributeData, ClampMask};
use crate::error::{AlaamError, Result};
use crate::evaluation::summary::{summarize, ParameterSummary};
use crate::exchange::{run_estimation, EstimationSettings};
use crate::missing::MissingMechanism;
use crate::prior::Prior;
use crate::statistics::Model;

/// Posterior summary at one value of `φ₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub phi1: f64,
    pub summary: Vec<ParameterSummary>,
}

/// Runs one estimation per `φ₁` in `grid`, in parallel. Chain seeds are the
/// same at every grid point, so differences reflect `φ₁` and not the RNG.
#[allow(clippy::too_many_arguments)]
pub fn mnar_sweep(
    model: &Model<'_>,
    data: &AttributeData,
    clamp: &ClampMask,
    prior: &Prior,
    grid: &[f64],
    settings: &EstimationSettings,
    burn_in: usize,
    thinning: usize,
) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(AlaamError::Config("the phi1 grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|v| !v.is_finite()) {
        return Err(AlaamError::Config(format!(
            "phi1 grid value {bad} is not finite"
        )));
    }
    grid.par_iter()
        .map(|&phi1| {
            let mechanism = MissingMechanism::MnarOddsShift(phi1);
            let sample = run_estimation(model, data, clamp, prior, &mechanism, settings)?;
            Ok(SweepPoint {
                phi1,
                summary: summarize(&sample, burn_in, thinning)?,
            })
        })
        .collect()
}

/// Long-format rows `(φ₁, term, mean, sd, q2.5, q97.5)`.
pub fn sweep_rows(points: &[SweepPoint]) -> Vec<(f64, String, f64, f64, f64, f64)> {
    points
        .iter()
        .flat_map(|p| {
            p.summary
                .iter()
                .map(move |s| (p.phi1, s.name.clone(), s.mean, s.sd, s.q025, s.q975))
        })
        .collect()
}
