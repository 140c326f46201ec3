//! Run configuration: one TOML file per run. Unknown keys are errors.
//!
//! Relative paths in `[data]` and `[output]` are resolved against the
//! directory holding the configuration file.

use std::path::{Path, PathBuf};

use alaam::evaluation::{EvidenceSettings, PathSettings, ScaledPriorSettings};
use alaam::{
    AlaamError, EstimationSettings, IndexBase, MissingMechanism, PhiPrior, ProposalSettings,
    Result, SimulationSettings, UpdateRule,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub missing: MissingConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub graph: PathBuf,
    /// Attribute table; without it the outcome is all zeros and there are
    /// no covariates (enough for `simulate`).
    pub attributes: Option<PathBuf>,
    /// Outcome column; the first column when absent.
    pub outcome: Option<String>,
    pub clamp: Option<PathBuf>,
    /// Node labels in the graph and clamp files start at 0 or 1.
    #[serde(default)]
    pub index_base: u8,
    /// Covariate columns rescaled to mean 0 and sd 1 after loading.
    #[serde(default)]
    pub standardize: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_model_name")]
    pub name: String,
    pub terms: Vec<String>,
}

fn default_model_name() -> String {
    "model".into()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    #[default]
    Flat,
    Normal,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    #[serde(default)]
    pub kind: PriorKind,
    /// Prior mean; zeros when absent.
    pub mean: Option<Vec<f64>>,
    /// Isotropic standard deviation.
    pub sd: Option<f64>,
    /// Scale of `N(μ₀, λ·Cov_{μ₀}(z)⁻¹)`.
    pub lambda: Option<f64>,
    /// Centre the intercept at the logit of the observed outcome mean.
    #[serde(default)]
    pub data_dependent_intercept: bool,
    /// Simulated draws used to estimate `Cov_{μ₀}(z)`.
    #[serde(default = "default_info_draws")]
    pub info_draws: usize,
}

fn default_info_draws() -> usize {
    1000
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingMode {
    #[default]
    Mar,
    MnarFixed,
    MnarEstimated,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissingConfig {
    #[serde(default)]
    pub mode: MissingMode,
    /// Fixed coefficients, or the starting point when estimated.
    pub phi: Option<[f64; 3]>,
    pub phi_prior_mean: Option<[f64; 3]>,
    pub phi_prior_sd: Option<[f64; 3]>,
    pub phi_spread: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    #[default]
    Gibbs,
    Metropolis,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Parameter for `simulate`; starting value for estimation.
    pub theta: Option<Vec<f64>>,
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub chains: usize,
    pub seed: u64,
    /// Proposal scale `c`.
    pub scale: f64,
    pub aux_sweeps: usize,
    pub rule: RuleName,
    /// Recorded draws for `simulate`.
    pub draws: usize,
    /// Sweeps discarded by `simulate` before the first draw.
    pub sim_burn_in: usize,
    pub pilot_draws: usize,
    pub adapt_iterations: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            theta: None,
            iterations: 5000,
            burn_in: 500,
            thinning: 1,
            chains: 1,
            seed: 1,
            scale: 1.0,
            aux_sweeps: 50,
            rule: RuleName::Gibbs,
            draws: 1000,
            sim_burn_in: 100,
            pilot_draws: 1000,
            adapt_iterations: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareModel {
    pub name: String,
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Record the goodness-of-fit battery during estimation.
    pub gof: bool,
    pub bridges: usize,
    pub samples_per_bridge: usize,
    pub path_thinning: usize,
    /// Posterior draws evaluated for DIC.
    pub dic_draws: usize,
    /// Evaluation point for `loglik`; the posterior mean when absent.
    pub theta: Option<Vec<f64>>,
    #[serde(rename = "G")]
    pub g_draws: usize,
    #[serde(rename = "J")]
    pub j_draws: usize,
    #[serde(rename = "M")]
    pub m_draws: usize,
    /// Prior scales for the evidence curve.
    pub lambdas: Vec<f64>,
    pub phi1_grid: Vec<f64>,
    /// Further models for `dic` and `evidence`.
    pub compare: Vec<CompareModel>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        let ev = EvidenceSettings::default();
        let path = PathSettings::default();
        Self {
            gof: false,
            bridges: path.bridges,
            samples_per_bridge: path.samples,
            path_thinning: path.thinning,
            dic_draws: 200,
            theta: None,
            g_draws: ev.g_draws,
            j_draws: ev.j_draws,
            m_draws: ev.m_draws,
            lambdas: Vec::new(),
            phi1_grid: vec![-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0],
            compare: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "alaam-out".into(),
        }
    }
}

impl RunConfig {
    /// Reads, resolves relative paths and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AlaamError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| AlaamError::Config(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data.graph = base.join(&cfg.data.graph);
        cfg.data.attributes = cfg.data.attributes.map(|p| base.join(p));
        cfg.data.clamp = cfg.data.clamp.map(|p| base.join(p));
        cfg.output.dir = base.join(&cfg.output.dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let files = [
            Some(&self.data.graph),
            self.data.attributes.as_ref(),
            self.data.clamp.as_ref(),
        ];
        for (key, p) in ["data.graph", "data.attributes", "data.clamp"]
            .iter()
            .zip(files)
        {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(AlaamError::Config(format!(
                        "{key}: file {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        if self.data.index_base > 1 {
            return Err(AlaamError::Config("data.index_base must be 0 or 1".into()));
        }
        if self.model.terms.is_empty() {
            return Err(AlaamError::Config(
                "model.terms must list at least one term".into(),
            ));
        }
        let p = self.model.terms.len();
        if let Some(m) = &self.prior.mean {
            if m.len() != p {
                return Err(AlaamError::Config(format!(
                    "prior.mean has {} values for {p} terms",
                    m.len()
                )));
            }
        }
        if self.prior.kind == PriorKind::Normal
            && self.prior.sd.is_some() == self.prior.lambda.is_some()
        {
            return Err(AlaamError::Config(
                "a normal prior needs exactly one of prior.sd and prior.lambda".into(),
            ));
        }
        if self.prior.kind == PriorKind::Flat
            && (self.prior.sd.is_some() || self.prior.lambda.is_some())
        {
            return Err(AlaamError::Config(
                "prior.sd and prior.lambda require prior.kind = \"normal\"".into(),
            ));
        }
        for (key, theta) in [
            ("sampler.theta", &self.sampler.theta),
            ("evaluation.theta", &self.evaluation.theta),
        ] {
            if let Some(t) = theta {
                if t.len() != p {
                    return Err(AlaamError::Config(format!(
                        "{key} has {} values for {p} terms",
                        t.len()
                    )));
                }
            }
        }
        if self.sampler.thinning == 0 {
            return Err(AlaamError::Config(
                "sampler.thinning must be at least 1".into(),
            ));
        }
        if self.sampler.burn_in >= self.sampler.iterations {
            return Err(AlaamError::Config(
                "sampler.burn_in must be smaller than sampler.iterations".into(),
            ));
        }
        if self.missing.mode == MissingMode::MnarFixed && self.missing.phi.is_none() {
            return Err(AlaamError::Config(
                "missing.phi required for mode \"mnar-fixed\"".into(),
            ));
        }
        if self.evaluation.dic_draws == 0 {
            return Err(AlaamError::Config(
                "evaluation.dic_draws must be at least 1".into(),
            ));
        }
        self.mechanism().validate()?;
        self.estimation().validate()?;
        self.path_settings().validate()
    }

    pub fn index_base(&self) -> IndexBase {
        if self.data.index_base == 1 {
            IndexBase::One
        } else {
            IndexBase::Zero
        }
    }

    pub fn rule(&self) -> UpdateRule {
        match self.sampler.rule {
            RuleName::Gibbs => UpdateRule::Gibbs,
            RuleName::Metropolis => UpdateRule::Metropolis,
        }
    }

    pub fn mechanism(&self) -> MissingMechanism {
        let m = &self.missing;
        match m.mode {
            MissingMode::Mar => MissingMechanism::Mar,
            MissingMode::MnarFixed => MissingMechanism::MnarFixed(m.phi.unwrap_or_default()),
            MissingMode::MnarEstimated => {
                let default = PhiPrior::default();
                MissingMechanism::MnarEstimated {
                    init: m.phi.unwrap_or_default(),
                    prior: PhiPrior {
                        mean: m.phi_prior_mean.unwrap_or(default.mean),
                        sd: m.phi_prior_sd.unwrap_or(default.sd),
                    },
                    spread: m.phi_spread.unwrap_or(0.2),
                }
            }
        }
    }

    pub fn estimation(&self) -> EstimationSettings {
        let s = &self.sampler;
        EstimationSettings {
            iterations: s.iterations,
            aux_sweeps: s.aux_sweeps,
            proposal: ProposalSettings {
                scale: s.scale,
                pilot_draws: s.pilot_draws,
                adapt_iterations: s.adapt_iterations,
                ..Default::default()
            },
            chains: s.chains,
            seed: s.seed,
            rule: self.rule(),
            record_gof: self.evaluation.gof,
            initial_theta: s.theta.clone(),
        }
    }

    pub fn simulation(&self) -> SimulationSettings {
        SimulationSettings {
            burn_in: self.sampler.sim_burn_in,
            thinning: 1,
            draws: self.sampler.draws,
            rule: self.rule(),
            seed: self.sampler.seed,
            ..Default::default()
        }
    }

    pub fn path_settings(&self) -> PathSettings {
        PathSettings {
            bridges: self.evaluation.bridges,
            samples: self.evaluation.samples_per_bridge,
            thinning: self.evaluation.path_thinning,
            rule: self.rule(),
            seed: self.sampler.seed,
            ..Default::default()
        }
    }

    pub fn evidence_settings(&self) -> EvidenceSettings {
        EvidenceSettings {
            burn_in: self.sampler.burn_in,
            thinning: self.sampler.thinning,
            g_draws: self.evaluation.g_draws,
            j_draws: self.evaluation.j_draws,
            m_draws: self.evaluation.m_draws,
            path: self.path_settings(),
            rule: self.rule(),
            seed: self.sampler.seed,
            ..Default::default()
        }
    }

    pub fn scaled_prior_settings(&self) -> ScaledPriorSettings {
        ScaledPriorSettings {
            data_dependent_intercept: self.prior.data_dependent_intercept,
            simulation: SimulationSettings {
                draws: self.prior.info_draws,
                seed: self.sampler.seed,
                rule: self.rule(),
                ..Default::default()
            },
        }
    }
}
