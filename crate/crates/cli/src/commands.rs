//! Subcommand implementations. Every command loads the data, runs what it
//! needs in-process and writes its tables into the output directory.

use alaam::evaluation::dic::deviance_cdf;
use alaam::evaluation::{
    check_supported, evidence, evidence_curve, gof, log_likelihood, mnar_sweep, posterior_deviance,
    prior_centre, summarize, summarize_phi, sweep_rows, DicSettings, ParameterSummary,
};
use alaam::{
    bind_model, independent_mle, load_attributes, load_clamp, load_graph, run_estimation, sample,
    AlaamError, AttributeData, ClampMask, DirectedGraph, Model, ModelSpec, PosteriorSample, Prior,
    Result,
};

use crate::config::{PriorKind, RunConfig};
use crate::output::{fmt, fmt_opt, Outputs};

pub struct Inputs {
    pub graph: DirectedGraph,
    pub data: AttributeData,
    pub clamp: ClampMask,
}

impl Inputs {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let base = cfg.index_base();
        let graph = load_graph(&cfg.data.graph, base)?;
        let n = graph.node_count();
        let mut data = match &cfg.data.attributes {
            Some(p) => load_attributes(p, n, cfg.data.outcome.as_deref())?,
            None => AttributeData::observed(vec![0; n]),
        };
        for name in &cfg.data.standardize {
            data.covariates.standardize(name)?;
        }
        let clamp = match &cfg.data.clamp {
            Some(p) => load_clamp(p, n, base)?,
            None => ClampMask::none(n),
        };
        clamp.check(&data)?;
        Ok(Self { graph, data, clamp })
    }

    pub fn bind(&self, terms: &[String]) -> Result<Model<'_>> {
        bind_model(&self.graph, &ModelSpec::parse(terms)?, &self.data)
    }

    /// The configured model followed by the `[[evaluation.compare]]` models.
    fn models(&self, cfg: &RunConfig) -> Result<Vec<(String, Model<'_>)>> {
        let mut out = vec![(cfg.model.name.clone(), self.bind(&cfg.model.terms)?)];
        for m in &cfg.evaluation.compare {
            out.push((m.name.clone(), self.bind(&m.terms)?));
        }
        Ok(out)
    }
}

/// Prior for `model`. An explicit `prior.mean` applies to the configured
/// model only; compared models are centred by `prior_centre`.
fn build_prior(
    cfg: &RunConfig,
    inputs: &Inputs,
    model: &Model<'_>,
    primary: bool,
) -> Result<Prior> {
    if cfg.prior.kind == PriorKind::Flat {
        return Ok(Prior::Flat);
    }
    let mean = match (&cfg.prior.mean, primary) {
        (Some(m), true) => m.clone(),
        _ => prior_centre(model, &inputs.data, cfg.prior.data_dependent_intercept),
    };
    match (cfg.prior.sd, cfg.prior.lambda) {
        (Some(sd), _) => Prior::isotropic(mean, sd),
        (None, Some(lambda)) => {
            let sim = cfg.scaled_prior_settings().simulation;
            Prior::normal_scaled(model, mean, lambda, &inputs.clamp, &inputs.data.y, &sim)
        }
        (None, None) => Err(AlaamError::Config(
            "a normal prior needs prior.sd or prior.lambda".into(),
        )),
    }
}

fn estimate_model(
    cfg: &RunConfig,
    inputs: &Inputs,
    model: &Model<'_>,
    prior: &Prior,
    gof: bool,
) -> Result<PosteriorSample> {
    let mut settings = cfg.estimation();
    settings.record_gof |= gof;
    if settings
        .initial_theta
        .as_ref()
        .is_some_and(|t| t.len() != model.dim())
    {
        // a starting value sized for the configured model does not fit compared ones
        settings.initial_theta = None;
    }
    let sample = run_estimation(
        model,
        &inputs.data,
        &inputs.clamp,
        prior,
        &cfg.mechanism(),
        &settings,
    )?;
    for (k, c) in sample.chains.iter().enumerate() {
        log::info!("chain {}: acceptance {:.3}", k + 1, c.acceptance_rate());
    }
    Ok(sample)
}

fn summary_header() -> Vec<String> {
    [
        "term", "mean", "sd", "ESS", "SACF10", "SACF30", "q2.5", "q97.5",
    ]
    .map(String::from)
    .to_vec()
}

fn summary_row(s: &ParameterSummary) -> Vec<String> {
    vec![
        s.name.clone(),
        fmt(s.mean),
        fmt(s.sd),
        fmt_opt(s.ess),
        fmt_opt(s.sacf10),
        fmt_opt(s.sacf30),
        fmt(s.q025),
        fmt(s.q975),
    ]
}

/// Node label as written in the input files.
fn label(cfg: &RunConfig, i: usize) -> String {
    (i + cfg.data.index_base as usize).to_string()
}

pub fn simulate(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let theta = cfg
        .sampler
        .theta
        .as_ref()
        .ok_or_else(|| AlaamError::Config("sampler.theta required".into()))?;
    let inputs = Inputs::load(cfg)?;
    let model = inputs.bind(&cfg.model.terms)?;
    let sim = sample(
        &model,
        theta,
        &cfg.simulation(),
        &inputs.clamp,
        &inputs.data.y,
    )?;
    out.lap("simulate");
    let header: Vec<String> = std::iter::once("draw".to_owned())
        .chain(model.names())
        .collect();
    let rows = sim
        .statistics
        .iter()
        .enumerate()
        .map(|(t, z)| std::iter::once((t + 1).to_string()).chain(z.iter().map(|&v| fmt(v))));
    out.csv("draws.csv", &header, rows)
}

pub fn estimate(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let inputs = Inputs::load(cfg)?;
    let model = inputs.bind(&cfg.model.terms)?;
    let prior = build_prior(cfg, &inputs, &model, true)?;
    let sample = estimate_model(cfg, &inputs, &model, &prior, false)?;
    out.lap("estimate");
    let (burn, thin) = (cfg.sampler.burn_in, cfg.sampler.thinning);

    let names = model.names();
    let mut header: Vec<String> = std::iter::once("iteration".to_owned())
        .chain(names.iter().cloned())
        .collect();
    header.extend(["phi0", "phi1", "phi2", "accepted"].map(String::from));
    for (k, chain) in sample.chains.iter().enumerate() {
        let rows = (0..chain.len()).map(|t| {
            let mut row = vec![(t + 1).to_string()];
            row.extend(chain.theta[t].iter().map(|&v| fmt(v)));
            row.extend(chain.phi[t].iter().map(|&v| fmt(v)));
            row.push(u8::from(chain.accepted[t]).to_string());
            row
        });
        out.csv(&format!("draws_chain{}.csv", k + 1), &header, rows)?;
    }

    let header: Vec<String> = ["chain", "iteration"]
        .map(String::from)
        .into_iter()
        .chain(names)
        .collect();
    let rows = sample.chains.iter().enumerate().flat_map(|(k, chain)| {
        chain.predictive.iter().enumerate().map(move |(t, z)| {
            let mut row = vec![(k + 1).to_string(), (t + 1).to_string()];
            row.extend(z.iter().map(|&v| fmt(v)));
            row
        })
    });
    out.csv("predictive.csv", &header, rows)?;

    // posterior probability of y_i = 1 for each missing node
    let imputations = sample.pooled(burn, thin, |c| &c.imputations);
    let rows = sample.missing_nodes.iter().enumerate().map(|(j, &i)| {
        let ones = imputations.iter().filter(|d| d[j] == 1).count();
        let p = if imputations.is_empty() {
            f64::NAN
        } else {
            ones as f64 / imputations.len() as f64
        };
        vec![label(cfg, i), fmt(p)]
    });
    out.csv("imputations.csv", &["node".into(), "p_one".into()], rows)?;

    let mut summary = summarize(&sample, burn, thin)?;
    if cfg.mechanism().estimates_phi() {
        summary.extend(summarize_phi(&sample, burn, thin)?);
    }
    out.csv(
        "summary.csv",
        &summary_header(),
        summary.iter().map(summary_row),
    )?;
    if cfg.evaluation.gof {
        write_gof(cfg, &inputs, &sample, out)?;
    }
    Ok(())
}

fn write_gof(
    cfg: &RunConfig,
    inputs: &Inputs,
    sample: &PosteriorSample,
    out: &mut Outputs,
) -> Result<()> {
    let rows = gof(
        sample,
        &inputs.data.y,
        &inputs.graph,
        cfg.sampler.burn_in,
        cfg.sampler.thinning,
    )?;
    let header = ["statistic", "observed", "predictive_mean", "p_value"].map(String::from);
    out.csv(
        "gof.csv",
        &header,
        rows.iter().map(|r| {
            vec![
                r.name.clone(),
                fmt(r.observed),
                fmt(r.predictive_mean),
                fmt(r.p_value),
            ]
        }),
    )
}

pub fn gof_cmd(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let inputs = Inputs::load(cfg)?;
    let model = inputs.bind(&cfg.model.terms)?;
    let prior = build_prior(cfg, &inputs, &model, true)?;
    let sample = estimate_model(cfg, &inputs, &model, &prior, true)?;
    out.lap("estimate");
    write_gof(cfg, &inputs, &sample, out)
}

pub fn loglik(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let inputs = Inputs::load(cfg)?;
    let model = inputs.bind(&cfg.model.terms)?;
    let mechanism = cfg.mechanism();
    let (theta, phi) = match &cfg.evaluation.theta {
        Some(t) => (t.clone(), mechanism.initial_phi()),
        None => {
            let prior = build_prior(cfg, &inputs, &model, true)?;
            let sample = estimate_model(cfg, &inputs, &model, &prior, false)?;
            out.lap("estimate");
            let (burn, thin) = (cfg.sampler.burn_in, cfg.sampler.thinning);
            let phi = if mechanism.estimates_phi() {
                let phis = sample.pooled(burn, thin, |c| &c.phi);
                let mut m = [0.0; 3];
                for p in &phis {
                    for k in 0..3 {
                        m[k] += p[k] / phis.len() as f64;
                    }
                }
                m
            } else {
                mechanism.initial_phi()
            };
            (sample.posterior_mean(burn, thin), phi)
        }
    };
    let reference = independent_mle(&model, &inputs.data, &inputs.clamp)?;
    let est = log_likelihood(
        &model,
        &theta,
        &reference,
        &inputs.data,
        &inputs.clamp,
        &mechanism,
        &phi,
        &cfg.path_settings(),
    )?;
    out.lap("loglik");
    let mut header = model.names();
    header.extend(["loglik", "se"].map(String::from));
    let mut row: Vec<String> = theta.iter().map(|&v| fmt(v)).collect();
    row.extend([fmt(est.value), fmt(est.se)]);
    out.csv("loglik.csv", &header, [row])
}

pub fn dic(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let inputs = Inputs::load(cfg)?;
    let mechanism = cfg.mechanism();
    let settings = DicSettings {
        burn_in: cfg.sampler.burn_in,
        thinning: cfg.sampler.thinning,
        max_draws: Some(cfg.evaluation.dic_draws),
        path: cfg.path_settings(),
    };
    let mut rows = Vec::new();
    let mut cdf_rows = Vec::new();
    for (k, (name, model)) in inputs.models(cfg)?.iter().enumerate() {
        let prior = build_prior(cfg, &inputs, model, k == 0)?;
        let sample = estimate_model(cfg, &inputs, model, &prior, false)?;
        let r = posterior_deviance(
            model,
            &inputs.data,
            &inputs.clamp,
            &mechanism,
            &sample,
            &settings,
        )?;
        out.lap(&format!("dic:{name}"));
        rows.push(vec![
            name.clone(),
            fmt(r.d_bar),
            fmt(r.d_hat),
            fmt(r.p_d),
            fmt(r.p_v),
            fmt(r.dic_pd),
            fmt(r.dic_pv),
            r.deviances.len().to_string(),
        ]);
        cdf_rows.extend(
            deviance_cdf(&r.deviances)
                .into_iter()
                .map(|(v, p)| vec![name.clone(), fmt(v), fmt(p)]),
        );
    }
    let header = [
        "model", "D_bar", "D_hat", "p_D", "p_V", "DIC_pD", "DIC_pV", "draws",
    ]
    .map(String::from);
    out.csv("dic.csv", &header, rows)?;
    out.csv(
        "deviance_cdf.csv",
        &["model", "deviance", "cumulative_probability"].map(String::from),
        cdf_rows,
    )
}

pub fn evidence_cmd(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let inputs = Inputs::load(cfg)?;
    let mechanism = cfg.mechanism();
    let models = inputs.models(cfg)?;
    let settings = cfg.evidence_settings();
    let header_tail = [
        "theta_prime",
        "loglik",
        "loglik_se",
        "log_prior",
        "log_posterior",
        "log_posterior_se",
        "log_evidence",
        "log_evidence_se",
    ];

    if !cfg.evaluation.lambdas.is_empty() {
        let mut est = cfg.estimation();
        est.initial_theta = None;
        let points = evidence_curve(
            &models,
            &inputs.data,
            &inputs.clamp,
            &mechanism,
            &cfg.evaluation.lambdas,
            &cfg.scaled_prior_settings(),
            &est,
            &settings,
        )?;
        out.lap("evidence-curve");
        let header: Vec<String> = ["model", "lambda"]
            .into_iter()
            .chain(header_tail)
            .map(String::from)
            .collect();
        let rows = points.iter().map(|p| {
            let mut row = vec![p.model.clone(), fmt(p.lambda)];
            row.extend(evidence_fields(&p.result));
            row
        });
        return out.csv("evidence_curve.csv", &header, rows);
    }

    let mut rows = Vec::new();
    for (k, (name, model)) in models.iter().enumerate() {
        let prior = build_prior(cfg, &inputs, model, k == 0)?;
        // refuse before spending time on the posterior sample
        check_supported(&prior, &mechanism)?;
        let sample = estimate_model(cfg, &inputs, model, &prior, false)?;
        let r = evidence(
            model,
            &inputs.data,
            &inputs.clamp,
            &prior,
            &mechanism,
            &sample,
            &settings,
        )?;
        out.lap(&format!("evidence:{name}"));
        let mut row = vec![name.clone()];
        row.extend(evidence_fields(&r));
        rows.push(row);
    }
    let header: Vec<String> = std::iter::once("model")
        .chain(header_tail)
        .map(String::from)
        .collect();
    out.csv("evidence.csv", &header, rows)
}

fn evidence_fields(r: &alaam::evaluation::EvidenceResult) -> Vec<String> {
    let theta = r
        .theta_prime
        .iter()
        .map(|&v| fmt(v))
        .collect::<Vec<_>>()
        .join(" ");
    vec![
        theta,
        fmt(r.log_likelihood),
        fmt(r.log_likelihood_se),
        fmt(r.log_prior),
        fmt(r.log_posterior),
        fmt(r.log_posterior_se),
        fmt(r.log_evidence),
        fmt(r.log_evidence_se),
    ]
}

pub fn mnar_sweep_cmd(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let inputs = Inputs::load(cfg)?;
    if inputs.data.missing_count() == 0 {
        log::warn!("no missing outcomes: every grid point gives the same posterior");
    }
    let model = inputs.bind(&cfg.model.terms)?;
    let prior = build_prior(cfg, &inputs, &model, true)?;
    let points = mnar_sweep(
        &model,
        &inputs.data,
        &inputs.clamp,
        &prior,
        &cfg.evaluation.phi1_grid,
        &cfg.estimation(),
        cfg.sampler.burn_in,
        cfg.sampler.thinning,
    )?;
    out.lap("mnar-sweep");
    let header = ["phi1", "term", "mean", "sd", "q2.5", "q97.5"].map(String::from);
    let rows = sweep_rows(&points)
        .into_iter()
        .map(|(phi1, term, mean, sd, lo, hi)| {
            vec![fmt(phi1), term, fmt(mean), fmt(sd), fmt(lo), fmt(hi)]
        });
    out.csv("mnar_sweep.csv", &header, rows)
}
