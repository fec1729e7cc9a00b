//! Run configuration: one TOML file per run.
//!
//! ```toml
//! seed = 1
//! out = "results"            # optional; --out and BAYESGEO_OUT also work
//! formats = ["csv", "json"]  # optional
//!
//! [[experiment]]
//! kind = "audit"
//! model = "laplace_iid"
//! n_list = [100]
//! eps_list = [0.5]
//! samples = 10000
//! ```
//!
//! Unknown keys are errors. After [`RunConfig::validate`] every default is
//! filled in, so the resolved config written next to the outputs is the
//! complete record of the run.

use std::fmt;
use std::path::{Path, PathBuf};

use bayesgeo::audit::prop4_bound;
use bayesgeo::model::{make_model, ModelInstance, ModelParams, MODEL_NAMES};
use bayesgeo::sampler::Algorithm;
use bayesgeo::solver::Method;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed. Required: runs never draw on ambient entropy.
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(rename = "experiment", default)]
    pub experiments: Vec<Experiment>,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Map(MapExperiment),
    Mmse(MmseExperiment),
    Divergence(DivergenceExperiment),
    Conjugate(ConjugateExperiment),
    Audit(AuditExperiment),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapExperiment {
    #[serde(default)]
    pub name: String,
    pub model: String,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default = "default_method")]
    pub method: Method,
    /// Fixed step; automatic when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
}

fn default_method() -> Method {
    Method::Fista
}
fn default_max_iter() -> usize {
    10_000
}
fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmseExperiment {
    #[serde(default)]
    pub name: String,
    pub model: String,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Per chain; 10% of the chain length for MCMC when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Moreau parameter (MYULA).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

fn default_algorithm() -> Algorithm {
    Algorithm::Exact
}
fn default_samples() -> usize {
    100_000
}
fn default_chains() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    /// `D_φ(u, x)`.
    Bregman,
    /// `D_φ(x, u)`.
    Dual,
    /// Geodesic quadrature of the canonical divergence.
    Canonical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergenceExperiment {
    #[serde(default)]
    pub name: String,
    pub model: String,
    #[serde(default)]
    pub params: ModelParams,
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    #[serde(default = "default_forms")]
    pub forms: Vec<Form>,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
}

fn default_forms() -> Vec<Form> {
    vec![Form::Bregman, Form::Dual, Form::Canonical]
}
fn default_quad_order() -> usize {
    bayesgeo::geometry::DEFAULT_QUAD_ORDER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugateExperiment {
    #[serde(default)]
    pub name: String,
    pub model: String,
    #[serde(default)]
    pub params: ModelParams,
    pub eta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Check {
    ScoreIdentity,
    BayesArgminPrimal,
    BayesArgminDual,
    ExpectedErrorMap,
    ExpectedErrorMmse,
    TailAudit,
    ShiftedMap,
    DualityClosure,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::ScoreIdentity,
        Check::BayesArgminPrimal,
        Check::BayesArgminDual,
        Check::ExpectedErrorMap,
        Check::ExpectedErrorMmse,
        Check::TailAudit,
        Check::ShiftedMap,
        Check::DualityClosure,
    ];

    /// Whether the check is defined for `model` (tail needs an ε list).
    pub fn applies_to(self, model: &ModelInstance, has_eps: bool) -> bool {
        use bayesgeo::model::{NonsmoothKind, Smoothness};
        let smooth = model.potential.smoothness() != Smoothness::NonSmooth;
        let constrained = model.is_constrained();
        let penalised = model.potential.nonsmooth_kind() == NonsmoothKind::General;
        match self {
            Check::ScoreIdentity => !penalised && (!constrained || model.references.score_mean.is_some()),
            Check::BayesArgminPrimal => smooth && !constrained,
            Check::BayesArgminDual | Check::ExpectedErrorMmse | Check::DualityClosure => smooth,
            Check::ExpectedErrorMap => true,
            Check::TailAudit => has_eps,
            Check::ShiftedMap => constrained,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditExperiment {
    #[serde(default)]
    pub name: String,
    pub model: String,
    #[serde(default)]
    pub params: ModelParams,
    /// Every applicable check when empty.
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Dimensions to sweep; the model's own `n` when empty.
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub eps_list: Vec<f64>,
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Map(_) => "map",
            Experiment::Mmse(_) => "mmse",
            Experiment::Divergence(_) => "divergence",
            Experiment::Conjugate(_) => "conjugate",
            Experiment::Audit(_) => "audit",
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Experiment::Map(e) => &e.name,
            Experiment::Mmse(e) => &e.name,
            Experiment::Divergence(e) => &e.name,
            Experiment::Conjugate(e) => &e.name,
            Experiment::Audit(e) => &e.name,
        }
    }

    fn name_mut(&mut self) -> &mut String {
        match self {
            Experiment::Map(e) => &mut e.name,
            Experiment::Mmse(e) => &mut e.name,
            Experiment::Divergence(e) => &mut e.name,
            Experiment::Conjugate(e) => &mut e.name,
            Experiment::Audit(e) => &mut e.name,
        }
    }

    pub fn model(&self) -> (&str, &ModelParams) {
        match self {
            Experiment::Map(e) => (&e.model, &e.params),
            Experiment::Mmse(e) => (&e.model, &e.params),
            Experiment::Divergence(e) => (&e.model, &e.params),
            Experiment::Conjugate(e) => (&e.model, &e.params),
            Experiment::Audit(e) => (&e.model, &e.params),
        }
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut config = parse_config(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    config.validate()?;
    Ok(config)
}

/// Parses without validating, so command-line overrides (seed, output
/// directory) can be applied first.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(with_suggestion(&e.to_string())))
}

impl RunConfig {
    /// Checks every invariant and materialises defaults in place.
    pub fn validate(&mut self) -> Result<(), CliError> {
        if self.seed.is_none() {
            return Err(CliError::Config("missing field `seed`: every run needs an explicit master seed".into()));
        }
        if self.formats.is_empty() {
            return Err(CliError::Config("`formats` must list at least one of csv, json".into()));
        }
        if self.experiments.is_empty() {
            return Err(CliError::Config("no [[experiment]] tables in config".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, exp) in self.experiments.iter_mut().enumerate() {
            let label = exp_label(i, exp);
            let at = |msg: String| CliError::Config(format!("experiment {} ({label}): {msg}", i + 1));
            if exp.name().is_empty() {
                let (model, _) = exp.model();
                *exp.name_mut() = format!("{:02}_{}_{}", i + 1, exp.kind(), model);
            }
            if !exp.name().chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
                return Err(at(format!("name `{}` may only use [A-Za-z0-9_.-]", exp.name())));
            }
            if !seen.insert(exp.name().to_string()) {
                return Err(at(format!("duplicate experiment name `{}`", exp.name())));
            }
            validate_experiment(exp).map_err(at)?;
        }
        Ok(())
    }
}

fn exp_label(i: usize, exp: &Experiment) -> String {
    if exp.name().is_empty() {
        format!("{} #{}", exp.kind(), i + 1)
    } else {
        exp.name().to_string()
    }
}

fn build(name: &str, params: &ModelParams) -> Result<ModelInstance, String> {
    if !MODEL_NAMES.contains(&name) {
        let hint = nearest(name, MODEL_NAMES).map(|s| format!("; did you mean `{s}`?")).unwrap_or_default();
        return Err(format!("unknown model `{name}`{hint}"));
    }
    make_model(name, params).map_err(|e| e.to_string())
}

fn validate_experiment(exp: &mut Experiment) -> Result<(), String> {
    let (name, params) = exp.model();
    let model = build(name, params)?;
    let name = name.to_string();
    let n = model.dim();
    let dims = |what: &str, v: &[f64]| {
        if v.len() == n {
            Ok(())
        } else {
            Err(format!("`{what}` has {} entries but model `{name}` has dimension {n}", v.len()))
        }
    };
    match exp {
        Experiment::Map(e) => {
            if let Some(init) = &e.init {
                dims("init", init)?;
            }
            if e.max_iter == 0 || !(e.tol > 0.0) {
                return Err("`max_iter` and `tol` must be positive".into());
            }
        }
        Experiment::Mmse(e) => {
            if e.samples == 0 || e.chains == 0 {
                return Err("`samples` and `chains` must be positive".into());
            }
        }
        Experiment::Divergence(e) => {
            dims("u", &e.u)?;
            dims("x", &e.x)?;
            if e.forms.is_empty() || e.quad_order == 0 {
                return Err("`forms` must be non-empty and `quad_order` positive".into());
            }
        }
        Experiment::Conjugate(e) => dims("eta", &e.eta)?,
        Experiment::Audit(e) => {
            if e.samples < 2 {
                return Err("`samples` must be at least 2".into());
            }
            let models: Vec<ModelInstance> = if e.n_list.is_empty() {
                vec![model]
            } else {
                e.n_list
                    .iter()
                    .map(|&k| build(&e.model, &e.params.clone().with("n", k)))
                    .collect::<Result<_, _>>()?
            };
            let has_eps = !e.eps_list.is_empty();
            if e.checks.is_empty() {
                e.checks = Check::ALL.into_iter().filter(|c| c.applies_to(&models[0], has_eps)).collect();
            }
            if e.checks.contains(&Check::TailAudit) && !has_eps {
                return Err("tail_audit needs a non-empty `eps_list`".into());
            }
            if e.checks.contains(&Check::TailAudit) {
                for m in &models {
                    for &eps in &e.eps_list {
                        prop4_bound(m.dim(), eps).map_err(|err| format!("eps_list: {err}"))?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Nearest candidate by edit distance, if it is plausibly a typo.
pub fn nearest<'a>(word: &str, candidates: &[&'a str]) -> Option<&'a str> {
    candidates
        .iter()
        .map(|c| (strsim::damerau_levenshtein(word, c), *c))
        .min()
        .filter(|(d, c)| *d <= 2.max(c.len() / 3))
        .map(|(_, c)| c)
}

/// Appends a "did you mean" hint to serde's unknown field/variant messages.
fn with_suggestion(msg: &str) -> String {
    let tick = |s: &str| s.split('`').nth(1).map(str::to_string);
    for marker in ["unknown field ", "unknown variant "] {
        let Some(pos) = msg.find(marker) else { continue };
        let rest = &msg[pos + marker.len()..];
        let Some(word) = tick(rest) else { continue };
        let Some(list) = rest.split("expected ").nth(1) else { continue };
        let options: Vec<&str> = list.split('`').skip(1).step_by(2).collect();
        if let Some(best) = nearest(&word, &options) {
            return format!("{}\nhint: did you mean `{best}`?", msg.trim_end());
        }
    }
    msg.to_string()
}
