//! Executes a validated [`RunConfig`] and writes its artifacts.

use std::path::Path;
use std::time::Instant;

use bayesgeo::audit::{self, AuditConfig, AuditReport};
use bayesgeo::exec::Exec;
use bayesgeo::geometry::{bregman, canonical_numeric_checked, dual_bregman, legendre, LegendreBudget};
use bayesgeo::model::{make_model, ModelInstance};
use bayesgeo::sampler::{posterior_mean, sample, ChainConfig};
use bayesgeo::solver::{solve_map, SolverConfig, StepSize};
use serde::Serialize;
use serde_json::json;

use crate::config::{
    AuditExperiment, Check, ConjugateExperiment, DivergenceExperiment, Experiment, Form, Format, MapExperiment,
    MmseExperiment, RunConfig,
};
use crate::output::{self, num, opt, vector, Csv};
use crate::plot::emit_plot_data;
use crate::{CliError, Exit};

/// What one experiment produced, before anything touches the disk.
pub struct Products {
    /// Primary table (CSV form).
    pub table: Csv,
    /// Primary record (JSON form).
    pub record: serde_json::Value,
    pub reports: Vec<AuditReport>,
    /// False when an iterative solve ran out of budget; the artifacts are
    /// still written but the run exits with the numerical-failure code.
    pub converged: bool,
}

pub struct Outcome {
    pub name: String,
    pub kind: &'static str,
    pub result: Result<Products, CliError>,
}

impl Outcome {
    pub fn failures(&self) -> Vec<String> {
        match &self.result {
            Err(e) => vec![format!("{}: {e}", self.name)],
            Ok(p) if !p.converged => vec![format!("{}: solver did not converge", self.name)],
            Ok(p) => p.reports.iter().filter(|r| !r.pass).map(describe_failure).collect(),
        }
    }

    fn exit(&self) -> Exit {
        match &self.result {
            Err(e) => e.exit(),
            Ok(p) if !p.converged => Exit::Numerical,
            Ok(p) if p.reports.iter().any(|r| !r.pass) => Exit::AuditFailure,
            Ok(_) => Exit::Pass,
        }
    }
}

fn describe_failure(r: &AuditReport) -> String {
    let eps = r.extra_value("eps").map(|e| format!(" ε={e}")).unwrap_or_default();
    format!(
        "{} on {} (n={}{eps}): estimate {:.6e} vs {} {:.6e}, slack {:.3e}",
        r.check,
        r.model,
        r.n,
        r.estimate,
        if matches!(r.comparison, audit::Comparison::UpperBound) { "bound" } else { "reference" },
        r.reference,
        r.slack
    )
}

pub struct RunSummary {
    pub outcomes: Vec<Outcome>,
    pub exit: Exit,
    /// Written files, relative to the output directory (manifest last).
    pub files: Vec<String>,
}

impl RunSummary {
    pub fn failures(&self) -> Vec<String> {
        self.outcomes.iter().flat_map(Outcome::failures).collect()
    }
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
    bytes: usize,
}

/// Runs every experiment in order. With `out` set, artifacts are written
/// there along with `config.json` (the resolved config) and `manifest.json`.
pub fn run(config: &RunConfig, out: Option<&Path>, exec: Exec) -> Result<RunSummary, CliError> {
    let seed = config.seed.ok_or_else(|| CliError::Config("missing field `seed`".into()))?;
    let started = Instant::now();
    let outcomes: Vec<Outcome> = config
        .experiments
        .iter()
        .map(|exp| {
            log::info!("running {} ({})", exp.name(), exp.kind());
            Outcome { name: exp.name().to_string(), kind: exp.kind(), result: execute(exp, seed, exec) }
        })
        .collect();
    let exit = outcomes.iter().map(Outcome::exit).max().unwrap_or(Exit::Pass);

    let mut files = Vec::new();
    if let Some(dir) = out {
        let mut entries = Vec::new();
        let mut put = |name: String, bytes: Vec<u8>| -> Result<(), CliError> {
            output::write_atomic(&dir.join(&name), &bytes)?;
            entries.push(FileEntry { sha256: output::sha256_hex(&bytes), bytes: bytes.len(), path: name });
            Ok(())
        };
        let resolved = output::json(config);
        let config_hash = output::sha256_hex(&resolved);
        put("config.json".into(), resolved)?;
        for o in &outcomes {
            for (name, bytes) in artifacts(o, &config.formats) {
                put(name, bytes)?;
            }
        }
        let experiments: Vec<_> = outcomes
            .iter()
            .map(|o| {
                json!({
                    "name": o.name,
                    "kind": o.kind,
                    "status": match o.exit() { Exit::Pass => "pass", Exit::AuditFailure => "fail", _ => "error" },
                    "failures": o.failures(),
                })
            })
            .collect();
        let manifest = json!({
            "tool": "bayesgeo",
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config_sha256": config_hash,
            "threads": match exec { Exec::Sequential => 1, Exec::Parallel => rayon::current_num_threads() },
            "wall_time_s": started.elapsed().as_secs_f64(),
            "exit_code": exit.code(),
            "experiments": experiments,
            "files": entries,
        });
        files = entries.iter().map(|e| e.path.clone()).collect();
        output::write_atomic(&dir.join("manifest.json"), &output::json(&manifest))?;
        files.push("manifest.json".into());
    }
    Ok(RunSummary { outcomes, exit, files })
}

/// File name and contents of every artifact of one experiment.
pub fn artifacts(o: &Outcome, formats: &[Format]) -> Vec<(String, Vec<u8>)> {
    let Ok(p) = &o.result else { return Vec::new() };
    let mut files = Vec::new();
    if formats.contains(&Format::Csv) {
        files.push((format!("{}.csv", o.name), p.table_bytes()));
        if let Some(plot) = (!p.reports.is_empty()).then(|| emit_plot_data(&p.reports)).flatten() {
            files.push((format!("{}.plot.csv", o.name), plot));
        }
    }
    if formats.contains(&Format::Json) {
        files.push((format!("{}.json", o.name), output::json(&p.record)));
    }
    files
}

impl Products {
    pub fn table_bytes(&self) -> Vec<u8> {
        self.table.text().as_bytes().to_vec()
    }
}

pub fn execute(exp: &Experiment, seed: u64, exec: Exec) -> Result<Products, CliError> {
    match exp {
        Experiment::Map(e) => run_map(e, seed),
        Experiment::Mmse(e) => run_mmse(e, seed, exec),
        Experiment::Divergence(e) => run_divergence(e),
        Experiment::Conjugate(e) => run_conjugate(e),
        Experiment::Audit(e) => run_audit(e, seed, exec),
    }
}

fn model(name: &str, params: &bayesgeo::model::ModelParams) -> Result<ModelInstance, CliError> {
    make_model(name, params).map_err(|e| CliError::Config(e.to_string()))
}

fn run_map(e: &MapExperiment, seed: u64) -> Result<Products, CliError> {
    let m = model(&e.model, &e.params)?;
    let config = SolverConfig {
        step: e.step.map_or(StepSize::Auto, StepSize::Fixed),
        max_iter: e.max_iter,
        tol: e.tol,
        seed,
        init: e.init.clone(),
        ..SolverConfig::with_method(e.method)
    };
    let r = solve_map(&m, &config)?;
    if !r.converged {
        log::warn!("{}: solver stopped at max_iter with residual {:e}", e.name, r.residual);
    }
    let mut table =
        Csv::new(&["model", "method", "estimate", "objective", "residual", "iterations", "converged", "non_unique"]);
    table.row(&[
        e.model.clone(),
        e.method.as_str().into(),
        vector(&r.estimate),
        num(r.objective),
        num(r.residual),
        r.iterations.to_string(),
        r.converged.to_string(),
        r.non_unique.to_string(),
    ]);
    let record = json!({
        "model": e.model,
        "method": e.method.as_str(),
        "estimate": r.estimate,
        "objective": r.objective,
        "residual": r.residual,
        "iterations": r.iterations,
        "converged": r.converged,
        "non_unique": r.non_unique,
        "step": r.step,
    });
    Ok(Products { table, record, reports: Vec::new(), converged: r.converged })
}

fn run_mmse(e: &MmseExperiment, seed: u64, exec: Exec) -> Result<Products, CliError> {
    let m = model(&e.model, &e.params)?;
    let config = ChainConfig {
        step: e.step.map_or(StepSize::Auto, StepSize::Fixed),
        lambda: e.lambda,
        burn_in: e.burn_in,
        chains: e.chains,
        exec,
        ..ChainConfig::new(e.algorithm, e.samples, seed)
    };
    let set = sample(&m, &config)?;
    let (mean, se) = posterior_mean(&set)?;
    let mut table = Csv::new(&["model", "algorithm", "N", "burn_in", "seed", "mean", "se", "acceptance_rate"]);
    table.row(&[
        e.model.clone(),
        e.algorithm.as_str().into(),
        set.len().to_string(),
        set.burn_in.to_string(),
        seed.to_string(),
        vector(&mean),
        vector(&se),
        opt(set.acceptance_rate),
    ]);
    let record = json!({
        "model": e.model,
        "algorithm": e.algorithm.as_str(),
        "N": set.len(),
        "burn_in": set.burn_in,
        "seed": seed,
        "mean": mean,
        "se": se,
        "acceptance_rate": set.acceptance_rate,
        "chains": set.chain_lengths.len(),
        "step": set.step,
        "low_acceptance": set.low_acceptance,
    });
    Ok(Products { table, record, reports: Vec::new(), converged: true })
}

fn run_divergence(e: &DivergenceExperiment) -> Result<Products, CliError> {
    let m = model(&e.model, &e.params)?;
    let p = &*m.potential;
    let mut table = Csv::new(&["model", "form", "u", "x", "value", "quad_order", "residual"]);
    let mut rows = Vec::new();
    for form in &e.forms {
        let (value, order, residual) = match form {
            Form::Bregman => (bregman(p, &e.u, &e.x)?, None, None),
            Form::Dual => (dual_bregman(p, &e.u, &e.x)?, None, None),
            Form::Canonical => {
                let (v, res) = canonical_numeric_checked(p, &e.u, &e.x, e.quad_order)?;
                (v, Some(e.quad_order), Some(res))
            }
        };
        table.row(&[
            e.model.clone(),
            value.form.as_str().into(),
            vector(&e.u),
            vector(&e.x),
            num(value.value),
            order.map(|o| o.to_string()).unwrap_or_default(),
            opt(residual),
        ]);
        rows.push(json!({
            "form": value.form.as_str(),
            "value": value.value,
            "quad_order": order,
            "residual": residual,
        }));
    }
    let record = json!({ "model": e.model, "u": e.u, "x": e.x, "values": rows });
    Ok(Products { table, record, reports: Vec::new(), converged: true })
}

fn run_conjugate(e: &ConjugateExperiment) -> Result<Products, CliError> {
    let m = model(&e.model, &e.params)?;
    let d = legendre(&*m.potential, &e.eta, LegendreBudget::default())?;
    let mut table = Csv::new(&["model", "eta", "x", "conjugate"]);
    table.row(&[e.model.clone(), vector(&d.eta), vector(&d.x), num(d.conjugate)]);
    let record = json!({ "model": e.model, "eta": d.eta, "x": d.x, "conjugate": d.conjugate });
    Ok(Products { table, record, reports: Vec::new(), converged: true })
}

fn run_audit(e: &AuditExperiment, seed: u64, exec: Exec) -> Result<Products, CliError> {
    let config = AuditConfig { exec, ..AuditConfig::new(e.samples, seed) };
    let models: Vec<ModelInstance> = if e.n_list.is_empty() {
        vec![model(&e.model, &e.params)?]
    } else {
        e.n_list.iter().map(|&n| model(&e.model, &e.params.clone().with("n", n))).collect::<Result<_, _>>()?
    };
    let mut reports = Vec::new();
    for &check in &e.checks {
        if check == Check::TailAudit {
            let n_list: Vec<usize> = models.iter().map(ModelInstance::dim).collect();
            reports.extend(audit::tail_audit(&e.model, &e.params, &n_list, &e.eps_list, &config)?);
            continue;
        }
        for m in &models {
            reports.push(match check {
                Check::ScoreIdentity => audit::score_identity(m, &config)?,
                Check::BayesArgminPrimal => audit::bayes_argmin_primal(m, &config, Default::default())?,
                Check::BayesArgminDual => audit::bayes_argmin_dual(m, &config)?,
                Check::ExpectedErrorMap => audit::expected_error_map(m, &config)?,
                Check::ExpectedErrorMmse => audit::expected_error_mmse(m, &config)?,
                Check::ShiftedMap => audit::shifted_map(m, &config)?,
                Check::DualityClosure => audit::duality_closure(m, &config)?,
                Check::TailAudit => unreachable!(),
            });
        }
    }
    let mut table =
        Csv::new(&["check", "model", "n", "N", "estimate", "reference_or_bound", "slack", "pass", "seed"]);
    for r in &reports {
        table.row(&[
            r.check.clone(),
            r.model.clone(),
            r.n.to_string(),
            r.samples.to_string(),
            num(r.estimate),
            num(r.reference),
            num(r.slack),
            r.pass.to_string(),
            r.seed.to_string(),
        ]);
    }
    let record = serde_json::to_value(&reports).expect("reports serialise");
    Ok(Products { table, record, reports, converged: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn outcome(text: &str) -> Outcome {
        let mut config = parse_config(text).unwrap();
        config.validate().unwrap();
        let exp = &config.experiments[0];
        Outcome { name: exp.name().into(), kind: exp.kind(), result: execute(exp, 1, Exec::Sequential) }
    }

    const AUDIT: &str = "seed = 1\n[[experiment]]\nkind = \"audit\"\nmodel = \"gaussian\"\nchecks = [\"expected_error_map\"]\nsamples = 1000\n";

    #[test]
    fn failing_audit_maps_to_exit_one() {
        let mut o = outcome(AUDIT);
        assert_eq!(o.exit(), Exit::Pass);
        if let Ok(p) = &mut o.result {
            p.reports[0].pass = false;
        }
        assert_eq!(o.exit(), Exit::AuditFailure);
        assert!(o.failures()[0].starts_with("expected_error_map on gaussian (n=1)"));
    }

    #[test]
    fn severity_order() {
        assert!(Exit::Config > Exit::Numerical && Exit::Numerical > Exit::AuditFailure);
        let e = CliError::Core(bayesgeo::Error::Convergence { iterations: 3, residual: 1.0 });
        assert_eq!(e.exit().code(), 3);
        assert_eq!(CliError::Core(bayesgeo::Error::OutsideDomain).exit().code(), 2);
    }

    #[test]
    fn formats_select_artifacts() {
        let o = outcome(AUDIT);
        let names: Vec<String> = artifacts(&o, &[Format::Json]).into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, vec!["01_audit_gaussian.json"]);
        let names: Vec<String> = artifacts(&o, &[Format::Csv]).into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, vec!["01_audit_gaussian.csv", "01_audit_gaussian.plot.csv"]);
    }
}
