use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bayesgeo::exec::Exec;
use bayesgeo::model::{ModelParams, ParamValue};
use bayesgeo::sampler::Algorithm;
use bayesgeo::solver::Method;
use bayesgeo_cli::config::{
    AuditExperiment, Check, ConjugateExperiment, DivergenceExperiment, Experiment, Form, Format, MapExperiment,
    MmseExperiment, RunConfig,
};
use bayesgeo_cli::runner::artifacts;
use bayesgeo_cli::{run, CliError, Exit};
use clap::{Args, Parser, Subcommand};

/// Output directory used when neither --out nor the config names one.
const OUT_ENV: &str = "BAYESGEO_OUT";

#[derive(Parser)]
#[command(name = "bayesgeo", version, about = "MAP/MMSE estimation, Bregman geometry and Monte Carlo audits")]
struct Cli {
    /// Master seed (overrides the config file; 0 for single commands).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory. Falls back to the config's `out`, then $BAYESGEO_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; repeat for both.
    #[arg(long, global = true, value_enum)]
    format: Vec<Format>,
    /// Worker threads for Monte Carlo batches (1 = sequential).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    model: String,
    /// Model parameter as KEY=VALUE, VALUE in TOML syntax (`n=3`, `mu=[1,2]`).
    #[arg(short = 'p', long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Posterior mode by (proximal) gradient methods.
    Map {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "fista")]
        method: Method,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        init: Option<Vec<f64>>,
    },
    /// Posterior mean by exact sampling or Langevin MCMC.
    Mmse {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "exact")]
        algorithm: Algorithm,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long, default_value_t = 4)]
        chains: usize,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Bregman, dual and canonical divergences between two points.
    Divergence {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        u: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
        #[arg(long = "form", value_enum)]
        forms: Vec<Form>,
        #[arg(long, default_value_t = 30)]
        quad_order: usize,
    },
    /// Numerical Legendre transform at a dual point.
    Conjugate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        eta: Vec<f64>,
    },
    /// Monte Carlo audits; every applicable check unless --check is given.
    Audit {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "check", value_enum)]
        checks: Vec<Check>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, value_delimiter = ',')]
        n_list: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        eps_list: Vec<f64>,
    },
    /// Run every experiment of a TOML config.
    Run { config: PathBuf },
}

fn parse_params(items: &[String]) -> Result<ModelParams, CliError> {
    let mut params = ModelParams::new();
    for item in items {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("parameter `{item}` is not KEY=VALUE")))?;
        let table: toml::Table = toml::from_str(&format!("v = {value}"))
            .map_err(|e| CliError::Config(format!("parameter `{key}`: {}", e.message())))?;
        let v: ParamValue = table["v"]
            .clone()
            .try_into()
            .map_err(|_| CliError::Config(format!("parameter `{key}` must be a number, vector or matrix")))?;
        params.set(key.trim(), v);
    }
    Ok(params)
}

fn single(cli: &Cli) -> Result<Option<Experiment>, CliError> {
    let (model, params) = match &cli.command {
        Command::Run { .. } => return Ok(None),
        Command::Map { model, .. }
        | Command::Mmse { model, .. }
        | Command::Divergence { model, .. }
        | Command::Conjugate { model, .. }
        | Command::Audit { model, .. } => (model.model.clone(), parse_params(&model.params)?),
    };
    let name = String::new();
    Ok(Some(match &cli.command {
        Command::Map { method, step, max_iter, tol, init, .. } => Experiment::Map(MapExperiment {
            name,
            model,
            params,
            method: *method,
            step: *step,
            max_iter: *max_iter,
            tol: *tol,
            init: init.clone(),
        }),
        Command::Mmse { algorithm, samples, burn_in, chains, step, lambda, .. } => Experiment::Mmse(MmseExperiment {
            name,
            model,
            params,
            algorithm: *algorithm,
            samples: *samples,
            burn_in: *burn_in,
            chains: *chains,
            step: *step,
            lambda: *lambda,
        }),
        Command::Divergence { u, x, forms, quad_order, .. } => Experiment::Divergence(DivergenceExperiment {
            name,
            model,
            params,
            u: u.clone(),
            x: x.clone(),
            forms: if forms.is_empty() { vec![Form::Bregman, Form::Dual, Form::Canonical] } else { forms.clone() },
            quad_order: *quad_order,
        }),
        Command::Conjugate { eta, .. } => Experiment::Conjugate(ConjugateExperiment { name, model, params, eta: eta.clone() }),
        Command::Audit { checks, samples, n_list, eps_list, .. } => Experiment::Audit(AuditExperiment {
            name,
            model,
            params,
            checks: checks.clone(),
            samples: *samples,
            n_list: n_list.clone(),
            eps_list: eps_list.clone(),
        }),
        Command::Run { .. } => unreachable!(),
    }))
}

fn main_inner(cli: Cli) -> Result<Exit, CliError> {
    let exec = match cli.threads {
        Some(0) => return Err(CliError::Config("--threads must be positive".into())),
        Some(k) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            if k == 1 {
                Exec::Sequential
            } else {
                Exec::Parallel
            }
        }
        None => Exec::default(),
    };
    let env_out = std::env::var_os(OUT_ENV).map(PathBuf::from);

    let (config, out, echo) = match single(&cli)? {
        None => {
            let Command::Run { config: path } = &cli.command else { unreachable!() };
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            let mut config = bayesgeo_cli::config::parse_config(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            if cli.seed.is_some() {
                config.seed = cli.seed;
            }
            if !cli.format.is_empty() {
                config.formats = cli.format.clone();
            }
            config.validate()?;
            let out = cli.out.clone().or_else(|| config.out.clone()).or(env_out).ok_or_else(|| {
                CliError::Config(format!("no output directory: pass --out, set `out` in the config or ${OUT_ENV}"))
            })?;
            (config, Some(out), false)
        }
        Some(exp) => {
            let formats = if !cli.format.is_empty() {
                cli.format.clone()
            } else if matches!(exp, Experiment::Divergence(_) | Experiment::Audit(_)) {
                vec![Format::Csv]
            } else {
                vec![Format::Json]
            };
            let mut config = RunConfig { seed: Some(cli.seed.unwrap_or(0)), out: None, formats, experiments: vec![exp] };
            config.validate()?;
            (config, cli.out.clone().or(env_out), true)
        }
    };

    let summary = run(&config, out.as_deref(), exec)?;
    if echo {
        let mut stdout = std::io::stdout().lock();
        for o in &summary.outcomes {
            for (_, bytes) in artifacts(o, &config.formats).iter().filter(|(n, _)| !n.ends_with(".plot.csv")) {
                let _ = stdout.write_all(bytes);
            }
        }
    }
    if let Some(dir) = &out {
        log::info!("wrote {} files to {}", summary.files.len(), dir.display());
    }
    if summary.exit != Exit::Pass {
        eprintln!("{} problem(s):", summary.failures().len());
        for f in summary.failures() {
            eprintln!("  {f}");
        }
    }
    Ok(summary.exit)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match main_inner(cli) {
        Ok(exit) => ExitCode::from(exit.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit().code())
        }
    }
}
