//! Acceptance suite: one line per criterion, then the individual claims.
//!
//! A claim marked `ledgered` states a value that the independent oracle
//! contradicts. It is still evaluated against the stated value and reported
//! as failing; the run as a whole fails on any other failing claim, or if a
//! ledgered claim unexpectedly starts to hold.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use bayesgeo::audit::{
    bayes_argmin_dual, bayes_argmin_primal, expected_error_map, expected_error_mmse, score_identity, shifted_map,
    tail_audit, ArgminMethod, AuditConfig, AuditReport,
};
use bayesgeo::exec::rng_for;
use bayesgeo::geometry::{
    biconjugate, bregman, bregman_via_conjugate, canonical_numeric, dual_metric_check, LegendreBudget,
};
use bayesgeo::model::{self, make_model, ModelInstance, ModelParams, Smoothness, MODEL_NAMES};
use bayesgeo::sampler::{posterior_mean, sample, Algorithm, ChainConfig};
use bayesgeo::solver::{solve_map, Method, SolverConfig};
use bayesgeo::special::EULER_GAMMA;

type Res<T> = Result<T, Box<dyn std::error::Error>>;

const SEED: u64 = 20_240_611;
const N: usize = 100_000;

struct Claim {
    text: String,
    ok: bool,
    ledgered: Option<&'static str>,
}

#[derive(Default)]
struct Claims(Vec<Claim>);

impl Claims {
    fn check(&mut self, ok: bool, text: impl Into<String>) {
        self.0.push(Claim { text: text.into(), ok, ledgered: None });
    }

    fn ledgered(&mut self, ok: bool, text: impl Into<String>, why: &'static str) {
        self.0.push(Claim { text: text.into(), ok, ledgered: Some(why) });
    }

    fn report(&mut self, r: &AuditReport, label: &str) {
        self.check(
            r.pass,
            format!("{label}: estimate {:.6} vs {:.6} (slack {:.2e})", r.estimate, r.reference, r.slack),
        );
    }
}

fn model(name: &str, params: ModelParams) -> ModelInstance {
    make_model(name, &params).expect("zoo model")
}

fn draws(m: &ModelInstance, count: usize, stream: u64) -> Vec<Vec<f64>> {
    let sampler = m.exact_sampler().expect("exact sampler");
    let mut rng = rng_for(SEED, stream, 0);
    (0..count)
        .map(|_| {
            let mut x = vec![0.0; m.dim()];
            sampler.draw(&mut rng, &mut x);
            x
        })
        .collect()
}

fn config() -> AuditConfig {
    AuditConfig::new(N, SEED)
}

fn smooth_trio() -> Vec<ModelInstance> {
    vec![
        model("gaussian", ModelParams::new().with("mu", vec![1.0, -2.0])),
        model("quartic", ModelParams::new()),
        model("exp_linear", ModelParams::new()),
    ]
}

fn canonical_equals_bregman(c: &mut Claims) -> Res<()> {
    let models = [
        model("gaussian", ModelParams::new().with("cov", vec![vec![2.0, 0.6], vec![0.6, 1.0]])),
        model("quartic", ModelParams::new().with("n", 3usize)),
        model("exp_linear", ModelParams::new().with("n", 3usize)),
    ];
    for m in &models {
        let pts = draws(m, 200, 1);
        let mut worst: f64 = 0.0;
        for pair in pts.chunks_exact(2) {
            let b = bregman(&*m.potential, &pair[0], &pair[1])?.value;
            let q = canonical_numeric(&*m.potential, &pair[0], &pair[1], 30)?.value;
            worst = worst.max((q - b).abs() / (1.0 + b));
        }
        c.check(worst < 1e-8, format!("{}: max |canonical − bregman|/(1+bregman) = {worst:.2e} over 100 pairs", m.name));
    }
    Ok(())
}

fn primal_is_map(c: &mut Claims) -> Res<()> {
    for m in smooth_trio() {
        let r = bayes_argmin_primal(&m, &config(), ArgminMethod::Solver)?;
        c.report(&r, &format!("{} n={}: ‖primal argmin − MAP‖", m.name, m.dim()));
    }
    Ok(())
}

fn dual_is_mmse(c: &mut Claims) -> Res<()> {
    for m in smooth_trio() {
        let r = bayes_argmin_dual(&m, &config())?;
        c.report(&r, &format!("{} n={}: dual argmin vs MC posterior mean", m.name, m.dim()));
    }
    let e = model("exp_linear", ModelParams::new());
    let dual = bayes_argmin_dual(&e, &config())?;
    let primal = bayes_argmin_primal(&e, &config(), ArgminMethod::Solver)?;
    c.check(
        (dual.estimate + EULER_GAMMA).abs() <= dual.slack,
        format!("exp_linear dual argmin {:.5} ≈ −0.5772", dual.estimate),
    );
    c.check(primal.estimate.abs() <= primal.slack, format!("exp_linear primal argmin {:.2e} ≈ 0", primal.estimate));
    Ok(())
}

fn expected_error_bounds(c: &mut Claims) -> Res<()> {
    for n in [10usize, 100, 1000] {
        for (name, target) in [("gaussian", 0.5), ("laplace_iid", 1.0), ("exponential_cone", 1.0)] {
            let r = expected_error_map(&model(name, ModelParams::new().with("n", n)), &config())?;
            let se = r.extra_value("se").unwrap_or(f64::NAN);
            c.check(
                (r.estimate - target).abs() <= 3.0 * se && r.pass,
                format!("{name} n={n}: E[(φ−φ_MAP)/n] = {:.5} ± {:.1e} (target {target}, ≤ 1 + 3se)", r.estimate, 3.0 * se),
            );
        }
        let r = expected_error_mmse(&model("exp_linear", ModelParams::new().with("n", n)), &config())?;
        let map_loss = r.extra_value("map_loss").unwrap_or(f64::NAN);
        c.check(
            r.pass && r.flag_value("strict") == Some(true),
            format!("exp_linear n={n}: MMSE loss {:.5} < MAP loss {map_loss:.5} ≤ 1 (strict, gap {:.1e})", r.estimate,
                r.extra_value("gap").unwrap_or(f64::NAN)),
        );
    }
    Ok(())
}

fn tail_bound(c: &mut Claims) -> Res<()> {
    let eps = [0.2, 0.5, 1.0];
    for name in ["laplace_iid", "gaussian"] {
        let reports = tail_audit(name, &ModelParams::new(), &[100, 1000, 10_000], &eps, &config())?;
        let failing: Vec<String> = reports
            .iter()
            .filter(|r| !r.pass)
            .map(|r| format!("n={} ε={}", r.n, r.extra_value("eps").unwrap_or(f64::NAN)))
            .collect();
        let worst = reports.iter().map(|r| r.estimate - r.reference).fold(f64::NEG_INFINITY, f64::max);
        c.check(
            failing.is_empty() && reports.len() == 9,
            format!("{name}: freq ≤ 3e^(−nε²/16) + 3σ in all 9 cells (max freq − bound {worst:.2e}){}",
                if failing.is_empty() { String::new() } else { format!("; failing {failing:?}") }),
        );
    }
    Ok(())
}

fn duality_identities(c: &mut Claims) -> Res<()> {
    let budget = LegendreBudget::default();
    for m in smooth_trio() {
        let pts = draws(&m, 40, 2);
        let worst = pts
            .chunks_exact(2)
            .map(|p| -> Res<f64> {
                Ok((bregman(&*m.potential, &p[0], &p[1])?.value - bregman_via_conjugate(&*m.potential, &p[0], &p[1], budget)?).abs())
            })
            .collect::<Res<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        c.check(worst < 1e-7, format!("{}: Fenchel–Young form of D_φ within {worst:.1e}", m.name));
    }
    for m in [model("gaussian", ModelParams::new().with("var", vec![1.0, 0.25])), model("exp_linear", ModelParams::new())] {
        let worst = draws(&m, 5, 3)
            .iter()
            .map(|x| dual_metric_check(&*m.potential, x, None, budget))
            .collect::<Result<Vec<f64>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        c.check(worst < 1e-4, format!("{}: ‖g*(η)·g(x) − I‖ = {worst:.1e}", m.name));
    }
    for m in [model("quartic", ModelParams::new()), model("exp_linear", ModelParams::new()), model("laplace_iid", ModelParams::new())] {
        let mut worst: f64 = 0.0;
        for x in draws(&m, 20, 4) {
            worst = worst.max((biconjugate(&*m.potential, &x, budget)? - model::eval(&*m.potential, &x)?).abs());
        }
        c.check(worst < 1e-6, format!("{}: |φ**(x) − φ(x)| ≤ {worst:.1e} at 20 points", m.name));
    }
    Ok(())
}

fn constrained_behaviour(c: &mut Claims) -> Res<()> {
    let t = model("truncated_gaussian_box", ModelParams::new());
    let r = score_identity(&t, &config())?;
    c.check(
        r.pass && (r.estimate - 0.2876).abs() <= r.slack.max(5e-5) && r.flag_value("nonzero") == Some(true),
        format!("truncated: E[∇φ] = {:.4} ± {:.1e}, nonzero", r.estimate, r.slack),
    );
    let s = shifted_map(&t, &config())?;
    c.check(
        s.pass && (s.estimate - 1.2876).abs() <= s.slack.max(5e-5) && s.flag_value("distinct_from_map") == Some(true),
        format!("truncated: shifted MAP {:.4} ± {:.1e}, MAP = 1", s.estimate, s.slack),
    );

    // the cone model needs a tighter Monte Carlo error than the 1e-3 tolerance
    let big = AuditConfig::new(10 * N, SEED);
    let e = model("exp_on_cone", ModelParams::new());
    let map = solve_map(&e, &SolverConfig::with_method(Method::ProjectedGradient))?.estimate[0];
    let shifted = shifted_map(&e, &big)?.estimate;
    let mmse = posterior_mean(&sample(&e, &ChainConfig::new(Algorithm::Exact, 10 * N, SEED))?)?.0[0];
    c.check(map.abs() < 1e-3, format!("exp_on_cone: MAP {map:.2e} ≈ 0"));
    c.check((shifted - 0.517).abs() < 1e-3, format!("exp_on_cone: shifted MAP {shifted:.4} ≈ 0.517"));
    c.ledgered(
        (mmse - 0.413).abs() < 1e-3,
        format!("exp_on_cone: posterior mean {mmse:.4} ≈ 0.413"),
        "quadrature of ∫x e^{x−eˣ} / ∫e^{x−eˣ} over x ≥ 0 gives 0.445991",
    );
    c.check((mmse - 0.445_990_712_520_796).abs() < 1e-3, format!("exp_on_cone: posterior mean {mmse:.4} ≈ 0.44599 (quadrature)"));
    Ok(())
}

fn non_smooth_path(c: &mut Claims) -> Res<()> {
    let mut worst: f64 = 0.0;
    for (y, lambda) in [(2.0, 1.0), (0.5, 1.0), (-3.0, 0.7), (1.0, 1.0), (0.0, 0.3)] {
        let m = model("lasso_1d", ModelParams::new().with("y", y).with("lambda", lambda));
        let expect = y.signum() * (y.abs() - lambda).max(0.0);
        for method in [Method::ProximalGradient, Method::Fista] {
            worst = worst.max((solve_map(&m, &SolverConfig::with_method(method))?.estimate[0] - expect).abs());
        }
    }
    c.check(worst < 1e-8, format!("lasso_1d: |MAP − soft threshold| ≤ {worst:.1e}"));

    let m = model("laplace_iid", ModelParams::new().with("n", 2usize));
    let mut estimates = Vec::new();
    for lambda in [0.1, 0.05, 0.025] {
        let cfg = ChainConfig { lambda: Some(lambda), ..ChainConfig::new(Algorithm::Myula, 2 * N, SEED) };
        estimates.push(posterior_mean(&sample(&m, &cfg)?)?);
    }
    let mut consistent = true;
    let mut widest: f64 = 0.0;
    for pair in estimates.windows(2) {
        let ((a, sa), (b, sb)) = (&pair[0], &pair[1]);
        for i in 0..2 {
            let gap = (a[i] - b[i]).abs();
            consistent &= gap <= 3.0 * (sa[i] * sa[i] + sb[i] * sb[i]).sqrt();
            widest = widest.max(gap);
        }
    }
    c.check(consistent, format!("laplace_iid MYULA λ = 0.1 → 0.05 → 0.025: successive means agree within 3se (max gap {widest:.1e})"));
    Ok(())
}

fn fd_gradient_ok(m: &ModelInstance) -> Res<bool> {
    let p = &*m.potential;
    for x in draws(m, 100, 5) {
        let g = model::grad(p, &x)?;
        let h = 1e-4 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt());
        for i in 0..x.len() {
            let at = |t: f64| {
                let mut z = x.clone();
                z[i] += t;
                model::eval(p, &z).unwrap_or(f64::INFINITY)
            };
            let (plus, minus) = (at(h), at(-h));
            let fd = if minus.is_finite() {
                (plus - minus) / (2.0 * h)
            } else {
                (-3.0 * at(0.0) + 4.0 * plus - at(2.0 * h)) / (2.0 * h)
            };
            if (fd - g[i]).abs() / g[i].abs().max(1.0) >= 1e-5 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn engineering(c: &mut Claims) -> Res<()> {
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.toml");
    let dir = tempfile::tempdir()?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_bayesgeo"))
            .args(["run", config, "--out"])
            .arg(&out)
            .env_remove("BAYESGEO_OUT")
            .status()?;
        c.check(status.code() == Some(0), format!("default config run {run}: exit {:?}", status.code()));
        outputs.push(out);
    }
    let mut csvs: Vec<String> = std::fs::read_dir(&outputs[0])?
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    csvs.sort();
    let differing: Vec<&String> =
        csvs.iter().filter(|n| std::fs::read(outputs[0].join(n)).ok() != std::fs::read(outputs[1].join(n)).ok()).collect();
    c.check(
        !csvs.is_empty() && differing.is_empty(),
        format!("rerun with the same seed: {} CSVs byte-identical{}", csvs.len(),
            if differing.is_empty() { String::new() } else { format!("; differing {differing:?}") }),
    );

    let mut zoo: Vec<ModelInstance> = MODEL_NAMES
        .iter()
        .filter(|n| **n != "gaussian_linear")
        .map(|n| model(n, ModelParams::new()))
        .collect();
    zoo.push(model(
        "gaussian_linear",
        ModelParams::new().with("a", vec![vec![1.0, 0.5], vec![0.0, 2.0]]).with("y", vec![1.0, -1.0]),
    ));
    let mut failing = Vec::new();
    for m in &zoo {
        if m.potential.smoothness() == Smoothness::NonSmooth {
            // the gradient oracle is the smooth part's; differentiate that
            continue;
        }
        if !fd_gradient_ok(m)? {
            failing.push(m.name.clone());
        }
    }
    let checked = zoo.iter().filter(|m| m.potential.smoothness() != Smoothness::NonSmooth).count();
    c.check(failing.is_empty(), format!("finite-difference gradients on {checked} differentiable zoo models{}",
        if failing.is_empty() { String::new() } else { format!("; failing {failing:?}") }));
    let mut nonsmooth_ok = true;
    for m in zoo.iter().filter(|m| m.potential.smoothness() == Smoothness::NonSmooth) {
        // away from kinks the full gradient is defined and must match too
        nonsmooth_ok &= fd_gradient_ok(m)?;
    }
    c.check(nonsmooth_ok, "finite-difference gradients on laplace_iid and lasso_1d away from the kink");
    Ok(())
}

struct Criterion {
    id: u8,
    title: &'static str,
    budget: Duration,
    run: fn(&mut Claims) -> Res<()>,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, title: "canonical divergence = Bregman divergence", budget: Duration::from_secs(5), run: canonical_equals_bregman },
        Criterion { id: 2, title: "MAP = primal Bayes estimator", budget: Duration::from_secs(30), run: primal_is_map },
        Criterion { id: 3, title: "MMSE = dual Bayes estimator", budget: Duration::from_secs(30), run: dual_is_mmse },
        Criterion { id: 4, title: "expected-error bounds and MMSE ≤ MAP ≤ 1", budget: Duration::from_secs(60), run: expected_error_bounds },
        Criterion { id: 5, title: "tail bound 3e^(−nε²/16)", budget: Duration::from_secs(120), run: tail_bound },
        Criterion { id: 6, title: "duality identities", budget: Duration::from_secs(10), run: duality_identities },
        Criterion { id: 7, title: "constrained-domain behaviour", budget: Duration::from_secs(30), run: constrained_behaviour },
        Criterion { id: 8, title: "non-smooth path", budget: Duration::from_secs(60), run: non_smooth_path },
        Criterion { id: 9, title: "engineering: default run, determinism, gradients", budget: Duration::from_secs(120), run: engineering },
    ];
    let mut unexpected = 0;
    let mut passed = 0;
    for cr in &criteria {
        let mut claims = Claims::default();
        let start = Instant::now();
        let outcome = (cr.run)(&mut claims);
        let elapsed = start.elapsed();
        if let Err(e) = &outcome {
            claims.check(false, format!("error: {e}"));
        }
        claims.check(elapsed <= cr.budget, format!("runtime {:.1} s (budget {} s)", elapsed.as_secs_f64(), cr.budget.as_secs()));
        let pass = claims.0.iter().all(|c| c.ok);
        passed += usize::from(pass);
        println!("criterion {} {}: {} ({:.1} s)", cr.id, if pass { "PASS" } else { "FAIL" }, cr.title, elapsed.as_secs_f64());
        for c in &claims.0 {
            let mark = if c.ok { "ok " } else { "ERR" };
            match c.ledgered {
                Some(why) => {
                    println!("    {mark} {} [known deviation: {why}]", c.text);
                    unexpected += usize::from(c.ok);
                }
                None => {
                    println!("    {mark} {}", c.text);
                    unexpected += usize::from(!c.ok);
                }
            }
        }
    }
    println!("acceptance: {passed}/{} criteria pass, {unexpected} unexpected result(s)", criteria.len());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
