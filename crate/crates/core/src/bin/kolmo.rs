//! Command-line front end: construct networks, run verification suites and
//! rate sweeps.
//!
//! Exit codes: 0 success, 1 failed property or I/O error, 2 configuration
//! error, 3 calibration failure, 4 numeric failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use kolmo_dnn::bench::{self, Check};
use kolmo_dnn::catalog;
use kolmo_dnn::constructor::{
    self, calibrate, check_paper_hypotheses, minimal_kappa, paper_constants, param_certificate, select_realization,
    CalibrationBudget, PaperParams, RateConstants, Selection,
};
use kolmo_dnn::error::Error;
use kolmo_dnn::oracle::{lp_error, FkConfig, ReferenceSolution};
use kolmo_dnn::rng::{self, tag};
use kolmo_dnn::sweep::{rate_sweep, SweepConfig, SweepKind};

/// Networks above this many parameters are written in factored form.
const DENSE_LIMIT: u64 = 2_000_000;

#[derive(Parser)]
#[command(name = "kolmo", version, about = "Deep ReLU network approximations of Kolmogorov PDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a network approximating u(T, ·) for a catalog problem.
    Construct(ConstructArgs),
    /// Run a verification suite; exit 1 if any property fails.
    Verify(VerifyArgs),
    /// Run a rate sweep and write its CSV.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Calibrated,
    Paper,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long, default_value = "heat-max")]
    problem: String,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Calibrated)]
    mode: Mode,
    /// Monte Carlo count (skips calibration together with --delta).
    #[arg(long)]
    m: Option<u64>,
    /// Step parameter; the Euler step is delta².
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 8)]
    candidates: usize,
    /// Probes for candidate selection.
    #[arg(long, default_value_t = 1024)]
    probes: usize,
    /// Feynman–Kac samples for problems without a closed form.
    #[arg(long, default_value_t = 4096)]
    samples: usize,
    /// Growth constant of the closed-form constants (paper mode).
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Print the constants without building (required in paper mode).
    #[arg(long)]
    dry_run: bool,
    #[arg(long, default_value = "kolmo-out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Calculus,
    Markov,
    Perturbation,
    Moments,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: Suite,
    /// Catalog problem; all problems when omitted (perturbation, moments).
    #[arg(long)]
    problem: Option<String>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Random instances of the calculus suite.
    #[arg(long, default_value_t = 200)]
    instances: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepName {
    Mc,
    Euler,
    ParamsD,
    ParamsEps,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(value_enum)]
    kind: SweepName,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Fixed ε of the growth-in-d sweep.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    probes: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',')]
    axis: Option<Vec<f64>>,
    /// CSV path; defaults to sweep-<kind>.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::CalibrationFailed { .. } => 3,
        Error::NonFinite(_) | Error::NumericStep { .. } => 4,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("KOLMO_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not set thread count: {e}");
        }
    }
    let result = match cli.command {
        Command::Construct(a) => construct(&a),
        Command::Verify(a) => verify(&a),
        Command::Sweep(a) => sweep(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn construct(a: &ConstructArgs) -> Result<u8, Error> {
    let problem = catalog::problem(&a.problem, a.dim, a.horizon)?;
    if let Mode::Paper = a.mode {
        if !a.dry_run {
            return Err(Error::InvalidArgument(
                "paper-mode constants are far too large to build; use --dry-run".into(),
            ));
        }
        let mut params = minimal_kappa(&problem, a.eps, a.p)?;
        if let Some(k) = a.kappa {
            params.kappa = k;
            params.eta = (a.p * (2.0 * k + 1.0) / 2.0).max(1.0);
        }
        if let Some(eta) = a.eta {
            params.eta = eta;
        }
        check_paper_hypotheses(&problem, &params)?;
        return paper_dry_run(&params);
    }
    let budget = CalibrationBudget { reference: FkConfig::new(a.samples, a.seed), ..Default::default() };
    let (constants, trace) = match (a.m, a.delta) {
        (Some(m), Some(delta)) => (RateConstants::calibrated(m, delta), Vec::new()),
        (None, None) => {
            let cal = calibrate(&problem, a.eps, a.p, a.seed, &budget)?;
            (cal.constants, cal.trace)
        }
        _ => return Err(Error::InvalidArgument("--m and --delta must be given together".into())),
    };
    if a.dry_run {
        let params = constructor::predicted_param_count(&problem, constants.m, constants.delta)?;
        println!("{}", json!({ "constants": constants, "param_count": params, "trace": trace }));
        return Ok(0);
    }
    let reference = ReferenceSolution::for_problem(&problem, FkConfig::new(a.samples, a.seed));
    let sel = Selection { candidates: a.candidates, probes: a.probes, p: a.p };
    let report = select_realization(&problem, &reference, &constants, sel, a.seed)?;
    let fresh_seed = rng::derive_seed(a.seed, tag::PROBES, 99);
    let fresh = lp_error(&reference, &report.network, &problem.measure, a.p, 4 * a.probes, fresh_seed)?;
    let cert = param_certificate(report.param_count, 10.0, a.dim, a.eps, None);

    std::fs::create_dir_all(&a.out)?;
    let (file, format) = if report.param_count <= DENSE_LIMIT {
        ("network.json", "dense")
    } else {
        ("mc-network.json", "factored")
    };
    let text = if format == "dense" { report.network.materialize()?.to_json()? } else { report.network.to_json()? };
    std::fs::write(a.out.join(file), text)?;
    let record = json!({
        "version": 1,
        "problem": problem.name,
        "d": a.dim,
        "epsilon": a.eps,
        "p": a.p,
        "horizon": a.horizon,
        "seed": a.seed,
        "constants": constants,
        "calibration_trace": trace,
        "m": report.m,
        "delta": report.delta,
        "steps": report.steps,
        "depth": report.depth,
        "architecture": report.architecture,
        "param_count": report.param_count,
        "candidate_errors": report.candidate_errors,
        "selected": report.selected,
        "fresh_error": fresh,
        "param_certificate_c10": cert,
        "network_file": file,
        "network_format": format,
    });
    write_json(&a.out.join("report.json"), &record)?;
    println!("params {}", report.param_count);
    println!("depth {}", report.depth);
    println!("M {} delta {} steps {}", report.m, report.delta, report.steps);
    println!("L{} error {:.6} ± {:.6} (target {})", a.p, fresh.estimate, fresh.half_width, a.eps);
    println!("{}", a.out.join("report.json").display());
    Ok(0)
}

fn paper_dry_run(params: &PaperParams) -> Result<u8, Error> {
    let c = paper_constants(params)?;
    let record = json!({
        "params": params,
        "m": c.m,
        "log_m": c.log_m,
        "delta": c.delta,
        "log_delta": c.log_delta,
        "certified_exponent": params.certified_exponent(),
        "log_param_bound": params.log_param_bound(),
    });
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(0)
}

fn report_checks(suite: &str, checks: &[Check]) -> u8 {
    for c in checks {
        println!("{}", serde_json::to_string(c).expect("checks serialize"));
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{}", json!({ "suite": suite, "checks": checks.len(), "failed": failed, "passed": failed == 0 }));
    u8::from(failed > 0)
}

fn problems(a: &VerifyArgs) -> Result<Vec<kolmo_dnn::problem::KolmogorovProblem>, Error> {
    match &a.problem {
        Some(name) => Ok(vec![catalog::problem(name, a.dim, a.horizon)?]),
        None => catalog::PROBLEM_NAMES.iter().map(|n| catalog::problem(n, a.dim, a.horizon)).collect(),
    }
}

fn verify(a: &VerifyArgs) -> Result<u8, Error> {
    let (name, checks) = match a.suite {
        Suite::Calculus => ("calculus", bench::calculus_suite(a.instances, a.seed)?),
        Suite::Markov => ("markov", bench::markov_suite(a.samples, a.seed)?),
        Suite::Perturbation => {
            let mut all = Vec::new();
            for p in problems(a)? {
                all.extend(bench::perturbation_suite(&p, a.delta, a.p, a.samples, a.seed)?);
            }
            ("perturbation", all)
        }
        Suite::Moments => {
            let mut all = Vec::new();
            for p in problems(a)? {
                all.extend(bench::moment_suite(&p, a.delta, a.samples, a.seed)?);
            }
            ("moments", all)
        }
    };
    Ok(report_checks(name, &checks))
}

fn sweep(a: &SweepArgs) -> Result<u8, Error> {
    let (kind, label) = match a.kind {
        SweepName::Mc => (SweepKind::MonteCarlo, "mc"),
        SweepName::Euler => (SweepKind::EulerWeak, "euler"),
        SweepName::ParamsD => (SweepKind::ParamGrowthInD, "params-d"),
        SweepName::ParamsEps => (SweepKind::ParamGrowthInEps, "params-eps"),
    };
    let mut cfg = SweepConfig::new(kind);
    cfg.p = a.p;
    cfg.horizon = a.horizon;
    cfg.seed = a.seed;
    if let Some(v) = &a.problem {
        cfg.problem = v.clone();
    }
    if let Some(v) = a.dim {
        cfg.d = v;
    }
    if let Some(v) = a.eps {
        cfg.epsilon = v;
    }
    if let Some(v) = a.delta {
        cfg.delta = v;
    }
    if let Some(v) = a.samples {
        cfg.samples = v;
    }
    if let Some(v) = a.probes {
        cfg.probes = v;
    }
    if let Some(v) = a.replicates {
        cfg.replicates = v;
    }
    if let Some(v) = &a.axis {
        cfg.axis = v.clone();
    }
    let mut result = rate_sweep(&cfg)?;
    let path = a.out.clone().unwrap_or_else(|| PathBuf::from(format!("sweep-{label}.csv")));
    result.write_csv(&path)?;
    println!("{}", path.display());
    println!(
        "{}",
        json!({
            "sweep": label,
            "slope": result.fit.slope,
            "slope_ci": [result.fit.slope_ci.0, result.fit.slope_ci.1],
            "r_squared": result.fit.r_squared,
            "certified_exponent": result.certified_exponent,
        })
    );
    Ok(0)
}
