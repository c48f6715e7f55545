//! Convergence-rate and parameter-growth sweeps with log-log slope fits and
//! CSV output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::relu_identity;
use crate::catalog;
use crate::constructor::{calibrate, minimal_kappa, predicted_param_count, sample_depth, CalibrationBudget, McNetwork};
use crate::error::{invalid, Result};
use crate::oracle::{probe_points, FkConfig, ReferenceSolution, ScalarApproximant};
use crate::rng::{self, tag};
use crate::sde::{self, coupled_samples, EulerConfig};
use crate::stats::{loglog_fit, Estimate, LinearFit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// `L²(ν)` error of the Monte Carlo network against `M`.
    MonteCarlo,
    /// Weak Euler error `|E f0(X_T) - E f0(Y_T)|` against the step `h`.
    EulerWeak,
    /// Parameter count of the calibrated network against `d`.
    ParamGrowthInD,
    /// Parameter count of the calibrated network against `1/ε`.
    ParamGrowthInEps,
}

impl SweepKind {
    pub fn axis_name(self) -> &'static str {
        match self {
            Self::MonteCarlo => "m",
            Self::EulerWeak => "h",
            Self::ParamGrowthInD => "d",
            Self::ParamGrowthInEps => "eps",
        }
    }
}

/// Inputs of [`rate_sweep`]. Fields not used by a kind are ignored.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub problem: String,
    pub d: usize,
    pub horizon: f64,
    pub axis: Vec<f64>,
    /// Fixed `ε` of the parameter-growth sweep in `d`.
    pub epsilon: f64,
    /// Fixed `δ` of the Monte Carlo sweep.
    pub delta: f64,
    pub p: f64,
    /// Paths per point (weak sweep) or reference samples (Monte Carlo references).
    pub samples: usize,
    pub probes: usize,
    /// Independent networks per `M` in the Monte Carlo sweep.
    pub replicates: usize,
    pub seed: u64,
    pub budget: CalibrationBudget,
}

impl SweepConfig {
    pub fn new(kind: SweepKind) -> Self {
        let (problem, d, axis) = match kind {
            SweepKind::MonteCarlo => ("heat-max", 2, vec![4.0, 16.0, 64.0, 256.0]),
            SweepKind::EulerWeak => ("ou-linear", 1, vec![0.1, 0.05, 0.025, 0.0125]),
            SweepKind::ParamGrowthInD => ("heat-linear", 1, vec![1.0, 2.0, 4.0, 8.0, 16.0]),
            SweepKind::ParamGrowthInEps => ("heat-linear", 2, vec![0.4, 0.2, 0.1, 0.05]),
        };
        Self {
            kind,
            problem: problem.into(),
            d,
            horizon: 1.0,
            axis,
            epsilon: 0.2,
            delta: 1.0,
            p: 2.0,
            samples: 10_000,
            probes: 512,
            replicates: 16,
            seed: 0,
            budget: CalibrationBudget::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub extra_header: Vec<String>,
    pub extras: Vec<Vec<f64>>,
    /// Fit of `log value` against `log axis` (against `log(1/ε)` for the
    /// ε-sweep).
    pub fit: LinearFit,
    /// Exponent of `d` certified by the explicit parameter bound (growth in `d` only).
    pub certified_exponent: Option<f64>,
    pub csv_path: Option<PathBuf>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},value,stderr", self.kind.axis_name());
        for h in &self.extra_header {
            s.push(',');
            s.push_str(h);
        }
        s.push('\n');
        for i in 0..self.axis.len() {
            let _ = write!(s, "{},{},{}", self.axis[i], self.values[i], self.stderrs[i]);
            for v in &self.extras[i] {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&mut self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        self.csv_path = Some(path.to_path_buf());
        Ok(())
    }
}

fn check_axis(axis: &[f64]) -> Result<()> {
    if axis.len() < 3 {
        return Err(invalid("a sweep needs at least 3 axis points"));
    }
    let inc = axis.windows(2).all(|w| w[1] > w[0]);
    let dec = axis.windows(2).all(|w| w[1] < w[0]);
    if !(inc || dec) || axis.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(invalid("sweep axis must be positive and strictly monotone"));
    }
    Ok(())
}

pub fn rate_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    check_axis(&cfg.axis)?;
    match cfg.kind {
        SweepKind::MonteCarlo => monte_carlo_sweep(cfg),
        SweepKind::EulerWeak => euler_weak_sweep(cfg),
        SweepKind::ParamGrowthInD | SweepKind::ParamGrowthInEps => param_sweep(cfg),
    }
}

/// Root-mean-square over replicates of the `L²(ν)` error of independent
/// Monte Carlo networks, on common probes with cached reference values.
fn monte_carlo_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let problem = catalog::problem(&cfg.problem, cfg.d, cfg.horizon)?;
    let reference = ReferenceSolution::for_problem(&problem, FkConfig::new(cfg.samples, cfg.seed));
    let points = probe_points(&problem.measure, cfg.probes, rng::derive_seed(cfg.seed, tag::SWEEP, 0));
    let truth: Vec<f64> = points.par_iter().map(|x| Ok(reference.value(x)?.0)).collect::<Result<_>>()?;
    let euler = EulerConfig::new(cfg.delta, cfg.horizon)?;
    let id = relu_identity(cfg.d);
    let (mut values, mut stderrs, mut extras) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &m) in cfg.axis.iter().enumerate() {
        if m.fract() != 0.0 {
            return Err(invalid("Monte Carlo axis values must be integers"));
        }
        let sq: Vec<f64> = (0..cfg.replicates as u64)
            .map(|r| {
                let seed = rng::derive_seed(cfg.seed, tag::SWEEP, 1 + (i as u64) * 1_000_003 + r);
                let net = crate::constructor::build_mc_network(&problem, &euler, m as usize, seed, &id)?;
                mean_sq_error(&net, &points, &truth)
            })
            .collect::<Result<_>>()?;
        let e = Estimate::mean_of(&sq).root(2.0);
        values.push(e.value);
        stderrs.push(e.stderr);
        extras.push(vec![cfg.replicates as f64]);
    }
    let fit = loglog_fit(&cfg.axis, &values)?;
    Ok(SweepResult {
        kind: cfg.kind,
        axis: cfg.axis.clone(),
        values,
        stderrs,
        extra_header: vec!["replicates".into()],
        extras,
        fit,
        certified_exponent: None,
        csv_path: None,
    })
}

fn mean_sq_error(net: &McNetwork, points: &[Vec<f64>], truth: &[f64]) -> Result<f64> {
    let errs: Vec<f64> =
        points.par_iter().zip(truth).map(|(x, u)| Ok((net.eval(x)? - u).powi(2))).collect::<Result<_>>()?;
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

/// `|E[f0(X_T) - f0(Y_T)]|` at `x0 = (1, …, 1)` with `X` the fine-grid coupling
/// of the Euler scheme `Y` of step `h`.
fn euler_weak_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let problem = catalog::problem(&cfg.problem, cfg.d, cfg.horizon)?;
    let b = sde::diffusion_factor(&problem.a)?;
    let x0 = vec![1.0; cfg.d];
    let (mut values, mut stderrs, mut extras) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &h) in cfg.axis.iter().enumerate() {
        let steps = (cfg.horizon / h).round().max(1.0) as usize;
        let euler = EulerConfig::with_steps(cfg.horizon, steps)?;
        let seed = rng::derive_seed(cfg.seed, tag::SWEEP, 2 + i as u64);
        let drift = problem.drift.as_ref();
        let draws = coupled_samples(drift, drift, &x0, &x0, &b, &euler, cfg.p, cfg.samples, seed)?;
        let diffs: Vec<f64> = draws
            .iter()
            .map(|s| Ok(problem.f0.eval(&s.x_end)? - problem.f0.eval(&s.y_end)?))
            .collect::<Result<_>>()?;
        let e = Estimate::mean_of(&diffs);
        values.push(e.value.abs());
        stderrs.push(e.stderr);
        extras.push(vec![steps as f64]);
    }
    let fit = loglog_fit(&cfg.axis, &values)?;
    Ok(SweepResult {
        kind: cfg.kind,
        axis: cfg.axis.clone(),
        values,
        stderrs,
        extra_header: vec!["steps".into()],
        extras,
        fit,
        certified_exponent: None,
        csv_path: None,
    })
}

/// Calibrate at every axis point and record the parameter count of the
/// resulting Monte Carlo network.
fn param_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let in_d = cfg.kind == SweepKind::ParamGrowthInD;
    let mut rows = Vec::new();
    let mut kappa: f64 = 0.0;
    for &a in &cfg.axis {
        let (d, eps) = if in_d {
            if a.fract() != 0.0 || a < 1.0 {
                return Err(invalid("dimension axis values must be positive integers"));
            }
            (a as usize, cfg.epsilon)
        } else {
            (cfg.d, a)
        };
        let problem = catalog::problem(&cfg.problem, d, cfg.horizon)?;
        let cal = calibrate(&problem, eps, cfg.p, cfg.seed, &cfg.budget)?;
        let (m, delta) = (cal.constants.m, cal.constants.delta);
        let params = predicted_param_count(&problem, m, delta)?;
        let steps = EulerConfig::new(delta, cfg.horizon)?.steps;
        let depth = sample_depth(&problem, steps)?;
        if in_d {
            kappa = kappa.max(minimal_kappa(&problem, eps, cfg.p)?.kappa);
        }
        rows.push((params as f64, vec![m as f64, delta, depth as f64]));
    }
    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let x: Vec<f64> = if in_d { cfg.axis.clone() } else { cfg.axis.iter().map(|e| 1.0 / e).collect() };
    let fit = loglog_fit(&x, &values)?;
    let certified_exponent = in_d.then(|| {
        let eta = (cfg.p * (2.0 * kappa + 1.0) / 2.0).max(1.0);
        crate::constructor::PaperParams {
            d: 1,
            epsilon: cfg.epsilon,
            kappa,
            eta,
            p: cfg.p,
            horizon: cfg.horizon,
            drift_zero_norm: 0.0,
        }
        .certified_exponent()
    });
    Ok(SweepResult {
        kind: cfg.kind,
        axis: cfg.axis.clone(),
        stderrs: vec![0.0; values.len()],
        values,
        extra_header: vec!["m".into(), "delta".into(), "depth".into()],
        extras: rows.into_iter().map(|r| r.1).collect(),
        fit,
        certified_exponent,
        csv_path: None,
    })
}
