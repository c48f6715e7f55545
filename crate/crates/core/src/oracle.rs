//! Reference values of `u(T, x) = E[f0(X^x_T)]` (closed forms or Feynman–Kac
//! Monte Carlo) and `L^p(ν)` error measurement of approximants.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{invalid, Result};
use crate::measure::Measure;
use crate::network::NeuralNetwork;
use crate::problem::{norm, KolmogorovProblem};
use crate::rng::{self, tag};
use crate::sde::{self, EulerConfig, NoiseRealization};
use crate::stats::Estimate;

/// Width of reported confidence half-widths, in standard errors.
pub const Z_HALF_WIDTH: f64 = 3.0;

/// Default fine Euler grid for Feynman–Kac: `T / 2^10`.
pub const FK_STEPS: usize = 1 << 10;

/// Exact solutions of the catalog problems. Heat problems have `A = I` and no
/// drift; OU problems have `A = I/2` and drift `-x`, so that `𝒜 = I`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedForm {
    /// `f0 = Σ x_i`: `u = Σ x_i`.
    HeatLinear,
    /// `f0 = ||x||²`: `u = ||x||² + 2dT`.
    HeatQuadratic,
    /// `f0 = max_i x_i`: one-dimensional quadrature of the Gaussian maximum.
    HeatMax,
    /// `f0 = Σ x_i`: `u = e^{-T} Σ x_i`.
    OuLinear,
    /// `f0 = ||x||²`: `u = e^{-2T} ||x||² + d (1 - e^{-2T}) / 2`.
    OuQuadratic,
}

impl ClosedForm {
    pub fn value(self, x: &[f64], t: f64) -> f64 {
        let d = x.len() as f64;
        let sum: f64 = x.iter().sum();
        let sq: f64 = x.iter().map(|v| v * v).sum();
        match self {
            ClosedForm::HeatLinear => sum,
            ClosedForm::HeatQuadratic => sq + 2.0 * d * t,
            ClosedForm::HeatMax => expected_gaussian_max(x, (2.0 * t).sqrt()),
            ClosedForm::OuLinear => (-t).exp() * sum,
            ClosedForm::OuQuadratic => (-2.0 * t).exp() * sq + d * (1.0 - (-2.0 * t).exp()) / 2.0,
        }
    }
}

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `E[max_i (x_i + σ Z_i)]` for i.i.d. standard normal `Z_i`.
///
/// With `a = max x_i` and `F(t) = Π Φ((t - x_i)/σ)`,
/// `E max = a + ∫_a^∞ (1 - F) - ∫_{-∞}^a F`; both integrands are below
/// `Φ(-12)` outside `[a - 12σ, a + 12σ]`, and composite Simpson handles the rest.
pub fn expected_gaussian_max(x: &[f64], sigma: f64) -> f64 {
    let a = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if sigma == 0.0 || x.len() == 1 {
        return a;
    }
    let cdf = |t: f64| x.iter().map(|&xi| std_normal_cdf((t - xi) / sigma)).product::<f64>();
    let simpson = |lo: f64, hi: f64, f: &dyn Fn(f64) -> f64| {
        let n = 4000;
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(lo + k as f64 * h);
        }
        s * h / 3.0
    };
    let upper = simpson(a, a + 12.0 * sigma, &|t| 1.0 - cdf(t));
    let lower = simpson(a - 12.0 * sigma, a, &|t| cdf(t));
    a + upper - lower
}

/// Monte Carlo settings of the Feynman–Kac estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FkConfig {
    pub samples: usize,
    pub seed: u64,
    /// Euler steps on `[0, T]` when the drift is non-zero.
    pub steps: usize,
}

impl FkConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, seed, steps: FK_STEPS }
    }
}

/// `E[f0(X^x_T)]` by Monte Carlo. Zero-drift problems are sampled exactly in
/// one step, others with Euler on `cfg.steps` steps.
pub fn feynman_kac(problem: &KolmogorovProblem, x: &[f64], horizon: f64, cfg: &FkConfig) -> Result<Estimate> {
    if cfg.samples == 0 {
        return Err(invalid("Feynman-Kac needs at least one sample"));
    }
    if x.len() != problem.d {
        return Err(crate::error::Error::Shape(format!("point in R^{} for a problem on R^{}", x.len(), problem.d)));
    }
    let diff = sde::diffusion_factor(&problem.a)?;
    let steps = if problem.drift_is_zero { 1 } else { cfg.steps };
    let grid = EulerConfig::with_steps(horizon, steps)?;
    let vals: Vec<f64> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|m| {
            let noise = NoiseRealization::generate(cfg.seed, m, &grid, problem.d);
            let end = sde::euler_path(problem.drift.as_ref(), x, &diff, &grid, &noise, false)?;
            problem.f0.eval(&end.endpoint)
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::mean_of(&vals))
}

/// Source of reference values `u(T, x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReferenceKind {
    ClosedForm { form: ClosedForm },
    MonteCarlo { samples: usize, seed: u64, steps: usize },
}

/// `u(T, ·)` for one problem, with a confidence half-width per value.
#[derive(Clone, Debug)]
pub struct ReferenceSolution {
    problem: KolmogorovProblem,
    kind: ReferenceKind,
}

impl ReferenceSolution {
    /// Closed form when the problem has one, Feynman–Kac otherwise.
    pub fn for_problem(problem: &KolmogorovProblem, mc: FkConfig) -> Self {
        let kind = match problem.closed_form {
            Some(form) => ReferenceKind::ClosedForm { form },
            None => ReferenceKind::MonteCarlo { samples: mc.samples, seed: mc.seed, steps: mc.steps },
        };
        Self { problem: problem.clone(), kind }
    }

    pub fn monte_carlo(problem: &KolmogorovProblem, mc: FkConfig) -> Self {
        Self {
            problem: problem.clone(),
            kind: ReferenceKind::MonteCarlo { samples: mc.samples, seed: mc.seed, steps: mc.steps },
        }
    }

    pub fn kind(&self) -> &ReferenceKind {
        &self.kind
    }

    pub fn problem(&self) -> &KolmogorovProblem {
        &self.problem
    }

    /// `(u(T, x), half-width)`. Monte Carlo values use a stream derived from the
    /// bits of `x`, so repeated queries at one point agree.
    pub fn value(&self, x: &[f64]) -> Result<(f64, f64)> {
        let t = self.problem.horizon;
        match self.kind {
            ReferenceKind::ClosedForm { form } => Ok((form.value(x, t), 0.0)),
            ReferenceKind::MonteCarlo { samples, seed, steps } => {
                let key = x.iter().fold(0u64, |h, v| rng::mix64(h ^ v.to_bits()));
                let cfg = FkConfig { samples, seed: rng::derive_seed(seed, tag::REFERENCE, key), steps };
                let e = feynman_kac(&self.problem, x, t, &cfg)?;
                Ok((e.value, Z_HALF_WIDTH * e.stderr))
            }
        }
    }
}

/// Anything that can be evaluated pointwise and has a parameter count.
pub trait ScalarApproximant: Sync {
    fn eval(&self, x: &[f64]) -> Result<f64>;
    fn param_count(&self) -> u64;
}

impl ScalarApproximant for NeuralNetwork {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.realize_scalar(x)
    }

    fn param_count(&self) -> u64 {
        NeuralNetwork::param_count(self)
    }
}

/// `L^p(ν)` error estimate of an approximant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub estimate: f64,
    /// `3 ×` the standard error of `estimate` over the probes.
    pub half_width: f64,
    /// Largest reference half-width seen (zero for closed forms).
    pub reference_half_width: f64,
    pub probes: usize,
    pub p: f64,
    pub param_count: u64,
}

/// Deterministic probe points `x_j ~ ν`.
pub fn probe_points(measure: &Measure, probes: usize, seed: u64) -> Vec<Vec<f64>> {
    let base = rng::derive_seed(seed, tag::PROBES, 0);
    (0..probes as u64).map(|j| measure.sample(&mut rng::stream(base, j))).collect()
}

/// Monte Carlo estimate of `(∫ |u(T,x) - approx(x)|^p ν(dx))^{1/p}` over
/// `probes` draws from `ν`. A point mass is evaluated once.
pub fn lp_error(
    reference: &ReferenceSolution,
    approx: &dyn ScalarApproximant,
    measure: &Measure,
    p: f64,
    probes: usize,
    seed: u64,
) -> Result<ErrorReport> {
    if !(p > 0.0) {
        return Err(invalid(format!("p = {p} must be positive")));
    }
    if probes == 0 {
        return Err(invalid("need at least one probe"));
    }
    let n = if measure.is_point_mass() { 1 } else { probes };
    let points = probe_points(measure, n, seed);
    let terms: Vec<(f64, f64)> = points
        .par_iter()
        .map(|x| {
            let (u, hw) = reference.value(x)?;
            Ok(((u - approx.eval(x)?).abs().powf(p), hw))
        })
        .collect::<Result<_>>()?;
    let reference_half_width = terms.iter().map(|t| t.1).fold(0.0, f64::max);
    let (estimate, half_width) = if n == 1 {
        (terms[0].0.powf(1.0 / p), 0.0)
    } else {
        let vals: Vec<f64> = terms.iter().map(|t| t.0).collect();
        let e = Estimate::mean_of(&vals).root(p);
        (e.value, Z_HALF_WIDTH * e.stderr)
    };
    Ok(ErrorReport {
        estimate,
        half_width,
        reference_half_width,
        probes: n,
        p,
        param_count: approx.param_count(),
    })
}

/// Monte Carlo estimate of `∫ ||z||^q ν(dz)`.
pub fn moment_of_measure(measure: &Measure, q: f64, probes: usize, seed: u64) -> Result<Estimate> {
    if !(q >= 0.0) {
        return Err(invalid("moment exponent must be >= 0"));
    }
    let vals: Vec<f64> = probe_points(measure, probes, seed)
        .iter()
        .map(|z| if q == 0.0 { 1.0 } else { norm(z).powf(q) })
        .collect();
    Ok(Estimate::mean_of(&vals))
}
