//! Assembly of the approximating network: one Euler network per Brownian
//! sample, their Monte Carlo average, selection among independent averages,
//! and the Monte Carlo count / step size constants.

use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{compose, relu_identity, residual_step, weighted_sum, weighted_sum_architecture};
use crate::error::{invalid, Error, Result};
use crate::network::{Activation, Architecture, NeuralNetwork};
use crate::oracle::{lp_error, probe_points, ErrorReport, FkConfig, ReferenceSolution, ScalarApproximant};
use crate::problem::{dist, norm, KolmogorovProblem, VectorField};
use crate::rng::{self, tag};
use crate::sde::{self, EulerConfig, NoiseRealization};
use crate::stats::mean_var;

/// Inputs of the closed-form constants.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PaperParams {
    pub d: usize,
    pub epsilon: f64,
    pub kappa: f64,
    pub eta: f64,
    pub p: f64,
    pub horizon: f64,
    /// `||f1(0)||`.
    pub drift_zero_norm: f64,
}

/// `ln Σ exp(v_i)`.
fn lse(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl PaperParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.d >= 1
            && self.epsilon > 0.0
            && self.epsilon <= 1.0
            && self.kappa > 0.0
            && self.kappa.is_finite()
            && self.eta >= 1.0
            && self.eta.is_finite()
            && self.p >= 2.0
            && self.p.is_finite()
            && self.horizon > 0.0
            && self.horizon.is_finite()
            && self.drift_zero_norm >= 0.0
            && self.drift_zero_norm.is_finite();
        if ok {
            Ok(())
        } else {
            Err(invalid(format!(
                "constants need d >= 1, eps in (0,1], kappa > 0, eta >= 1, p >= 2, T > 0; got {self:?}"
            )))
        }
    }

    /// `ι = max(κ, 1)`.
    pub fn iota(&self) -> f64 {
        self.kappa.max(1.0)
    }

    fn ln_d(&self) -> f64 {
        (self.d as f64).ln()
    }

    /// `ln` of the real number whose ceiling is the Monte Carlo count.
    pub fn log_m_real(&self) -> f64 {
        let (k, p, t, eta) = (self.kappa, self.p, self.horizon, self.eta);
        let iota = self.iota();
        let ln_kdk = k.ln() + k * self.ln_d();
        let ln_a = lse(&[ln_kdk + t.ln(), 0.5 * (2f64.ln() + (p * iota - 1.0).ln() + ln_kdk + t.ln())]);
        let bracket = lse(&[0.0, p * k * ln_a, eta.ln() + eta * self.ln_d()]);
        2.0 * ((k + 4.0) * 2f64.ln() + p.ln() + ln_kdk + k * k * t - self.epsilon.ln()) + 2.0 / p * bracket
    }

    /// `ln` of the step size parameter before clamping to `(0, 1]`.
    pub fn log_delta_real(&self) -> f64 {
        let (k, p, t, eta) = (self.kappa, self.p, self.horizon, self.eta);
        let iota = self.iota();
        let ln_kdk = k.ln() + k * self.ln_d();
        let first = lse(&[(2f64.ln() + ln_kdk).max(0.0), -0.5 * t.ln()]);
        let second = 3.0 + 3.0 * k + (k * k + 2.0 * k * iota + 2.0) * t;
        let third = (2f64.ln() + k.ln() + (k + 1.0).ln() + k * self.ln_d()).max(0.0);
        let fourth = (2.0 * iota + 1.0) * 2f64.ln();
        let ln_max = ln_kdk.max(0.0).max(self.drift_zero_norm.ln());
        let ln_b = lse(&[
            2f64.ln(),
            ln_max + t.max(1.0).ln(),
            0.5 * (2f64.ln() + (2.0 * iota - 1.0).ln() + ln_kdk + t.ln()),
        ]);
        let last = lse(&[(p * iota + p * k) * ln_b, eta.ln() + eta * self.ln_d()]) / p;
        self.epsilon.ln() - first - second - third - fourth - last
    }

    /// Exponent of `d` in the explicit parameter bound.
    pub fn certified_exponent(&self) -> f64 {
        let (k, p, eta) = (self.kappa, self.p, self.eta);
        let iota = self.iota();
        2.0 * (p * k * iota + eta + 4.0 * k) + (k * (2.0 + k + iota) + eta) * (3.0 * k + 2.0)
    }

    /// `ln` of the explicit bound `C d^E ε^{-3κ-6}` on the parameter count of
    /// the Monte Carlo network built with these constants.
    pub fn log_param_bound(&self) -> f64 {
        let (k, p, t, eta) = (self.kappa, self.p, self.horizon, self.eta);
        let iota = self.iota();
        let ln2 = 2f64.ln();
        let m_part = 2.0 * (k + 4.0) * ln2
            + 2.0 * p.ln()
            + 2.0 * iota.ln()
            + 2.0 * k * k * t
            + lse(&[ln2, p * k * (2.0 * p * iota * t.max(1.0)).ln(), eta.ln()]);
        let delta_part = t.sqrt().min(1.0).ln() - (3.0 * iota * iota + 3.0) * (t + 1.0) - 3.0 * iota.ln()
            - (2.0 * iota + 5.0) * ln2
            - lse(&[(p * iota + p * k) * (6.0 * iota * t.max(1.0)).ln(), eta.ln()]) / p;
        ln2 + 2.0 * m_part + 2.0 * iota.ln() + 2.0 * k.ln() + (t + 2.0).ln()
            + (-3.0 * k - 2.0) * delta_part
            + self.certified_exponent() * self.ln_d()
            - (3.0 * k + 6.0) * self.epsilon.ln()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConstantsMode {
    PaperFormula { params: PaperParams },
    Calibrated,
}

/// Monte Carlo count `M` and step parameter `δ` (Euler step `δ²`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateConstants {
    /// Saturates at `u64::MAX`; `log_m` is exact.
    pub m: u64,
    /// Clamped to `(0, 1]`; `log_delta` is exact.
    pub delta: f64,
    pub log_m: f64,
    pub log_delta: f64,
    pub mode: ConstantsMode,
}

impl RateConstants {
    pub fn calibrated(m: u64, delta: f64) -> Self {
        Self { m, delta, log_m: (m as f64).ln(), log_delta: delta.ln(), mode: ConstantsMode::Calibrated }
    }
}

/// Evaluate the closed-form Monte Carlo count and step parameter in log space.
pub fn paper_constants(params: &PaperParams) -> Result<RateConstants> {
    params.validate()?;
    let log_real = params.log_m_real();
    let (m, log_m) = if log_real < 43.0 {
        let m = log_real.exp().ceil().max(1.0);
        (m as u64, m.ln())
    } else {
        (u64::MAX, log_real)
    };
    let log_delta = params.log_delta_real().min(0.0);
    let delta = log_delta.exp().clamp(f64::MIN_POSITIVE, 1.0);
    Ok(RateConstants { m, delta, log_m, log_delta, mode: ConstantsMode::PaperFormula { params: params.clone() } })
}

/// Spot-check the hypotheses under which the closed-form constants apply:
/// growth of `f0` and `A`, Lipschitz drift, linear growth of the drift network,
/// surrogate accuracy, parameter budget and the moment of `ν`.
pub fn check_paper_hypotheses(problem: &KolmogorovProblem, params: &PaperParams) -> Result<()> {
    params.validate()?;
    if params.d != problem.d {
        return Err(invalid("constants and problem disagree on d"));
    }
    let (drift_net, f0_net) = surrogates(problem)?;
    let (k, d, eps) = (params.kappa, problem.d as f64, params.epsilon);
    let kdk = k * d.powf(k);
    let fail = |what: &str| Err(invalid(format!("hypothesis fails for kappa = {k}: {what}")));

    let budget = relu_identity(problem.d).param_count() + drift_net.param_count() + f0_net.param_count();
    if budget as f64 > kdk * eps.powf(-k) {
        return fail("parameter budget of the surrogates");
    }
    if problem.drift_lipschitz > k {
        return fail("Lipschitz constant of the drift");
    }
    let moment_exp = params.p * (2.0 * k + 1.0);
    let moment = match &problem.measure {
        crate::measure::Measure::UniformCube { d } => (*d as f64).powf(moment_exp / 2.0),
        m => crate::oracle::moment_of_measure(m, moment_exp, 4096, 1)?.upper(3.0),
    };
    if moment > params.eta * d.powf(params.eta) {
        return fail("moment of the measure");
    }
    let sum_a: f64 = problem.a.as_slice().iter().map(|v| v.abs()).sum();
    let mut rng = rng::stream(0x9a9e, 0);
    let (mut f1, mut g1) = (vec![0.0; problem.d], vec![0.0; problem.d]);
    for _ in 0..256 {
        let mut x = vec![0.0; problem.d];
        let mut y = vec![0.0; problem.d];
        rng::fill_normal(&mut rng, &mut x, 2.0);
        rng::fill_normal(&mut rng, &mut y, 2.0);
        let (nx, ny) = (norm(&x), norm(&y));
        let w = kdk * (1.0 + nx.powf(k));
        if problem.f0.eval(&x)?.abs() + sum_a > w {
            return fail("growth of f0 and A");
        }
        let phi0x = f0_net.realize_scalar(&x)?;
        if (problem.f0.eval(&x)? - phi0x).abs() > eps * w {
            return fail("accuracy of the initial value network");
        }
        problem.drift.eval(&x, &mut f1)?;
        VectorField::eval(drift_net, &x, &mut g1)?;
        if dist(&f1, &g1) > eps * w {
            return fail("accuracy of the drift network");
        }
        if norm(&g1) > k * (d.powf(k) + nx) {
            return fail("growth of the drift network");
        }
        let lip = kdk * (1.0 + nx.powf(k) + ny.powf(k)) * dist(&x, &y);
        if (phi0x - f0_net.realize_scalar(&y)?).abs() > lip {
            return fail("local Lipschitz bound of the initial value network");
        }
    }
    Ok(())
}

/// Smallest integer `κ` in `1..=64` for which [`check_paper_hypotheses`]
/// passes, with `η = max(1, p (2κ + 1) / 2)` (the uniform cube bound).
pub fn minimal_kappa(problem: &KolmogorovProblem, epsilon: f64, p: f64) -> Result<PaperParams> {
    let mut drift0 = vec![0.0; problem.d];
    problem.drift.eval(&vec![0.0; problem.d], &mut drift0)?;
    for k in 1..=64 {
        let kappa = k as f64;
        let params = PaperParams {
            d: problem.d,
            epsilon,
            kappa,
            eta: (p * (2.0 * kappa + 1.0) / 2.0).max(1.0),
            p,
            horizon: problem.horizon,
            drift_zero_norm: norm(&drift0),
        };
        if check_paper_hypotheses(problem, &params).is_ok() {
            return Ok(params);
        }
    }
    Err(invalid(format!("no kappa <= 64 satisfies the hypotheses for {}", problem.name)))
}

fn surrogates(problem: &KolmogorovProblem) -> Result<(&NeuralNetwork, &NeuralNetwork)> {
    let drift_net = problem
        .drift_net
        .as_ref()
        .ok_or_else(|| invalid(format!("{} has no drift network", problem.name)))?;
    let f0_net = problem
        .f0_net
        .as_ref()
        .ok_or_else(|| invalid(format!("{} has no initial value network", problem.name)))?;
    if drift_net.activation() != Activation::Relu || f0_net.activation() != Activation::Relu {
        return Err(invalid("the construction needs ReLU surrogates"));
    }
    if f0_net.output_dim() != 1 || drift_net.output_dim() != problem.d {
        return Err(Error::Shape("surrogate output dimensions do not fit the problem".into()));
    }
    Ok((drift_net, f0_net))
}

/// Network realizing `x -> f0_net(Y^x_T)` for the Euler scheme of the drift
/// network driven by `noise`.
///
/// Starting from `id_net`, each step applies [`residual_step`] with the drift
/// network rescaled to `h · drift + 𝒜 ΔW_k`; the initial value network is
/// attached with [`compose`]. The noise only enters biases.
pub fn build_sample_network(
    problem: &KolmogorovProblem,
    cfg: &EulerConfig,
    noise: &NoiseRealization,
    id_net: &NeuralNetwork,
) -> Result<NeuralNetwork> {
    let (drift_net, f0_net) = surrogates(problem)?;
    if id_net.activation() != Activation::Relu {
        return Err(invalid("the construction needs a ReLU identity network"));
    }
    if noise.steps != cfg.steps || noise.d != problem.d {
        return Err(invalid("noise does not match the Euler grid"));
    }
    let diff = sde::diffusion_factor(&problem.a)?;
    let shifts = noise.diffused(&diff);
    let d = problem.d;
    let mut accum = id_net.clone();
    for k in 0..cfg.steps {
        let increment = drift_net.scale_shift_output(cfg.h, &shifts[k * d..(k + 1) * d])?;
        accum = residual_step(&accum, &increment, id_net)?;
    }
    compose(f0_net, &accum, id_net)
}

/// Depth of every sample network: `depth(f0) + steps (depth(drift) - 1) + 2`.
pub fn sample_depth(problem: &KolmogorovProblem, steps: usize) -> Result<usize> {
    let (drift_net, f0_net) = surrogates(problem)?;
    Ok(f0_net.depth() + steps * (drift_net.depth() - 1) + 2)
}

/// The average `(1/M) Σ_m R(φ_m)` of `M` sample networks, stored factored:
/// the sample networks share every weight and differ only in the biases of a
/// few layers, so one template plus those biases determines all of them.
/// [`McNetwork::materialize`] produces the explicit weighted-sum network.
#[derive(Clone, Debug, PartialEq)]
pub struct McNetwork {
    template: NeuralNetwork,
    varying: Vec<usize>,
    biases: Vec<Vec<Vec<f64>>>,
}

pub const MC_FORMAT_VERSION: u32 = 1;

impl McNetwork {
    /// Factor explicit sample networks; they must agree in everything except
    /// biases.
    pub fn from_samples(nets: &[NeuralNetwork]) -> Result<Self> {
        let template = nets.first().ok_or_else(|| invalid("no sample networks"))?.clone();
        let depth = template.depth();
        let varying: Vec<usize> = (0..depth)
            .filter(|&n| nets.iter().any(|net| net.layers().get(n).map(|l| l.bias()) != Some(template.layers()[n].bias())))
            .collect();
        let biases = nets
            .iter()
            .map(|net| Self::extract(&template, &varying, net))
            .collect::<Result<_>>()?;
        Ok(Self { template, varying, biases })
    }

    fn extract(template: &NeuralNetwork, varying: &[usize], net: &NeuralNetwork) -> Result<Vec<Vec<f64>>> {
        if net.architecture() != template.architecture() || net.activation() != template.activation() {
            return Err(Error::Architecture(format!(
                "sample network {} differs from the template {}",
                net.architecture(),
                template.architecture()
            )));
        }
        let mut out = Vec::with_capacity(varying.len());
        for (n, (a, b)) in net.layers().iter().zip(template.layers()).enumerate() {
            if a.weights() != b.weights() {
                return Err(Error::Architecture(format!("sample networks differ in the weights of layer {n}")));
            }
            if varying.contains(&n) {
                out.push(a.bias().to_vec());
            } else if a.bias() != b.bias() {
                return Err(Error::Architecture(format!("unexpected bias difference in layer {n}")));
            }
        }
        Ok(out)
    }

    pub fn samples(&self) -> usize {
        self.biases.len()
    }

    pub fn template(&self) -> &NeuralNetwork {
        &self.template
    }

    /// Indices of the layers whose biases carry the noise.
    pub fn varying_layers(&self) -> &[usize] {
        &self.varying
    }

    pub fn sample_architecture(&self) -> Architecture {
        self.template.architecture()
    }

    /// Architecture of the materialized weighted sum.
    pub fn architecture(&self) -> Architecture {
        weighted_sum_architecture(&self.template.architecture(), self.samples())
    }

    pub fn depth(&self) -> usize {
        self.template.depth()
    }

    pub fn param_count(&self) -> u64 {
        self.architecture().param_count()
    }

    /// Explicit sample network `m`.
    pub fn sample_network(&self, m: usize) -> Result<NeuralNetwork> {
        let overrides: Vec<(usize, Vec<f64>)> =
            self.varying.iter().copied().zip(self.biases[m].iter().cloned()).collect();
        self.template.with_biases(&overrides)
    }

    /// Realization of sample network `m` at `x`.
    pub fn eval_sample(&self, m: usize, x: &[f64]) -> Result<f64> {
        let (mut cur, mut next) = (Vec::new(), Vec::new());
        self.eval_sample_with(m, x, &mut cur, &mut next)
    }

    fn eval_sample_with(&self, m: usize, x: &[f64], cur: &mut Vec<f64>, next: &mut Vec<f64>) -> Result<f64> {
        let overrides: Vec<(usize, &[f64])> =
            self.varying.iter().copied().zip(self.biases[m].iter().map(Vec::as_slice)).collect();
        self.template.realize_overriding_biases(x, &overrides, cur, next)?;
        Ok(cur[0])
    }

    /// The explicit network `weighted_sum(samples, 1/M)`.
    pub fn materialize(&self) -> Result<NeuralNetwork> {
        let nets = (0..self.samples()).map(|m| self.sample_network(m)).collect::<Result<Vec<_>>>()?;
        let w = vec![1.0 / self.samples() as f64; nets.len()];
        weighted_sum(&nets, &w)
    }

    pub fn to_json(&self) -> Result<String> {
        let v = serde_json::json!({
            "version": MC_FORMAT_VERSION,
            "kind": "monte-carlo-average",
            "samples": self.samples(),
            "template": self.template.to_wire_value(),
            "varying_layers": self.varying,
            "biases": self.biases,
        });
        Ok(serde_json::to_string(&v)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct Wire {
            version: u32,
            template: serde_json::Value,
            varying_layers: Vec<usize>,
            biases: Vec<Vec<Vec<f64>>>,
        }
        let w: Wire = serde_json::from_str(text)?;
        if w.version != MC_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", w.version)));
        }
        let template = NeuralNetwork::from_wire_value(w.template)?;
        let mc = Self { template, varying: w.varying_layers, biases: w.biases };
        if mc.biases.is_empty() {
            return Err(Error::Format("no samples".into()));
        }
        for m in 0..mc.samples() {
            if mc.biases[m].len() != mc.varying.len() {
                return Err(Error::Format(format!("sample {m} has the wrong number of bias vectors")));
            }
            mc.sample_network(m)?;
        }
        Ok(mc)
    }
}

impl ScalarApproximant for McNetwork {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        let (mut cur, mut next) = (Vec::new(), Vec::new());
        let mut total = 0.0;
        for m in 0..self.samples() {
            total += self.eval_sample_with(m, x, &mut cur, &mut next)?;
        }
        Ok(total / self.samples() as f64)
    }

    fn param_count(&self) -> u64 {
        McNetwork::param_count(self)
    }
}

/// Average of `m` sample networks on paths `0..m` of the family keyed by `seed`.
pub fn build_mc_network(
    problem: &KolmogorovProblem,
    cfg: &EulerConfig,
    m: usize,
    seed: u64,
    id_net: &NeuralNetwork,
) -> Result<McNetwork> {
    if m == 0 {
        return Err(invalid("need at least one Monte Carlo sample"));
    }
    let d = problem.d;
    let noise0 = NoiseRealization::generate(seed, 0, cfg, d);
    let template = build_sample_network(problem, cfg, &noise0, id_net)?;
    // Layers whose bias moves when the noise is flipped are the noise-carrying ones.
    let mirror = build_sample_network(problem, cfg, &noise0.mirrored(), id_net)?;
    let varying: Vec<usize> = (0..template.depth())
        .filter(|&n| template.layers()[n].bias() != mirror.layers()[n].bias())
        .collect();
    McNetwork::extract(&template, &varying, &mirror)?;
    let biases = (0..m as u64)
        .into_par_iter()
        .map(|k| {
            let noise = NoiseRealization::generate(seed, k, cfg, d);
            let net = build_sample_network(problem, cfg, &noise, id_net)?;
            McNetwork::extract(&template, &varying, &net)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(McNetwork { template, varying, biases })
}

/// Outcome of building `K` candidate averages and keeping the best.
#[derive(Clone, Debug)]
pub struct ConstructionReport {
    pub network: McNetwork,
    pub param_count: u64,
    pub depth: usize,
    pub architecture: Architecture,
    pub m: u64,
    pub delta: f64,
    pub steps: usize,
    pub seed: u64,
    /// Error of every candidate on the selection probes.
    pub candidate_errors: Vec<ErrorReport>,
    pub selected: usize,
}

impl ConstructionReport {
    pub fn selected_error(&self) -> &ErrorReport {
        &self.candidate_errors[self.selected]
    }
}

/// Settings of [`select_realization`].
#[derive(Clone, Copy, Debug)]
pub struct Selection {
    pub candidates: usize,
    pub probes: usize,
    pub p: f64,
}

/// Build `K` independent Monte Carlo networks (seeds derived from `seed`),
/// estimate each `L^p(ν)` error on common probes and keep the smallest; ties
/// go to the lowest index.
pub fn select_realization(
    problem: &KolmogorovProblem,
    reference: &ReferenceSolution,
    constants: &RateConstants,
    selection: Selection,
    seed: u64,
) -> Result<ConstructionReport> {
    if selection.candidates == 0 {
        return Err(invalid("need at least one candidate"));
    }
    let m = usize::try_from(constants.m)
        .ok()
        .filter(|&m| m <= 1 << 24)
        .ok_or_else(|| invalid(format!("M = {} is too large to build", constants.m)))?;
    let cfg = EulerConfig::new(constants.delta, problem.horizon)?;
    let id = relu_identity(problem.d);
    let probe_seed = rng::derive_seed(seed, tag::PROBES, 1);
    let mut best: Option<(usize, McNetwork)> = None;
    let mut errors: Vec<ErrorReport> = Vec::with_capacity(selection.candidates);
    for k in 0..selection.candidates {
        let net = build_mc_network(problem, &cfg, m, rng::derive_seed(seed, tag::CANDIDATE, k as u64), &id)?;
        let err = lp_error(reference, &net, &problem.measure, selection.p, selection.probes, probe_seed)?;
        let better = best.as_ref().is_none_or(|(i, _): &(usize, McNetwork)| err.estimate < errors[*i].estimate);
        errors.push(err);
        if better {
            best = Some((k, net));
        }
    }
    let (selected, network) = best.expect("at least one candidate");
    Ok(ConstructionReport {
        param_count: network.param_count(),
        depth: network.depth(),
        architecture: network.architecture(),
        network,
        m: constants.m,
        delta: constants.delta,
        steps: cfg.steps,
        seed,
        candidate_errors: errors,
        selected,
    })
}

/// Limits of the calibration search.
#[derive(Clone, Copy, Debug)]
pub struct CalibrationBudget {
    pub max_states: usize,
    pub max_m: u64,
    pub min_delta: f64,
    pub pilot_probes: usize,
    pub pilot_paths: usize,
    pub candidates: usize,
    pub confirm_probes: usize,
    /// Feynman–Kac settings for problems without a closed form.
    pub reference: FkConfig,
}

impl Default for CalibrationBudget {
    fn default() -> Self {
        Self {
            max_states: 24,
            max_m: 1 << 15,
            min_delta: 1.0 / 64.0,
            pilot_probes: 128,
            pilot_paths: 1024,
            candidates: 4,
            confirm_probes: 512,
            reference: FkConfig { samples: 4096, seed: 0, steps: 256 },
        }
    }
}

/// One visited `(M, δ)` state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationStep {
    pub m: u64,
    pub delta: f64,
    pub steps: usize,
    /// Estimated `∫ (u - E φ(Y))² dν`: time-discretization and surrogate error.
    pub bias_sq: f64,
    /// Estimated `∫ Var φ(Y) dν / M`: Monte Carlo error.
    pub stat_sq: f64,
    /// `sqrt(bias_sq + stat_sq)`, the expected `L²(ν)` error of one candidate.
    pub predicted: f64,
    /// Best candidate error when the prediction passed.
    pub confirmed: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    pub constants: RateConstants,
    pub trace: Vec<CalibrationStep>,
}

struct Pilot {
    bias_sq: f64,
    mean_var: f64,
}

fn pilot(
    problem: &KolmogorovProblem,
    reference: &ReferenceSolution,
    cfg: &EulerConfig,
    seed: u64,
    budget: &CalibrationBudget,
) -> Result<Pilot> {
    let (drift_net, f0_net) = surrogates(problem)?;
    let diff = sde::diffusion_factor(&problem.a)?;
    let points = probe_points(&problem.measure, budget.pilot_probes, rng::derive_seed(seed, tag::PILOT, 0));
    let noise_seed = rng::derive_seed(seed, tag::PILOT, 1 + cfg.steps as u64);
    let n = budget.pilot_paths;
    let per_probe: Vec<(f64, f64)> = points
        .par_iter()
        .enumerate()
        .map(|(j, x)| {
            let (u, _) = reference.value(x)?;
            let vals = (0..n)
                .map(|k| {
                    let noise = NoiseRealization::generate(noise_seed, (j * n + k) as u64, cfg, problem.d);
                    let y = sde::euler_path(drift_net, x, &diff, cfg, &noise, false)?;
                    f0_net.realize_scalar(&y.endpoint)
                })
                .collect::<Result<Vec<_>>>()?;
            let (mean, var) = mean_var(&vals);
            Ok(((u - mean).powi(2) - var / n as f64, var))
        })
        .collect::<Result<_>>()?;
    let np = per_probe.len() as f64;
    Ok(Pilot {
        bias_sq: per_probe.iter().map(|t| t.0).sum::<f64>() / np,
        mean_var: per_probe.iter().map(|t| t.1).sum::<f64>() / np,
    })
}

/// Search `(M, δ)` from `(4, 1)`: a pilot run splits the expected squared
/// error into a bias part (shrunk by halving `δ`) and a Monte Carlo part
/// (shrunk by doubling `M`), and the larger part is reduced next. A state is
/// accepted once the expected error is at most `ε/2` and the best of `K`
/// freshly built candidates measures at most `ε/2`.
///
/// The sequence of visited states does not depend on `ε`, so a larger `ε`
/// never returns a larger `M`.
pub fn calibrate(
    problem: &KolmogorovProblem,
    epsilon: f64,
    p: f64,
    seed: u64,
    budget: &CalibrationBudget,
) -> Result<Calibration> {
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon must be positive"));
    }
    surrogates(problem)?;
    let reference = ReferenceSolution::for_problem(problem, budget.reference);
    let (mut m, mut delta) = (4u64, 1.0f64);
    let mut cache: Vec<(u64, Pilot)> = Vec::new();
    let mut trace: Vec<CalibrationStep> = Vec::new();
    let mut best: Option<(f64, u64, f64)> = None;
    for state in 0..budget.max_states {
        let cfg = EulerConfig::new(delta, problem.horizon)?;
        if !cache.iter().any(|(bits, _)| *bits == delta.to_bits()) {
            cache.push((delta.to_bits(), pilot(problem, &reference, &cfg, seed, budget)?));
        }
        let pilot = &cache.iter().find(|(bits, _)| *bits == delta.to_bits()).expect("cached").1;
        let bias_sq = pilot.bias_sq.max(0.0);
        let stat_sq = pilot.mean_var / m as f64;
        let predicted = (bias_sq + stat_sq).sqrt();
        if best.is_none_or(|b| predicted < b.0) {
            best = Some((predicted, m, delta));
        }
        let mut step = CalibrationStep { m, delta, steps: cfg.steps, bias_sq, stat_sq, predicted, confirmed: None };
        if predicted <= epsilon / 2.0 {
            let constants = RateConstants::calibrated(m, delta);
            let sel = Selection { candidates: budget.candidates, probes: budget.confirm_probes, p };
            let report = select_realization(
                problem,
                &reference,
                &constants,
                sel,
                rng::derive_seed(seed, tag::CONFIRM, state as u64),
            )?;
            let err = report.selected_error().estimate;
            step.confirmed = Some(err);
            trace.push(step);
            if err <= epsilon / 2.0 {
                return Ok(Calibration { constants, trace });
            }
        } else {
            trace.push(step);
        }
        let grow_m = stat_sq >= bias_sq;
        let can_grow = m * 2 <= budget.max_m;
        let can_shrink = delta / 2.0 >= budget.min_delta;
        match (grow_m, can_grow, can_shrink) {
            (true, true, _) | (false, true, false) => m *= 2,
            (false, _, true) | (true, false, true) => delta /= 2.0,
            _ => break,
        }
    }
    let (best_error, best_m, best_delta) = best.unwrap_or((f64::INFINITY, m, delta));
    Err(Error::CalibrationFailed { states: trace.len(), best_m, best_delta, best_error })
}

/// Check of `P <= c d^c ε^{-c}`, plus the explicit bound when closed-form
/// constants are supplied.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamCertificate {
    pub holds: bool,
    /// `ln(c d^c ε^{-c}) - ln P`.
    pub log_margin: f64,
    pub paper_bound: Option<PaperBoundCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PaperBoundCheck {
    pub holds: bool,
    pub log_margin: f64,
    pub certified_exponent: f64,
}

pub fn param_certificate(
    param_count: u64,
    c: f64,
    d: usize,
    epsilon: f64,
    paper: Option<&PaperParams>,
) -> ParamCertificate {
    let log_p = (param_count as f64).ln();
    let log_margin = c.ln() + c * (d as f64).ln() - c * epsilon.ln() - log_p;
    let paper_bound = paper.map(|pp| {
        let margin = pp.log_param_bound() - log_p;
        PaperBoundCheck { holds: margin >= 0.0, log_margin: margin, certified_exponent: pp.certified_exponent() }
    });
    ParamCertificate { holds: log_margin >= 0.0, log_margin, paper_bound }
}

/// Parameter count of the Monte Carlo network for given `(M, δ)` without
/// building it: one sample network is built to read off its architecture.
pub fn predicted_param_count(problem: &KolmogorovProblem, m: u64, delta: f64) -> Result<u64> {
    let cfg = EulerConfig::new(delta, problem.horizon)?;
    let noise = NoiseRealization::generate(0, 0, &cfg, problem.d);
    let net = build_sample_network(problem, &cfg, &noise, &relu_identity(problem.d))?;
    Ok(weighted_sum_architecture(&net.architecture(), m as usize).param_count())
}
