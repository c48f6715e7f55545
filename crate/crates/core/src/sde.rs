//! Euler–Maruyama for `dY = f1(Y) dt + 𝒜 dW` with constant `𝒜 = √(2A)`,
//! Brownian noise tables, a fine-grid coupling that stands in for the exact
//! solution, and Monte Carlo moment estimators.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::network::Matrix;
use crate::problem::{norm, VectorField};
use crate::rng::{self, tag};
use crate::stats::Estimate;

/// Refinement factor of the grid on which the "exact" solution is simulated.
pub const FINE_FACTOR: usize = 64;

const SYMMETRY_TOL: f64 = 1e-12;
const EIGEN_CLAMP: f64 = -1e-10;

/// `√(2A)` for symmetric positive semidefinite `A`, via an eigendecomposition
/// with slightly negative eigenvalues clamped to zero.
pub fn diffusion_factor(a: &Matrix) -> Result<Matrix> {
    let d = a.rows();
    if a.cols() != d {
        return Err(Error::Shape(format!("diffusion matrix is {}x{}", d, a.cols())));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("diffusion matrix".into()));
    }
    let scale = a.frobenius_norm().max(1.0);
    for i in 0..d {
        for j in 0..i {
            if (a.get(i, j) - a.get(j, i)).abs() > SYMMETRY_TOL * scale {
                return Err(invalid(format!("diffusion matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (a.get(i, j) + a.get(j, i)));
    let eig = SymmetricEigen::new(m);
    let mut sqrt_vals = Vec::with_capacity(d);
    for &lambda in eig.eigenvalues.iter() {
        if lambda < EIGEN_CLAMP * scale {
            return Err(invalid(format!("diffusion matrix has eigenvalue {lambda:.3e} < 0")));
        }
        sqrt_vals.push((2.0 * lambda.max(0.0)).sqrt());
    }
    let q = &eig.eigenvectors;
    let mut out = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let v: f64 = (0..d).map(|k| q[(i, k)] * sqrt_vals[k] * q[(j, k)]).sum();
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Largest multiple of `h` that does not exceed `t`.
pub fn grid_projection(t: f64, h: f64) -> f64 {
    let k = (t / h * (1.0 + 1e-12)).floor().max(0.0);
    (k * h).min(t)
}

/// Uniform time grid on `[0, T]` with `steps` steps of length `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerConfig {
    /// The nominal step parameter `δ`, with nominal step `δ²`.
    pub delta: f64,
    pub h: f64,
    pub steps: usize,
    pub horizon: f64,
}

impl EulerConfig {
    /// Grid with nominal step `δ²`, snapped so that `T` is hit exactly:
    /// `steps = max(1, round(T / δ²))`, `h = T / steps`.
    pub fn new(delta: f64, horizon: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(invalid(format!("delta = {delta} must lie in (0, 1]")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid(format!("horizon {horizon} must be positive")));
        }
        let raw = (horizon / (delta * delta)).round();
        if raw > 1e8 {
            return Err(invalid(format!("delta = {delta} needs {raw} Euler steps")));
        }
        let steps = (raw as usize).max(1);
        Ok(Self { delta, h: horizon / steps as f64, steps, horizon })
    }

    /// Grid with an explicit step count.
    pub fn with_steps(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid("need at least one step and a positive horizon"));
        }
        let h = horizon / steps as f64;
        Ok(Self { delta: h.sqrt().min(1.0), h, steps, horizon })
    }

    /// Grid time `k h`.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.h
        }
    }
}

/// Brownian increments `ΔW_k ~ N(0, h I_d)` for one sample path, stored
/// step-major.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseRealization {
    pub seed: u64,
    pub index: u64,
    pub h: f64,
    pub steps: usize,
    pub d: usize,
    increments: Vec<f64>,
}

impl NoiseRealization {
    /// Path `index` of the family keyed by `seed`.
    pub fn generate(seed: u64, index: u64, cfg: &EulerConfig, d: usize) -> Self {
        let mut rng = rng::stream(rng::derive_seed(seed, tag::NOISE, 0), index);
        let mut increments = vec![0.0; cfg.steps * d];
        rng::fill_normal(&mut rng, &mut increments, cfg.h.sqrt());
        Self { seed, index, h: cfg.h, steps: cfg.steps, d, increments }
    }

    /// Noise table from explicit increments.
    pub fn from_increments(h: f64, d: usize, increments: Vec<f64>) -> Result<Self> {
        if d == 0 || increments.len() % d != 0 || increments.is_empty() {
            return Err(Error::Shape("increment table must be steps x d".into()));
        }
        let steps = increments.len() / d;
        Ok(Self { seed: 0, index: 0, h, steps, d, increments })
    }

    pub fn increment(&self, k: usize) -> &[f64] {
        &self.increments[k * self.d..(k + 1) * self.d]
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Same path with every increment negated.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        out.increments.iter_mut().for_each(|v| *v = -*v);
        out
    }

    /// Split each increment into `factor` sub-increments drawn from the
    /// Brownian bridge, so the sub-increments of step `k` sum to `ΔW_k`.
    ///
    /// Given i.i.d. `z_1..z_f ~ N(0, h/f)`, the vector `z_j - mean(z) + ΔW/f`
    /// has exactly the conditional law of the sub-increments given their sum.
    pub fn refine(&self, factor: usize) -> Self {
        assert!(factor >= 1);
        let mut rng = rng::stream(rng::derive_seed(self.seed, tag::BRIDGE, self.index), factor as u64);
        let hf = self.h / factor as f64;
        let d = self.d;
        let mut fine = vec![0.0; self.increments.len() * factor];
        let mut z = vec![0.0; factor];
        for k in 0..self.steps {
            for i in 0..d {
                rng::fill_normal(&mut rng, &mut z, hf.sqrt());
                let shift = (z.iter().sum::<f64>() - self.increments[k * d + i]) / factor as f64;
                for (j, zj) in z.iter().enumerate() {
                    fine[(k * factor + j) * d + i] = zj - shift;
                }
            }
        }
        Self { seed: self.seed, index: self.index, h: hf, steps: self.steps * factor, d, increments: fine }
    }

    /// `𝒜 ΔW_k` for every step, step-major.
    pub fn diffused(&self, diff: &Matrix) -> Vec<f64> {
        let mut out = vec![0.0; self.increments.len()];
        for k in 0..self.steps {
            diff.matvec_into(self.increment(k), &mut out[k * self.d..(k + 1) * self.d]);
        }
        out
    }
}

/// Endpoint (and optionally the grid values) of an Euler–Maruyama path.
#[derive(Clone, Debug, PartialEq)]
pub struct EulerPath {
    pub endpoint: Vec<f64>,
    pub path: Option<Vec<Vec<f64>>>,
}

fn check_grid(cfg: &EulerConfig, noise: &NoiseRealization, d: usize) -> Result<()> {
    if noise.steps != cfg.steps || (noise.h - cfg.h).abs() > 1e-12 * cfg.h {
        return Err(invalid(format!(
            "noise grid ({} steps of {}) does not match Euler grid ({} steps of {})",
            noise.steps, noise.h, cfg.steps, cfg.h
        )));
    }
    if noise.d != d {
        return Err(Error::Shape(format!("noise of dimension {} for a path in R^{d}", noise.d)));
    }
    Ok(())
}

/// `Y_{k+1} = Y_k + h f(Y_k) + 𝒜 ΔW_k`.
pub fn euler_path(
    drift: &dyn VectorField,
    x0: &[f64],
    diff: &Matrix,
    cfg: &EulerConfig,
    noise: &NoiseRealization,
    keep_path: bool,
) -> Result<EulerPath> {
    let d = x0.len();
    if drift.dim() != d || diff.rows() != d || diff.cols() != d {
        return Err(Error::Shape(format!("Euler path in R^{d} with mismatched coefficients")));
    }
    check_grid(cfg, noise, d)?;
    let mut y = x0.to_vec();
    let mut f = vec![0.0; d];
    let mut dw = vec![0.0; d];
    let mut path = keep_path.then(|| {
        let mut p = Vec::with_capacity(cfg.steps + 1);
        p.push(y.clone());
        p
    });
    for k in 0..cfg.steps {
        drift.eval(&y, &mut f)?;
        diff.matvec_into(noise.increment(k), &mut dw);
        for i in 0..d {
            y[i] += cfg.h * f[i] + dw[i];
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericStep { step: k + 1, detail: "Euler iterate is not finite".into() });
        }
        if let Some(p) = path.as_mut() {
            p.push(y.clone());
        }
    }
    Ok(EulerPath { endpoint: y, path })
}

/// One coupled draw: `X` solves `dX = μ(X) dt + 𝒜 dW` on the `FINE_FACTOR`-times
/// finer grid, `Y_t = y0 + ∫ a_s ds + 𝒜 W_t` with `a_s = g(Y_{χ(s)})` on the
/// coarse grid, both driven by the same Brownian path.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledSample {
    pub x_end: Vec<f64>,
    pub y_end: Vec<f64>,
    /// `∫_0^T ||a_s - μ(Y_s)||^p ds`, left-point rule on the fine grid.
    pub defect: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn coupled_sample(
    mu: &dyn VectorField,
    g: &dyn VectorField,
    x0: &[f64],
    y0: &[f64],
    diff: &Matrix,
    cfg: &EulerConfig,
    noise: &NoiseRealization,
    p: f64,
) -> Result<CoupledSample> {
    let d = x0.len();
    check_grid(cfg, noise, d)?;
    let fine = noise.refine(FINE_FACTOR);
    let hf = fine.h;
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let (mut a, mut fx, mut fy, mut dw) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut defect = 0.0;
    for k in 0..cfg.steps {
        g.eval(&y, &mut a)?;
        for j in 0..FINE_FACTOR {
            let idx = k * FINE_FACTOR + j;
            mu.eval(&y, &mut fy)?;
            defect += hf * a.iter().zip(&fy).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt().powf(p);
            mu.eval(&x, &mut fx)?;
            diff.matvec_into(fine.increment(idx), &mut dw);
            for i in 0..d {
                x[i] += hf * fx[i] + dw[i];
                y[i] += hf * a[i] + dw[i];
            }
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::NumericStep { step: k + 1, detail: "coupled iterate is not finite".into() });
        }
    }
    Ok(CoupledSample { x_end: x, y_end: y, defect })
}

/// Coupled draws for paths `0..samples` of the family keyed by `seed`, in
/// path order regardless of scheduling.
#[allow(clippy::too_many_arguments)]
pub fn coupled_samples(
    mu: &dyn VectorField,
    g: &dyn VectorField,
    x0: &[f64],
    y0: &[f64],
    diff: &Matrix,
    cfg: &EulerConfig,
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<CoupledSample>> {
    (0..samples as u64)
        .into_par_iter()
        .map(|m| {
            let noise = NoiseRealization::generate(seed, m, cfg, x0.len());
            coupled_sample(mu, g, x0, y0, diff, cfg, &noise, p)
        })
        .collect()
}

/// Monte Carlo estimate of `(E ||X_T - Y_T||^p)^{1/p}` where `Y` is the
/// Euler scheme with step `δ²` and `X` its fine-grid coupling.
pub fn coupled_strong_error(
    drift: &dyn VectorField,
    diff: &Matrix,
    x0: &[f64],
    horizon: f64,
    delta: f64,
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if samples < 2 {
        return Err(invalid("strong error estimate needs at least 2 samples"));
    }
    let cfg = EulerConfig::new(delta, horizon)?;
    let draws = coupled_samples(drift, drift, x0, x0, diff, &cfg, p, samples, seed)?;
    let errs: Vec<f64> = draws.iter().map(|s| crate::problem::dist(&s.x_end, &s.y_end).powf(p)).collect();
    Ok(Estimate::mean_of(&errs).root(p))
}

/// Monte Carlo estimate of `(E ||B W_t||^p)^{1/p}`.
pub fn brownian_moment(b: &Matrix, t: f64, p: f64, samples: usize, seed: u64) -> Result<Estimate> {
    if !(p > 0.0) || t < 0.0 {
        return Err(invalid("brownian moment needs p > 0 and t >= 0"));
    }
    let m = b.cols();
    let vals: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(rng::derive_seed(seed, tag::CHECK, 1), k);
            let mut w = vec![0.0; m];
            rng::fill_normal(&mut rng, &mut w, t.sqrt());
            norm(&b.matvec(&w)).powf(p)
        })
        .collect();
    Ok(Estimate::mean_of(&vals).root(p))
}

/// `(E ||Y_{kh}||^p)^{1/p}` of the Euler scheme for every grid time `kh`.
pub fn euler_moment_profile(
    drift: &dyn VectorField,
    x0: &[f64],
    diff: &Matrix,
    cfg: &EulerConfig,
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<Estimate>> {
    let per_path: Vec<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|m| {
            let noise = NoiseRealization::generate(seed, m, cfg, x0.len());
            let path = euler_path(drift, x0, diff, cfg, &noise, true)?;
            Ok(path.path.expect("kept").iter().map(|y| norm(y).powf(p)).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..=cfg.steps)
        .map(|k| {
            let col: Vec<f64> = per_path.iter().map(|v| v[k]).collect();
            Estimate::mean_of(&col).root(p)
        })
        .collect())
}
