//! Kolmogorov problems: constant diffusion, Lipschitz drift, initial value and
//! the measure on which the solution at time `T` is to be approximated.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::measure::Measure;
use crate::network::{Matrix, NeuralNetwork};
use crate::oracle::ClosedForm;
use crate::rng;

/// A map `R^d -> R^d`.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()>;
}

/// A map `R^d -> R`.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<f64>;
}

impl VectorField for NeuralNetwork {
    fn dim(&self) -> usize {
        self.input_dim()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if self.output_dim() != self.input_dim() {
            return Err(Error::Shape(format!(
                "network {} is not a vector field",
                self.architecture()
            )));
        }
        out.copy_from_slice(&self.realize(x)?);
        Ok(())
    }
}

impl ScalarField for NeuralNetwork {
    fn dim(&self) -> usize {
        self.input_dim()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.realize_scalar(x)
    }
}

/// Vector field given by a closure.
pub struct FnVectorField<F> {
    d: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Send + Sync> FnVectorField<F> {
    pub fn new(d: usize, f: F) -> Self {
        Self { d, f }
    }
}

impl<F: Fn(&[f64], &mut [f64]) + Send + Sync> VectorField for FnVectorField<F> {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(x, out);
        Ok(())
    }
}

/// Scalar field given by a closure.
pub struct FnScalarField<F> {
    d: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnScalarField<F> {
    pub fn new(d: usize, f: F) -> Self {
        Self { d, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> ScalarField for FnScalarField<F> {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok((self.f)(x))
    }
}

/// The zero vector field.
pub struct ZeroField(pub usize);

impl VectorField for ZeroField {
    fn dim(&self) -> usize {
        self.0
    }

    fn eval(&self, _x: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        Ok(())
    }
}

/// `∂_t u = <∇u, f1> + Σ a_ij ∂²_ij u`, `u(0, ·) = f0`, approximated at time
/// `horizon` in `L^p(measure)`.
#[derive(Clone)]
pub struct KolmogorovProblem {
    pub name: String,
    pub d: usize,
    /// Symmetric positive semidefinite diffusion matrix.
    pub a: Matrix,
    pub drift: Arc<dyn VectorField>,
    /// Declared global Lipschitz constant of `drift`.
    pub drift_lipschitz: f64,
    /// Declared `(C, c)` with `||drift(x)|| <= C + c ||x||`.
    pub drift_growth: (f64, f64),
    pub drift_is_zero: bool,
    pub f0: Arc<dyn ScalarField>,
    /// Declared `q` with `|f0(x)| <= K (1 + ||x||^q)`.
    pub f0_growth_exponent: f64,
    pub horizon: f64,
    pub measure: Measure,
    /// ReLU network surrogate of the drift.
    pub drift_net: Option<NeuralNetwork>,
    /// ReLU network surrogate of the initial value.
    pub f0_net: Option<NeuralNetwork>,
    pub closed_form: Option<ClosedForm>,
}

impl fmt::Debug for KolmogorovProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KolmogorovProblem")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("horizon", &self.horizon)
            .field("measure", &self.measure)
            .field("closed_form", &self.closed_form)
            .finish_non_exhaustive()
    }
}

impl KolmogorovProblem {
    /// Check dimensions, symmetry of `a`, positivity of `horizon` and spot-check
    /// the declared Lipschitz constant on random pairs.
    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if self.a.rows() != d || self.a.cols() != d {
            return Err(Error::Shape(format!("diffusion matrix must be {d}x{d}")));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(invalid(format!("horizon {} must be positive", self.horizon)));
        }
        if self.drift.dim() != d || self.f0.dim() != d || self.measure.dim() != d {
            return Err(Error::Shape("drift, initial value and measure must live on R^d".into()));
        }
        for net in [&self.drift_net, &self.f0_net].into_iter().flatten() {
            if net.input_dim() != d {
                return Err(Error::Shape(format!("surrogate network {} not on R^{d}", net.architecture())));
            }
        }
        crate::sde::diffusion_factor(&self.a)?;
        self.spot_check_lipschitz(64, 0x5eed)
    }

    fn spot_check_lipschitz(&self, pairs: usize, seed: u64) -> Result<()> {
        let d = self.d;
        let mut rng = rng::stream(seed, 0);
        let (mut fx, mut fy) = (vec![0.0; d], vec![0.0; d]);
        let mut x = vec![0.0; d];
        let mut y = vec![0.0; d];
        for _ in 0..pairs {
            rng::fill_normal(&mut rng, &mut x, 3.0);
            rng::fill_normal(&mut rng, &mut y, 1.0);
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi += xi;
            }
            self.drift.eval(&x, &mut fx)?;
            self.drift.eval(&y, &mut fy)?;
            let lhs = dist(&fx, &fy);
            let rhs = self.drift_lipschitz * dist(&x, &y) * (1.0 + 1e-6);
            if lhs > rhs {
                return Err(invalid(format!(
                    "drift of {} violates the declared Lipschitz constant {} ({lhs:.6e} > {rhs:.6e})",
                    self.name, self.drift_lipschitz
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}
