//! Probability measures on `R^d` used to weight approximation errors.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Measure {
    /// Uniform distribution on `[0, 1]^d`.
    UniformCube { d: usize },
    /// `N(0, sigma^2 I_d)`.
    GaussianIso { d: usize, sigma: f64 },
    /// Dirac mass at one point.
    PointMass { x: Vec<f64> },
}

impl Measure {
    pub fn uniform_cube(d: usize) -> Self {
        Measure::UniformCube { d }
    }

    pub fn gaussian(d: usize, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(invalid(format!("gaussian scale {sigma} must be finite and >= 0")));
        }
        Ok(Measure::GaussianIso { d, sigma })
    }

    pub fn point(x: Vec<f64>) -> Self {
        Measure::PointMass { x }
    }

    pub fn dim(&self) -> usize {
        match self {
            Measure::UniformCube { d } | Measure::GaussianIso { d, .. } => *d,
            Measure::PointMass { x } => x.len(),
        }
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self, Measure::PointMass { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Measure::UniformCube { d } => (0..*d).map(|_| rng.random::<f64>()).collect(),
            Measure::GaussianIso { d, sigma } => (0..*d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    sigma * z
                })
                .collect(),
            Measure::PointMass { x } => x.clone(),
        }
    }

    /// Exact `∫ ||z||^2 dν` (used by tests and diagnostics).
    pub fn second_moment(&self) -> f64 {
        match self {
            Measure::UniformCube { d } => *d as f64 / 3.0,
            Measure::GaussianIso { d, sigma } => *d as f64 * sigma * sigma,
            Measure::PointMass { x } => x.iter().map(|v| v * v).sum(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Measure::UniformCube { d } => format!("uniform on [0,1]^{d}"),
            Measure::GaussianIso { d, sigma } => format!("N(0, {sigma}^2 I_{d})"),
            Measure::PointMass { x } => format!("point mass at {x:?}"),
        }
    }
}
