//! Small statistics toolkit: Monte Carlo estimates with standard errors and
//! ordinary least squares for log-log rate fits.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    /// Sample mean and standard error of the mean. Summation runs in slice
    /// order, so equal inputs give bit-equal outputs.
    pub fn mean_of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { value: f64::NAN, stderr: f64::NAN, samples: 0 };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Self { value: mean, stderr, samples: n }
    }

    /// `(E Z)^{1/p}` from an estimate of `E Z`, with the delta-method error.
    pub fn root(self, p: f64) -> Self {
        let m = self.value.max(0.0);
        if m == 0.0 {
            // Degenerate case: report the error of the raw moment propagated
            // through the root at the resolution of one standard error.
            return Self { value: 0.0, stderr: self.stderr.max(0.0).powf(1.0 / p), samples: self.samples };
        }
        let value = m.powf(1.0 / p);
        Self { value, stderr: value / (p * m) * self.stderr, samples: self.samples }
    }

    /// `value + z * stderr`.
    pub fn upper(&self, z: f64) -> f64 {
        self.value + z * self.stderr
    }
}

/// Sample mean and unbiased variance of a slice.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Result of fitting `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// 95% confidence interval for the slope (Student t).
    pub slope_ci: (f64, f64),
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares with slope standard error and a 95% interval.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::InvalidArgument("fit needs equally many x and y values".into()));
    }
    if n < 3 {
        return Err(Error::InvalidArgument(format!("fit needs at least 3 points, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fit data".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidArgument("degenerate fit: x has zero variance".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_stderr = (sse / (nf - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let t = StudentsT::new(0.0, 1.0, nf - 2.0)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        slope_ci: (slope - t * slope_stderr, slope + t * slope_stderr),
        r_squared,
        points: n,
    })
}

/// Fit of `log y` against `log x`.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.iter().chain(y).any(|v| *v <= 0.0) {
        return Err(Error::InvalidArgument("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ols(&lx, &ly)
}
