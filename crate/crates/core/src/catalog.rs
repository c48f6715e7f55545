//! Named test problems with their ReLU network surrogates.
//!
//! | name             | A     | drift          | f0        | reference   |
//! |------------------|-------|----------------|-----------|-------------|
//! | `heat-linear`    | I     | 0              | Σ x_i     | closed form |
//! | `heat-quadratic` | I     | 0              | ‖x‖²      | closed form |
//! | `heat-max`       | I     | 0              | max x_i   | quadrature  |
//! | `ou-linear`      | I/2   | −x             | Σ x_i     | closed form |
//! | `ou-quadratic`   | I/2   | −x             | ‖x‖²      | closed form |
//! | `bounded-drift`  | I     | x / (1 + ‖x‖²) | Σ x_i     | Monte Carlo |
//!
//! Linear and max initial values and the linear drifts are represented exactly;
//! squares and the bounded drift use piecewise-linear interpolants.

use std::sync::Arc;

use crate::calculus::{compose, relu_identity};
use crate::error::{invalid, Result};
use crate::measure::Measure;
use crate::network::{Layer, Matrix, NeuralNetwork};
use crate::oracle::ClosedForm;
use crate::problem::{FnScalarField, FnVectorField, KolmogorovProblem, ZeroField};
use crate::shallow::{PiecewiseLinear, ShallowBuilder};

pub const PROBLEM_NAMES: [&str; 6] =
    ["heat-linear", "heat-quadratic", "heat-max", "ou-linear", "ou-quadratic", "bounded-drift"];

/// Spacing of the knots of piecewise-linear squares.
const SQUARE_SPACING: f64 = 0.05;

/// Catalog problem `name` on `R^d` at horizon `horizon`, with `ν` the uniform
/// distribution on the unit cube.
pub fn problem(name: &str, d: usize, horizon: f64) -> Result<KolmogorovProblem> {
    if d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    let mut p = match name {
        "heat-linear" => heat(d, horizon, "heat-linear", Arc::new(sum_field(d)), sum_net(d), ClosedForm::HeatLinear, 1.0),
        "heat-quadratic" => heat(
            d,
            horizon,
            "heat-quadratic",
            Arc::new(FnScalarField::new(d, |x: &[f64]| x.iter().map(|v| v * v).sum())),
            square_norm_net(d, 1.0 + 6.0 * (2.0 * horizon).sqrt()),
            ClosedForm::HeatQuadratic,
            2.0,
        ),
        "heat-max" => heat(
            d,
            horizon,
            "heat-max",
            Arc::new(FnScalarField::new(d, |x: &[f64]| x.iter().copied().fold(f64::NEG_INFINITY, f64::max))),
            max_net(d),
            ClosedForm::HeatMax,
            1.0,
        ),
        "ou-linear" => ou(d, horizon, "ou-linear", Arc::new(sum_field(d)), sum_net(d), ClosedForm::OuLinear, 1.0),
        "ou-quadratic" => ou(
            d,
            horizon,
            "ou-quadratic",
            Arc::new(FnScalarField::new(d, |x: &[f64]| x.iter().map(|v| v * v).sum())),
            square_norm_net(d, 7.0),
            ClosedForm::OuQuadratic,
            2.0,
        ),
        "bounded-drift" => bounded_drift(d, horizon),
        other => {
            return Err(invalid(format!(
                "unknown problem {other:?}; expected one of {}",
                PROBLEM_NAMES.join(", ")
            )))
        }
    };
    p.name = name.to_string();
    p.validate()?;
    Ok(p)
}

fn sum_field(d: usize) -> FnScalarField<impl Fn(&[f64]) -> f64 + Send + Sync> {
    FnScalarField::new(d, |x: &[f64]| x.iter().sum())
}

#[allow(clippy::too_many_arguments)]
fn heat(
    d: usize,
    horizon: f64,
    name: &str,
    f0: Arc<dyn crate::problem::ScalarField>,
    f0_net: NeuralNetwork,
    form: ClosedForm,
    growth: f64,
) -> KolmogorovProblem {
    KolmogorovProblem {
        name: name.into(),
        d,
        a: Matrix::identity(d),
        drift: Arc::new(ZeroField(d)),
        drift_lipschitz: 0.0,
        drift_growth: (0.0, 0.0),
        drift_is_zero: true,
        f0,
        f0_growth_exponent: growth,
        horizon,
        measure: Measure::uniform_cube(d),
        drift_net: Some(zero_net(d)),
        f0_net: Some(f0_net),
        closed_form: Some(form),
    }
}

fn ou(
    d: usize,
    horizon: f64,
    name: &str,
    f0: Arc<dyn crate::problem::ScalarField>,
    f0_net: NeuralNetwork,
    form: ClosedForm,
    growth: f64,
) -> KolmogorovProblem {
    KolmogorovProblem {
        name: name.into(),
        d,
        a: Matrix::identity(d).scaled(0.5),
        drift: Arc::new(FnVectorField::new(d, |x: &[f64], out: &mut [f64]| {
            for (o, v) in out.iter_mut().zip(x) {
                *o = -v;
            }
        })),
        drift_lipschitz: 1.0,
        drift_growth: (0.0, 1.0),
        drift_is_zero: false,
        f0,
        f0_growth_exponent: growth,
        horizon,
        measure: Measure::uniform_cube(d),
        drift_net: Some(relu_identity(d).scale_shift_output(-1.0, &vec![0.0; d]).expect("shape")),
        f0_net: Some(f0_net),
        closed_form: Some(form),
    }
}

fn bounded_drift(d: usize, horizon: f64) -> KolmogorovProblem {
    KolmogorovProblem {
        name: "bounded-drift".into(),
        d,
        a: Matrix::identity(d),
        drift: Arc::new(FnVectorField::new(d, |x: &[f64], out: &mut [f64]| {
            let s = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
            for (o, v) in out.iter_mut().zip(x) {
                *o = v / s;
            }
        })),
        // The Jacobian has eigenvalues 1/(1+r²) and (1-r²)/(1+r²)², both in [-1, 1];
        // ‖x‖/(1+‖x‖²) ≤ 1/2.
        drift_lipschitz: 1.0,
        drift_growth: (0.5, 0.0),
        drift_is_zero: false,
        f0: Arc::new(sum_field(d)),
        f0_growth_exponent: 1.0,
        horizon,
        measure: Measure::uniform_cube(d),
        drift_net: Some(bounded_drift_net(d, 1.0 + 6.0 * (2.0 * horizon).sqrt())),
        f0_net: Some(sum_net(d)),
        closed_form: None,
    }
}

/// `(d, 1, d)` network realizing the zero map.
pub fn zero_net(d: usize) -> NeuralNetwork {
    NeuralNetwork::new(
        vec![
            Layer::new(Matrix::zeros(1, d), vec![0.0]).expect("finite"),
            Layer::new(Matrix::zeros(d, 1), vec![0.0; d]).expect("finite"),
        ],
        crate::network::Activation::Relu,
    )
    .expect("valid chain")
}

/// `(d, 2d, 1)` network realizing `x -> Σ x_i`.
pub fn sum_net(d: usize) -> NeuralNetwork {
    let mut b = ShallowBuilder::new(d, 1);
    for i in 0..d {
        b.add_linear(0, &unit(d, i), 0.0, 1.0);
    }
    b.build().expect("valid")
}

fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

/// One level of the max tree: `R^k -> R^{ceil(k/2)}`, pairs mapped to
/// `max(a, b) = relu(a - b) + b`, an odd last entry carried.
fn max_level(k: usize) -> NeuralNetwork {
    let out = k.div_ceil(2);
    let mut b = ShallowBuilder::new(k, out);
    for j in 0..k / 2 {
        let mut diff = vec![0.0; k];
        diff[2 * j] = 1.0;
        diff[2 * j + 1] = -1.0;
        b.add_pl(j, &diff, 0.0, &PiecewiseLinear::relu(), 1.0);
        b.add_linear(j, &unit(k, 2 * j + 1), 0.0, 1.0);
    }
    if k % 2 == 1 {
        b.add_linear(out - 1, &unit(k, k - 1), 0.0, 1.0);
    }
    b.build().expect("valid")
}

/// Exact ReLU network for `x -> max_i x_i`: a binary tree of pairwise maxima
/// glued with identity networks.
pub fn max_net(d: usize) -> NeuralNetwork {
    if d == 1 {
        return sum_net(1);
    }
    let mut net = max_level(d);
    let mut k = d.div_ceil(2);
    while k > 1 {
        net = compose(&max_level(k), &net, &relu_identity(k)).expect("compatible widths");
        k = k.div_ceil(2);
    }
    net
}

fn square_segments(r: f64) -> usize {
    (2.0 * r / SQUARE_SPACING).ceil() as usize
}

/// One-hidden-layer surrogate of `x -> ‖x‖²`, exact up to
/// `d (SQUARE_SPACING/2)²` on `[-r, r]^d`.
pub fn square_norm_net(d: usize, r: f64) -> NeuralNetwork {
    let g = PiecewiseLinear::square(r, square_segments(r)).expect("valid knots");
    let mut b = ShallowBuilder::new(d, 1);
    for i in 0..d {
        b.add_pl(0, &unit(d, i), 0.0, &g, 1.0);
    }
    b.build().expect("valid")
}

/// Surrogate of `x -> x / (1 + ‖x‖²)` in three stages:
/// `x -> (x, ‖x‖²) -> (x, 1/(1+s)) -> x·g` with products via
/// `x g = ((x + g)² - (x - g)²) / 4`.
pub fn bounded_drift_net(d: usize, r: f64) -> NeuralNetwork {
    let segments = (2.0 * r / 0.25).ceil() as usize;
    let sq = PiecewiseLinear::square(r, segments).expect("valid knots");
    let mut s1 = ShallowBuilder::new(d, d + 1);
    for i in 0..d {
        s1.add_linear(i, &unit(d, i), 0.0, 1.0);
        s1.add_pl(d, &unit(d, i), 0.0, &sq, 1.0);
    }

    // 1/(1+s) on [0, s_max] with knots clustered near 0 and a flat tail.
    let s_max = d as f64 * r * r;
    let knots: Vec<f64> = (0..=40).map(|k| s_max * (k as f64 / 40.0).powi(3)).collect();
    let mut recip = PiecewiseLinear::interpolate(|s| 1.0 / (1.0 + s), knots).expect("valid knots");
    recip.right_slope = 0.0;
    let mut s2 = ShallowBuilder::new(d + 1, d + 1);
    for i in 0..d {
        s2.add_linear(i, &unit(d + 1, i), 0.0, 1.0);
    }
    s2.add_pl(d, &unit(d + 1, d), 0.0, &recip, 1.0);

    let prod_sq = PiecewiseLinear::square(r + 1.0, (2.0 * (r + 1.0) / 0.25).ceil() as usize).expect("valid");
    let mut s3 = ShallowBuilder::new(d + 1, d);
    for i in 0..d {
        let mut plus = unit(d + 1, i);
        plus[d] = 1.0;
        let mut minus = unit(d + 1, i);
        minus[d] = -1.0;
        s3.add_pl(i, &plus, 0.0, &prod_sq, 0.25);
        s3.add_pl(i, &minus, 0.0, &prod_sq, -0.25);
    }

    let id = relu_identity(d + 1);
    let first = compose(&s2.build().expect("valid"), &s1.build().expect("valid"), &id).expect("widths");
    compose(&s3.build().expect("valid"), &first, &id).expect("widths")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_surrogates() {
        let x = [0.3, -1.7, 2.5, 0.1, -0.4];
        assert!((sum_net(5).realize_scalar(&x).unwrap() - 0.8).abs() < 1e-12);
        for d in 1..=5 {
            let got = max_net(d).realize_scalar(&x[..d]).unwrap();
            let want = x[..d].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!((got - want).abs() < 1e-12, "d = {d}");
        }
        assert_eq!(zero_net(3).realize(&x[..3]).unwrap(), vec![0.0; 3]);
        assert_eq!(sum_net(3).architecture().dims(), &[3, 6, 1]);
    }

    #[test]
    fn square_surrogate_accuracy() {
        let net = square_norm_net(3, 5.0);
        let x = [0.33, -2.71, 4.05];
        let want: f64 = x.iter().map(|v| v * v).sum();
        assert!((net.realize_scalar(&x).unwrap() - want).abs() <= 3.0 * (SQUARE_SPACING / 2.0).powi(2) + 1e-12);
    }

    #[test]
    fn bounded_drift_surrogate_is_close() {
        let p = problem("bounded-drift", 3, 1.0).unwrap();
        let net = p.drift_net.as_ref().unwrap();
        let mut exact = [0.0; 3];
        for x in [[0.0, 0.0, 0.0], [0.5, -0.2, 1.0], [2.0, 1.0, -3.0], [0.1, 0.1, 0.1]] {
            p.drift.eval(&x, &mut exact).unwrap();
            let got = net.realize(&x).unwrap();
            for (g, e) in got.iter().zip(&exact) {
                assert!((g - e).abs() < 0.05, "{x:?}: {got:?} vs {exact:?}");
            }
        }
    }

    #[test]
    fn all_names_resolve() {
        for name in PROBLEM_NAMES {
            let p = problem(name, 2, 1.0).unwrap();
            assert_eq!(p.name, name);
        }
        assert!(problem("nope", 2, 1.0).is_err());
    }
}
