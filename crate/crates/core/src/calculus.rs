//! Weight-level network algebra: the ReLU identity, linear combinations,
//! composition through an identity network, and the residual (Euler) step.
//!
//! Every operation builds a new network whose realization is a known function
//! of its inputs' realizations and whose architecture is known in closed form.

use crate::error::{Error, Result};
use crate::network::{Activation, Architecture, Layer, Matrix, NeuralNetwork};

/// Two-layer ReLU network of architecture `(d, 2d, d)` realizing `x -> x`,
/// using `max(x, 0) - max(-x, 0) = x`.
pub fn relu_identity(d: usize) -> NeuralNetwork {
    assert!(d >= 1, "relu_identity needs d >= 1");
    let eye = Matrix::identity(d);
    let neg = eye.scaled(-1.0);
    let w1 = Matrix::vstack(&[&eye, &neg]).expect("equal widths");
    let w2 = Matrix::hstack(&[&eye, &neg]).expect("equal heights");
    let layers = vec![
        Layer::new(w1, vec![0.0; 2 * d]).expect("finite"),
        Layer::new(w2, vec![0.0; d]).expect("finite"),
    ];
    NeuralNetwork::new(layers, Activation::Relu).expect("valid chain")
}

/// Architecture of [`weighted_sum`] applied to `m` copies of `arch`.
pub fn weighted_sum_architecture(arch: &Architecture, m: usize) -> Architecture {
    let dims = arch.dims();
    let last = dims.len() - 1;
    Architecture(
        dims.iter()
            .enumerate()
            .map(|(i, &l)| if i == 0 || i == last { l } else { m * l })
            .collect(),
    )
}

/// Network realizing `x -> sum_m h_m R(nets[m])(x)`.
///
/// The first layers are stacked, the hidden layers placed block-diagonally and
/// the last layers concatenated with the weights folded in. All inputs must
/// share one architecture and activation.
pub fn weighted_sum(nets: &[NeuralNetwork], weights: &[f64]) -> Result<NeuralNetwork> {
    let first = nets
        .first()
        .ok_or_else(|| Error::InvalidArgument("weighted_sum of an empty list".into()))?;
    if nets.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{} networks but {} weights",
            nets.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|h| !h.is_finite()) {
        return Err(Error::NonFinite("weighted_sum coefficients".into()));
    }
    let arch = first.architecture();
    for (m, net) in nets.iter().enumerate() {
        if net.architecture() != arch {
            return Err(Error::Architecture(format!(
                "network {m} has architecture {} but network 0 has {arch}",
                net.architecture()
            )));
        }
        if net.activation() != first.activation() {
            return Err(Error::Architecture(format!("network {m} uses a different activation")));
        }
    }

    let depth = first.depth();
    let mut layers = Vec::with_capacity(depth);
    for n in 0..depth {
        let parts: Vec<&Layer> = nets.iter().map(|net| &net.layers()[n]).collect();
        let mats: Vec<&Matrix> = parts.iter().map(|l| l.weights()).collect();
        let layer = if n == depth - 1 {
            let scaled: Vec<Matrix> =
                mats.iter().zip(weights).map(|(w, &h)| w.scaled(h)).collect();
            let refs: Vec<&Matrix> = scaled.iter().collect();
            let out_dim = first.output_dim();
            let mut bias = vec![0.0; out_dim];
            for (l, &h) in parts.iter().zip(weights) {
                for (b, lb) in bias.iter_mut().zip(l.bias()) {
                    *b += h * lb;
                }
            }
            Layer::new(Matrix::hstack(&refs)?, bias)?
        } else {
            let w = if n == 0 { Matrix::vstack(&mats)? } else { Matrix::block_diag(&mats) };
            let bias = parts.iter().flat_map(|l| l.bias().iter().copied()).collect();
            Layer::new(w, bias)?
        };
        layers.push(layer);
    }
    NeuralNetwork::new(layers, first.activation())
}

/// Check that `id_net` is a two-layer network on `R^d` whose realization is the
/// identity on a fixed set of probe points.
pub fn check_identity_net(id_net: &NeuralNetwork, d: usize) -> Result<()> {
    if id_net.depth() != 2 || id_net.input_dim() != d || id_net.output_dim() != d {
        return Err(Error::Architecture(format!(
            "identity network must have architecture (d, i, d) with d = {d}, got {}",
            id_net.architecture()
        )));
    }
    for x in identity_probes(d) {
        let y = id_net.realize(&x)?;
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if err > 1e-9 * scale {
            return Err(Error::Architecture(format!(
                "identity network deviates from x -> x by {err:.3e}"
            )));
        }
    }
    Ok(())
}

fn identity_probes(d: usize) -> Vec<Vec<f64>> {
    let mut probes = vec![vec![0.0; d], vec![1.0; d], vec![-1.0; d]];
    for k in 1..=4 {
        probes.push((0..d).map(|i| 10.0 * ((k * 7 + i * 13) as f64 * 0.618).sin()).collect());
    }
    probes
}

fn same_activation(nets: &[&NeuralNetwork]) -> Result<Activation> {
    let a = nets[0].activation();
    if nets.iter().any(|n| n.activation() != a) {
        return Err(Error::Architecture("networks use different activations".into()));
    }
    Ok(a)
}

/// Network realizing `R(outer) ∘ R(inner)`, glued through the identity
/// network `id_net` so that parameter counts add rather than multiply.
///
/// Architecture: `(l_{2,0}, ..., l_{2,L2-1}, i, l_{1,1}, ..., l_{1,L1})` where
/// `i` is the hidden width of `id_net`.
pub fn compose(
    outer: &NeuralNetwork,
    inner: &NeuralNetwork,
    id_net: &NeuralNetwork,
) -> Result<NeuralNetwork> {
    let d2 = inner.output_dim();
    if outer.input_dim() != d2 {
        return Err(Error::Shape(format!(
            "inner network outputs R^{d2} but outer expects R^{}",
            outer.input_dim()
        )));
    }
    check_identity_net(id_net, d2)?;
    let activation = same_activation(&[outer, inner, id_net])?;

    let inner_layers = inner.layers();
    let outer_layers = outer.layers();
    let (id1, id2) = (&id_net.layers()[0], &id_net.layers()[1]);
    let inner_last = &inner_layers[inner_layers.len() - 1];
    let outer_first = &outer_layers[0];

    let mut layers: Vec<Layer> = inner_layers[..inner_layers.len() - 1].to_vec();
    // (W31 W2L, W31 B2L + B31)
    layers.push(Layer::new(
        id1.weights().matmul(inner_last.weights())?,
        affine(id1.weights(), inner_last.bias(), id1.bias()),
    )?);
    // (W11 W32, W11 B32 + B11)
    layers.push(Layer::new(
        outer_first.weights().matmul(id2.weights())?,
        affine(outer_first.weights(), id2.bias(), outer_first.bias()),
    )?);
    layers.extend_from_slice(&outer_layers[1..]);
    NeuralNetwork::new(layers, activation)
}

/// Network realizing `x -> R(accum)(x) + R(increment)(R(accum)(x))`: one
/// explicit Euler step applied on top of `accum`.
///
/// The identity network carries `R(accum)(x)` alongside the hidden layers of
/// `increment`. Requires the last hidden width of `accum` to be at most the
/// last hidden width of `increment` plus the hidden width of `id_net`.
pub fn residual_step(
    accum: &NeuralNetwork,
    increment: &NeuralNetwork,
    id_net: &NeuralNetwork,
) -> Result<NeuralNetwork> {
    let d = accum.output_dim();
    if accum.input_dim() != d || increment.input_dim() != d || increment.output_dim() != d {
        return Err(Error::Shape(format!(
            "residual step needs maps R^d -> R^d, got {} and {}",
            accum.architecture(),
            increment.architecture()
        )));
    }
    check_identity_net(id_net, d)?;
    let activation = same_activation(&[accum, increment, id_net])?;

    let a_arch = accum.architecture();
    let i_arch = increment.architecture();
    let width_id = id_net.architecture().dims()[1];
    let l1_last_hidden = a_arch.dims()[a_arch.dims().len() - 2];
    let l2_last_hidden = i_arch.dims()[i_arch.dims().len() - 2];
    if l1_last_hidden > l2_last_hidden + width_id {
        return Err(Error::Architecture(format!(
            "last hidden width {l1_last_hidden} of the accumulated network exceeds \
             {l2_last_hidden} + {width_id}"
        )));
    }

    let acc = accum.layers();
    let inc = increment.layers();
    let (id1, id2) = (&id_net.layers()[0], &id_net.layers()[1]);
    let acc_last = &acc[acc.len() - 1];
    let l2 = inc.len();

    let mut layers: Vec<Layer> = acc[..acc.len() - 1].to_vec();

    // Feed R(accum)(x) both into the increment and into the identity carrier.
    let top = inc[0].weights().matmul(acc_last.weights())?;
    let bottom = id1.weights().matmul(acc_last.weights())?;
    let mut bias = affine(inc[0].weights(), acc_last.bias(), inc[0].bias());
    bias.extend(affine(id1.weights(), acc_last.bias(), id1.bias()));
    layers.push(Layer::new(Matrix::vstack(&[&top, &bottom])?, bias)?);

    // Hidden layers of the increment run next to the carried identity units.
    let carry = id1.weights().matmul(id2.weights())?;
    let carry_bias = affine(id1.weights(), id2.bias(), id1.bias());
    for layer in &inc[1..l2 - 1] {
        let w = Matrix::block_diag(&[layer.weights(), &carry]);
        let mut b = layer.bias().to_vec();
        b.extend_from_slice(&carry_bias);
        layers.push(Layer::new(w, b)?);
    }

    let inc_last = &inc[l2 - 1];
    let w = Matrix::hstack(&[inc_last.weights(), id2.weights()])?;
    let b = inc_last.bias().iter().zip(id2.bias()).map(|(a, c)| a + c).collect();
    layers.push(Layer::new(w, b)?);
    NeuralNetwork::new(layers, activation)
}

/// `w * x + b`.
fn affine(w: &Matrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = w.matvec(x);
    for (o, bi) in out.iter_mut().zip(b) {
        *o += bi;
    }
    out
}
