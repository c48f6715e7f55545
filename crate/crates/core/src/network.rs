//! Fully connected feedforward networks stored as explicit weight/bias tuples.
//!
//! A network is a sequence of affine layers `(W_1, B_1), ..., (W_L, B_L)` with
//! `L >= 2`. Its realization applies the activation componentwise after every
//! layer except the last one, which stays affine.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| s * v).collect() }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `out = self * x`.
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols.max(1))) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        out
    }

    /// Stack matrices with equal column counts on top of each other.
    pub fn vstack(parts: &[&Matrix]) -> Result<Matrix> {
        let cols = parts.first().map_or(0, |m| m.cols);
        if parts.iter().any(|m| m.cols != cols) {
            return Err(Error::Shape("vstack needs equal column counts".into()));
        }
        let rows = parts.iter().map(|m| m.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for m in parts {
            data.extend_from_slice(&m.data);
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Place matrices with equal row counts side by side.
    pub fn hstack(parts: &[&Matrix]) -> Result<Matrix> {
        let rows = parts.first().map_or(0, |m| m.rows);
        if parts.iter().any(|m| m.rows != rows) {
            return Err(Error::Shape("hstack needs equal row counts".into()));
        }
        let cols = parts.iter().map(|m| m.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for m in parts {
                data.extend_from_slice(m.row(i));
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Block-diagonal matrix `diag(parts...)`.
    pub fn block_diag(parts: &[&Matrix]) -> Matrix {
        let rows = parts.iter().map(|m| m.rows).sum();
        let cols = parts.iter().map(|m| m.cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for m in parts {
            for i in 0..m.rows {
                let dst = (r0 + i) * cols + c0;
                out.data[dst..dst + m.cols].copy_from_slice(m.row(i));
            }
            r0 += m.rows;
            c0 += m.cols;
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Componentwise activation applied after every hidden layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Generic(GenericActivation),
}

/// Non-ReLU activations. The calculus operations accept any of these; only the
/// end-to-end constructor insists on ReLU.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GenericActivation {
    Tanh,
    Softplus,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Activation::Relu => t.max(0.0),
            Activation::Generic(GenericActivation::Tanh) => t.tanh(),
            Activation::Generic(GenericActivation::Softplus) => {
                if t > 30.0 {
                    t
                } else {
                    t.exp().ln_1p()
                }
            }
            Activation::Generic(GenericActivation::Sigmoid) => 1.0 / (1.0 + (-t).exp()),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Generic(GenericActivation::Tanh) => "tanh",
            Activation::Generic(GenericActivation::Softplus) => "softplus",
            Activation::Generic(GenericActivation::Sigmoid) => "sigmoid",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        Ok(match tag {
            "relu" => Activation::Relu,
            "tanh" => Activation::Generic(GenericActivation::Tanh),
            "softplus" => Activation::Generic(GenericActivation::Softplus),
            "sigmoid" => Activation::Generic(GenericActivation::Sigmoid),
            other => return Err(Error::Format(format!("unknown activation {other:?}"))),
        })
    }
}

/// One affine layer `x -> W x + B`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    weights: Matrix,
    bias: Vec<f64>,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if weights.rows() != bias.len() {
            return Err(Error::Shape(format!(
                "bias of length {} for a layer with {} rows",
                bias.len(),
                weights.rows()
            )));
        }
        if weights.rows() == 0 || weights.cols() == 0 {
            return Err(Error::Shape("layers need positive widths".into()));
        }
        if !weights.is_finite() || bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("layer parameters".into()));
        }
        Ok(Self { weights, bias })
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    fn apply_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.resize(self.out_dim(), 0.0);
        self.weights.matvec_into(x, out);
        for (o, b) in out.iter_mut().zip(&self.bias) {
            *o += b;
        }
    }
}

/// The layer widths `(l_0, l_1, ..., l_L)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Architecture(pub Vec<usize>);

impl Architecture {
    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    /// Number of affine layers `L`.
    pub fn depth(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// `sum_n l_n (l_{n-1} + 1)`.
    pub fn param_count(&self) -> u64 {
        self.0.windows(2).map(|w| w[1] as u64 * (w[0] as u64 + 1)).sum()
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

/// A network `((W_1, B_1), ..., (W_L, B_L))` together with its activation.
///
/// Networks are immutable once built; every transformation returns a new value.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralNetwork {
    layers: Vec<Layer>,
    activation: Activation,
}

impl NeuralNetwork {
    pub fn new(layers: Vec<Layer>, activation: Activation) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::Architecture(format!(
                "networks need at least two affine layers, got {}",
                layers.len()
            )));
        }
        for (n, pair) in layers.windows(2).enumerate() {
            if pair[1].in_dim() != pair[0].out_dim() {
                return Err(Error::Shape(format!(
                    "layer {} outputs {} values but layer {} expects {}",
                    n + 1,
                    pair[0].out_dim(),
                    n + 2,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self { layers, activation })
    }

    /// Build from `(weight rows, bias)` pairs.
    pub fn from_parts(parts: Vec<(Vec<Vec<f64>>, Vec<f64>)>, activation: Activation) -> Result<Self> {
        let layers = parts
            .into_iter()
            .map(|(w, b)| Layer::new(Matrix::from_rows(&w)?, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers, activation)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn architecture(&self) -> Architecture {
        let mut dims = Vec::with_capacity(self.layers.len() + 1);
        dims.push(self.input_dim());
        dims.extend(self.layers.iter().map(Layer::out_dim));
        Architecture(dims)
    }

    pub fn param_count(&self) -> u64 {
        self.layers
            .iter()
            .map(|l| l.out_dim() as u64 * (l.in_dim() as u64 + 1))
            .sum()
    }

    /// Evaluate the realization at `x`.
    pub fn realize(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut cur = Vec::new();
        let mut next = Vec::new();
        self.realize_with(x, &mut cur, &mut next)?;
        Ok(cur)
    }

    /// Evaluate into caller-owned scratch buffers; the result ends up in `cur`.
    pub fn realize_with(&self, x: &[f64], cur: &mut Vec<f64>, next: &mut Vec<f64>) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input of dimension {} for a network on R^{}",
                x.len(),
                self.input_dim()
            )));
        }
        cur.clear();
        cur.extend_from_slice(x);
        let last = self.layers.len() - 1;
        for (n, layer) in self.layers.iter().enumerate() {
            layer.apply_into(cur, next);
            if n < last {
                for v in next.iter_mut() {
                    *v = self.activation.apply(*v);
                }
            }
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("layer {} of the realization", n + 1)));
            }
            std::mem::swap(cur, next);
        }
        Ok(())
    }

    /// Realization with the biases of some layers replaced: `overrides` lists
    /// `(layer index, bias)` pairs in increasing layer order.
    pub fn realize_overriding_biases(
        &self,
        x: &[f64],
        overrides: &[(usize, &[f64])],
        cur: &mut Vec<f64>,
        next: &mut Vec<f64>,
    ) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input of dimension {} for a network on R^{}",
                x.len(),
                self.input_dim()
            )));
        }
        cur.clear();
        cur.extend_from_slice(x);
        let last = self.layers.len() - 1;
        let mut pending = overrides.iter().peekable();
        for (n, layer) in self.layers.iter().enumerate() {
            next.resize(layer.out_dim(), 0.0);
            layer.weights.matvec_into(cur, next);
            let bias = match pending.peek() {
                Some((i, b)) if *i == n => {
                    pending.next();
                    *b
                }
                _ => &layer.bias[..],
            };
            for (o, b) in next.iter_mut().zip(bias) {
                *o += b;
            }
            if n < last {
                for v in next.iter_mut() {
                    *v = self.activation.apply(*v);
                }
            }
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("layer {} of the realization", n + 1)));
            }
            std::mem::swap(cur, next);
        }
        Ok(())
    }

    /// Copy of the network with the biases of the listed layers replaced.
    pub fn with_biases(&self, overrides: &[(usize, Vec<f64>)]) -> Result<Self> {
        let mut layers = self.layers.clone();
        for (i, b) in overrides {
            let layer = layers
                .get(*i)
                .ok_or_else(|| Error::Shape(format!("no layer {i}")))?;
            layers[*i] = Layer::new(layer.weights.clone(), b.clone())?;
        }
        Self::new(layers, self.activation)
    }

    pub(crate) fn to_wire_value(&self) -> serde_json::Value {
        serde_json::to_value(WireNetwork::from(self)).expect("plain data")
    }

    pub(crate) fn from_wire_value(v: serde_json::Value) -> Result<Self> {
        serde_json::from_value::<WireNetwork>(v)?.try_into()
    }

    /// Scalar realization for networks with one output.
    pub fn realize_scalar(&self, x: &[f64]) -> Result<f64> {
        if self.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "scalar evaluation of a network with {} outputs",
                self.output_dim()
            )));
        }
        Ok(self.realize(x)?[0])
    }

    /// Network realizing `x -> s * R(x) + b`, obtained by rescaling the final
    /// affine layer. The architecture is unchanged.
    pub fn scale_shift_output(&self, s: f64, b: &[f64]) -> Result<Self> {
        if b.len() != self.output_dim() {
            return Err(Error::Shape(format!(
                "shift of length {} for {} outputs",
                b.len(),
                self.output_dim()
            )));
        }
        let mut layers = self.layers.clone();
        let last = layers.pop().expect("at least two layers");
        let bias = last.bias.iter().zip(b).map(|(bl, bi)| s * bl + bi).collect();
        layers.push(Layer::new(last.weights.scaled(s), bias)?);
        Self::new(layers, self.activation)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&WireNetwork::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<WireNetwork>(text)?.try_into()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &WireNetwork::from(self))?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        serde_json::from_reader::<_, WireNetwork>(r)?.try_into()
    }
}

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct WireLayer {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WireNetwork {
    version: u32,
    activation: String,
    layers: Vec<WireLayer>,
}

impl From<&NeuralNetwork> for WireNetwork {
    fn from(net: &NeuralNetwork) -> Self {
        WireNetwork {
            version: FORMAT_VERSION,
            activation: net.activation.tag().to_string(),
            layers: net
                .layers
                .iter()
                .map(|l| WireLayer {
                    rows: l.out_dim(),
                    cols: l.in_dim(),
                    weights: l.weights.as_slice().to_vec(),
                    bias: l.bias.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<WireNetwork> for NeuralNetwork {
    type Error = Error;

    fn try_from(wire: WireNetwork) -> Result<Self> {
        if wire.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", wire.version)));
        }
        let activation = Activation::from_tag(&wire.activation)?;
        let layers = wire
            .layers
            .into_iter()
            .map(|l| Layer::new(Matrix::from_row_major(l.rows, l.cols, l.weights)?, l.bias))
            .collect::<Result<Vec<_>>>()?;
        NeuralNetwork::new(layers, activation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(dims: &[usize], fill: f64) -> NeuralNetwork {
        let layers = dims
            .windows(2)
            .map(|w| {
                Layer::new(
                    Matrix::from_row_major(w[1], w[0], vec![fill; w[0] * w[1]]).unwrap(),
                    vec![0.0; w[1]],
                )
                .unwrap()
            })
            .collect();
        NeuralNetwork::new(layers, Activation::Relu).unwrap()
    }

    #[test]
    fn hand_evaluated_single_hidden_layer() {
        let net = NeuralNetwork::from_parts(
            vec![(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]), (vec![vec![-1.0, 1.0]], vec![0.0])],
            Activation::Relu,
        )
        .unwrap();
        assert_eq!(net.realize(&[5.0]).unwrap(), vec![-5.0]);
    }

    #[test]
    fn wrong_input_dimension_is_a_shape_error() {
        let net = chain(&[2, 3, 1], 1.0);
        assert!(matches!(net.realize(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn param_counts_follow_the_width_formula() {
        assert_eq!(chain(&[1, 1, 1], 1.0).param_count(), 4);
        assert_eq!(chain(&[2, 3, 1], 1.0).param_count(), 13);
        assert_eq!(Architecture(vec![2, 3, 1]).param_count(), 13);
        assert_eq!(chain(&[2, 3, 1], 1.0).architecture(), Architecture(vec![2, 3, 1]));
    }

    #[test]
    fn single_layer_networks_are_rejected() {
        let layer = Layer::new(Matrix::identity(1), vec![0.0]).unwrap();
        assert!(matches!(
            NeuralNetwork::new(vec![layer], Activation::Relu),
            Err(Error::Architecture(_))
        ));
    }

    #[test]
    fn broken_shape_chain_is_rejected() {
        let a = Layer::new(Matrix::zeros(3, 2), vec![0.0; 3]).unwrap();
        let b = Layer::new(Matrix::zeros(1, 2), vec![0.0]).unwrap();
        assert!(matches!(NeuralNetwork::new(vec![a, b], Activation::Relu), Err(Error::Shape(_))));
    }

    #[test]
    fn non_finite_parameters_are_rejected() {
        assert!(matches!(
            Layer::new(Matrix::identity(1), vec![f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn non_finite_intermediate_is_a_numeric_error() {
        let net = chain(&[1, 1, 1], 1e200);
        assert!(matches!(net.realize(&[1e200]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn scale_shift_folds_into_last_layer() {
        let net = chain(&[2, 3, 2], 0.5);
        let x = [1.0, 2.0];
        let base = net.realize(&x).unwrap();
        let same = net.scale_shift_output(1.0, &[0.0, 0.0]).unwrap();
        assert_eq!(same.realize(&x).unwrap(), base);
        let constant = net.scale_shift_output(0.0, &[3.0, -1.0]).unwrap();
        assert_eq!(constant.realize(&x).unwrap(), vec![3.0, -1.0]);
        assert_eq!(constant.architecture(), net.architecture());
        assert!(matches!(net.scale_shift_output(1.0, &[0.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn json_layout_matches_the_wire_format() {
        let net = chain(&[1, 2, 1], 0.25);
        let text = net.to_json().unwrap();
        assert!(text.starts_with(r#"{"version":1,"activation":"relu","layers":[{"rows":2,"cols":1,"weights":[0.25,0.25],"bias":[0.0,0.0]}"#));
        assert_eq!(NeuralNetwork::from_json(&text).unwrap(), net);
    }

    #[test]
    fn deserialization_validates_shapes_and_values() {
        let bad_chain = r#"{"version":1,"activation":"relu","layers":[
            {"rows":2,"cols":1,"weights":[1,1],"bias":[0,0]},
            {"rows":1,"cols":3,"weights":[1,1,1],"bias":[0]}]}"#;
        assert!(NeuralNetwork::from_json(bad_chain).is_err());
        let bad_len = r#"{"version":1,"activation":"relu","layers":[
            {"rows":2,"cols":1,"weights":[1],"bias":[0,0]},
            {"rows":1,"cols":2,"weights":[1,1],"bias":[0]}]}"#;
        assert!(NeuralNetwork::from_json(bad_len).is_err());
        let nan = r#"{"version":1,"activation":"relu","layers":[
            {"rows":1,"cols":1,"weights":[null],"bias":[0]},
            {"rows":1,"cols":1,"weights":[1],"bias":[0]}]}"#;
        assert!(NeuralNetwork::from_json(nan).is_err());
        let version = r#"{"version":2,"activation":"relu","layers":[]}"#;
        assert!(matches!(NeuralNetwork::from_json(version), Err(Error::Format(_))));
    }

    #[test]
    fn matrix_helpers() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Matrix::identity(2);
        assert_eq!(a.matmul(&b).unwrap(), a);
        assert_eq!(a.transpose().get(0, 1), 3.0);
        let bd = Matrix::block_diag(&[&a, &b]);
        assert_eq!((bd.rows(), bd.cols()), (4, 4));
        assert_eq!(bd.get(2, 2), 1.0);
        assert_eq!(bd.get(0, 2), 0.0);
        let h = Matrix::hstack(&[&a, &b]).unwrap();
        assert_eq!(h.row(1), &[3.0, 4.0, 0.0, 1.0]);
        let v = Matrix::vstack(&[&a, &b]).unwrap();
        assert_eq!(v.row(3), &[0.0, 1.0]);
    }
}
