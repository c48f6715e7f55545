//! Builders for one-hidden-layer ReLU networks made of carried linear terms and
//! continuous piecewise-linear functions of linear forms.

use crate::error::{invalid, Result};
use crate::network::{Activation, Layer, Matrix, NeuralNetwork};

/// Continuous piecewise-linear `g: R -> R` through `(knots[k], values[k])`,
/// extended linearly with `left_slope` below the first knot and `right_slope`
/// above the last one.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinear {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub left_slope: f64,
    pub right_slope: f64,
}

impl PiecewiseLinear {
    /// Interpolant of `f` at `knots`, extended with the end-segment slopes.
    pub fn interpolate(f: impl Fn(f64) -> f64, knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("interpolation needs at least two increasing knots"));
        }
        let values: Vec<f64> = knots.iter().map(|&t| f(t)).collect();
        let n = knots.len();
        let left_slope = (values[1] - values[0]) / (knots[1] - knots[0]);
        let right_slope = (values[n - 1] - values[n - 2]) / (knots[n - 1] - knots[n - 2]);
        Ok(Self { knots, values, left_slope, right_slope })
    }

    /// `t -> max(t, 0)`.
    pub fn relu() -> Self {
        Self { knots: vec![0.0], values: vec![0.0], left_slope: 0.0, right_slope: 1.0 }
    }

    /// Interpolant of `t²` on `[-r, r]` with `segments` equal pieces; the
    /// maximal error inside the range is `(r / segments)²`.
    pub fn square(r: f64, segments: usize) -> Result<Self> {
        let n = segments.max(1);
        let knots = (0..=n).map(|k| -r + 2.0 * r * k as f64 / n as f64).collect();
        Self::interpolate(|t| t * t, knots)
    }

    /// Slopes `s_{-1} = left, s_0, ..., s_{K-1}, s_K = right`.
    fn slopes(&self) -> Vec<f64> {
        let mut s = vec![self.left_slope];
        for k in 0..self.knots.len() - 1 {
            s.push((self.values[k + 1] - self.values[k]) / (self.knots[k + 1] - self.knots[k]));
        }
        s.push(self.right_slope);
        s
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = &self.knots;
        let n = k.len();
        if t <= k[0] {
            return self.values[0] + self.left_slope * (t - k[0]);
        }
        if t >= k[n - 1] {
            return self.values[n - 1] + self.right_slope * (t - k[n - 1]);
        }
        let i = k.partition_point(|&x| x <= t) - 1;
        let w = (t - k[i]) / (k[i + 1] - k[i]);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }
}

/// Accumulates hidden ReLU units and their output weights.
#[derive(Clone, Debug)]
pub struct ShallowBuilder {
    n_in: usize,
    n_out: usize,
    hidden_w: Vec<Vec<f64>>,
    hidden_b: Vec<f64>,
    /// `(output, hidden unit, weight)`
    out_terms: Vec<(usize, usize, f64)>,
    out_bias: Vec<f64>,
}

impl ShallowBuilder {
    pub fn new(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            hidden_w: Vec::new(),
            hidden_b: Vec::new(),
            out_terms: Vec::new(),
            out_bias: vec![0.0; n_out],
        }
    }

    fn unit(&mut self, w: Vec<f64>, b: f64) -> usize {
        self.hidden_w.push(w);
        self.hidden_b.push(b);
        self.hidden_w.len() - 1
    }

    /// Add `scale * (form · x + offset)` to output `j`, carried through the
    /// hidden layer as `relu(ℓ) - relu(-ℓ)`.
    pub fn add_linear(&mut self, j: usize, form: &[f64], offset: f64, scale: f64) -> &mut Self {
        assert_eq!(form.len(), self.n_in);
        let pos = self.unit(form.to_vec(), offset);
        let neg = self.unit(form.iter().map(|v| -v).collect(), -offset);
        self.out_terms.push((j, pos, scale));
        self.out_terms.push((j, neg, -scale));
        self
    }

    /// Add `scale * g(form · x + offset)` to output `j`.
    pub fn add_pl(&mut self, j: usize, form: &[f64], offset: f64, g: &PiecewiseLinear, scale: f64) -> &mut Self {
        assert_eq!(form.len(), self.n_in);
        let t0 = g.knots[0];
        // g(t) = g(t0) + s_left (t - t0) + Σ_k (s_k - s_{k-1}) relu(t - t_k)
        self.out_bias[j] += scale * (g.values[0] - g.left_slope * t0);
        if g.left_slope != 0.0 {
            self.add_linear(j, form, offset, scale * g.left_slope);
        }
        let slopes = g.slopes();
        for (k, &tk) in g.knots.iter().enumerate() {
            let jump = slopes[k + 1] - slopes[k];
            if jump != 0.0 {
                let u = self.unit(form.to_vec(), offset - tk);
                self.out_terms.push((j, u, scale * jump));
            }
        }
        self
    }

    pub fn add_constant(&mut self, j: usize, c: f64) -> &mut Self {
        self.out_bias[j] += c;
        self
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden_w.len()
    }

    pub fn build(&self) -> Result<NeuralNetwork> {
        let mut h = self.hidden_w.len();
        let mut w1 = self.hidden_w.concat();
        let mut b1 = self.hidden_b.clone();
        if h == 0 {
            // A constant map still needs one (dead) hidden unit.
            h = 1;
            w1 = vec![0.0; self.n_in];
            b1 = vec![0.0];
        }
        let mut w2 = Matrix::zeros(self.n_out, h);
        for &(j, u, w) in &self.out_terms {
            w2.set(j, u, w2.get(j, u) + w);
        }
        NeuralNetwork::new(
            vec![
                Layer::new(Matrix::from_row_major(h, self.n_in, w1)?, b1)?,
                Layer::new(w2, self.out_bias.clone())?,
            ],
            Activation::Relu,
        )
    }
}
