//! Dense feed-forward networks with batched forward/backward passes.
//! Shared by the grade autoencoder and the GAN.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output `y = f(x)`.
    #[inline]
    pub fn derivative_at_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// One affine layer followed by an elementwise activation.
/// `weight` has shape `(out, in)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn glorot(input: usize, output: usize, activation: Activation, rng: &mut Rng) -> Self {
        let r = (6.0 / (input + output) as f64).sqrt();
        let weight = Array2::from_shape_simple_fn((output, input), || rng.random_range(-r..=r));
        Dense {
            weight,
            bias: Array1::zeros(output),
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn forward_one(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let mut z = self.weight.dot(&x) + &self.bias;
        z.mapv_inplace(|v| self.activation.apply(v));
        z
    }

    /// Rows of `x` are samples.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weight.t());
        z += &self.bias;
        z.mapv_inplace(|v| self.activation.apply(v));
        z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Gradients mirroring an [`Mlp`]'s layers.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Mlp {
    pub fn new(dims: &[usize], activations: &[Activation], rng: &mut Rng) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::Config(format!(
                "network needs at least two layer sizes and one activation per layer (dims {dims:?})"
            )));
        }
        if dims.contains(&0) {
            return Err(Error::Config(format!("zero-width layer in {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| Dense::glorot(w[0], w[1], act, rng))
            .collect();
        Ok(Mlp { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(Dense::output_dim).unwrap_or(0)
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(Dense::output_dim));
        d
    }

    pub fn forward_one(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let mut h = x.to_owned();
        for layer in &self.layers {
            h = layer.forward_one(h.view());
        }
        h
    }

    /// Returns the output of every layer, in order.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut outs: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let next = match outs.last() {
                Some(prev) => layer.forward_batch(prev.view()),
                None => layer.forward_batch(x),
            };
            outs.push(next);
        }
        outs
    }

    /// Backpropagates `d_out` (gradient w.r.t. the final layer output) through
    /// the activations recorded by [`Mlp::forward_batch`]. Returns parameter
    /// gradients and the gradient w.r.t. the input batch.
    pub fn backward_batch(
        &self,
        x: ArrayView2<f64>,
        outs: &[Array2<f64>],
        d_out: Array2<f64>,
    ) -> (MlpGrads, Array2<f64>) {
        let n = self.layers.len();
        let mut weights = vec![Array2::zeros((0, 0)); n];
        let mut biases = vec![Array1::zeros(0); n];
        let mut delta = d_out;
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let act = layer.activation;
            if act != Activation::Identity {
                delta.zip_mut_with(&outs[l], |d, &y| *d *= act.derivative_at_output(y));
            }
            let input = if l == 0 { x } else { outs[l - 1].view() };
            weights[l] = delta.t().dot(&input);
            biases[l] = delta.sum_axis(Axis(0));
            delta = delta.dot(&layer.weight);
        }
        (MlpGrads { weights, biases }, delta)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            v.extend(l.weight.iter());
            v.extend(l.bias.iter());
        }
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            l.weight.iter_mut().for_each(|w| *w = it.next().unwrap());
            l.bias.iter_mut().for_each(|b| *b = it.next().unwrap());
        }
    }
}

impl MlpGrads {
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            v.extend(w.iter());
            v.extend(b.iter());
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::array;

    fn loss(net: &Mlp, x: &Array2<f64>, y: &Array2<f64>) -> f64 {
        let out = net.forward_batch(x.view());
        let diff = out.last().unwrap() - y;
        0.5 * diff.mapv(|v| v * v).sum()
    }

    #[test]
    fn backward_matches_central_differences() {
        let mut r = rng::rng(11);
        let net = Mlp::new(
            &[3, 5, 2],
            &[Activation::Tanh, Activation::Sigmoid],
            &mut r,
        )
        .unwrap();
        let x = array![[0.1, -0.4, 0.7], [0.3, 0.2, -0.9], [1.0, 0.0, 0.5]];
        let y = array![[0.2, 0.9], [0.5, 0.1], [0.7, 0.3]];
        let outs = net.forward_batch(x.view());
        let d_out = outs.last().unwrap() - &y;
        let (g, _) = net.backward_batch(x.view(), &outs, d_out);
        let analytic = g.flat();
        let base = net.flat();
        let h = 1e-6;
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] += h;
            let mut plus = net.clone();
            plus.set_flat(&p);
            p[i] -= 2.0 * h;
            let mut minus = net.clone();
            minus.set_flat(&p);
            let fd = (loss(&plus, &x, &y) - loss(&minus, &x, &y)) / (2.0 * h);
            assert!((fd - analytic[i]).abs() < 1e-7, "param {i}: {fd} vs {}", analytic[i]);
        }
    }

    #[test]
    fn forward_one_agrees_with_batch() {
        let mut r = rng::rng(3);
        let net = Mlp::new(&[4, 6, 3], &[Activation::Sigmoid, Activation::Identity], &mut r).unwrap();
        let x = array![[0.5, -1.0, 2.0, 0.0]];
        let batch = net.forward_batch(x.view());
        let one = net.forward_one(x.row(0));
        for (a, b) in batch.last().unwrap().row(0).iter().zip(one.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_dims() {
        let mut r = rng::rng(0);
        assert!(Mlp::new(&[3], &[], &mut r).is_err());
        assert!(Mlp::new(&[3, 0, 2], &[Activation::Sigmoid; 2], &mut r).is_err());
    }
}
