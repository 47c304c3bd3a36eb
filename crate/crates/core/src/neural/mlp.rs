//! Fully connected networks with manual backpropagation.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
        }
    }

    /// Multiplies `grad` in place by the derivative, written in terms of the
    /// activation output `a`.
    fn backprop(self, a: &Array2<f64>, grad: &mut Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => Zip::from(grad).and(a).for_each(|g, &y| {
                if y <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Tanh => Zip::from(grad).and(a).for_each(|g, &y| *g *= 1.0 - y * y),
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Tanh),
            _ => None,
        }
    }
}

/// `y = act(x W + b)` with `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
    /// Inverted dropout applied to this layer's output in training mode.
    pub dropout: f64,
}

impl Dense {
    /// He-uniform weights for ReLU layers, Xavier-uniform otherwise; zero
    /// biases.
    pub fn init(fan_in: usize, fan_out: usize, activation: Activation, dropout: f64, rng: &mut ChaCha8Rng) -> Self {
        let limit = match activation {
            Activation::Relu => (6.0 / fan_in as f64).sqrt(),
            _ => (6.0 / (fan_in + fan_out) as f64).sqrt(),
        };
        let weights = Array2::from_shape_simple_fn((fan_in, fan_out), || rng.gen_range(-limit..=limit));
        Self {
            weights,
            bias: Array1::zeros(fan_out),
            activation,
            dropout,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Intermediate values kept by a training-mode forward pass.
#[derive(Debug)]
pub struct MlpCache {
    /// `inputs[i]` is the input of layer `i`; the last entry is the output.
    activations: Vec<Array2<f64>>,
    /// Post-activation outputs before dropout, needed for derivatives.
    pre_dropout: Vec<Array2<f64>>,
    masks: Vec<Option<Array2<f64>>>,
}

impl MlpCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("at least the input")
    }

    pub fn layer_output(&self, layer: usize) -> &Array2<f64> {
        &self.activations[layer + 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// `widths[0]` is the input dimension; one layer per following entry.
    pub fn new(widths: &[usize], hidden: Activation, output: Activation, dropout: f64, rng: &mut ChaCha8Rng) -> Self {
        let n = widths.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let last = i + 1 == n;
                let act = if last { output } else { hidden };
                Dense::init(widths[i], widths[i + 1], act, if last { 0.0 } else { dropout }, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").output_dim()
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim()];
        w.extend(self.layers.iter().map(Dense::output_dim));
        w
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Geometry(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite network input".into()));
        }
        Ok(())
    }

    /// Inference pass (dropout disabled) through the first `n_layers` layers.
    pub fn forward_partial(&self, x: ArrayView2<f64>, n_layers: usize) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let mut a = x.to_owned();
        for layer in &self.layers[..n_layers] {
            let mut z = a.dot(&layer.weights);
            z += &layer.bias;
            layer.activation.apply(&mut z);
            a = z;
        }
        Ok(a)
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.forward_partial(x, self.layers.len())
    }

    /// Training pass. With `rng = None` dropout is skipped, which makes the
    /// result identical to [`Self::forward`].
    pub fn forward_train(&self, x: ArrayView2<f64>, mut rng: Option<&mut ChaCha8Rng>) -> Result<MlpCache> {
        self.check_input(&x)?;
        let mut activations = vec![x.to_owned()];
        let mut pre_dropout = Vec::with_capacity(self.layers.len());
        let mut masks = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let prev = activations.last().expect("input pushed");
            let mut z = prev.dot(&layer.weights);
            z += &layer.bias;
            layer.activation.apply(&mut z);
            let mask = match rng.as_deref_mut() {
                Some(r) if layer.dropout > 0.0 => {
                    let keep = 1.0 - layer.dropout;
                    Some(z.mapv(|_| if r.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }))
                }
                _ => None,
            };
            let out = match &mask {
                Some(m) => &z * m,
                None => z.clone(),
            };
            pre_dropout.push(z);
            masks.push(mask);
            activations.push(out);
        }
        Ok(MlpCache {
            activations,
            pre_dropout,
            masks,
        })
    }

    /// Gradients of the loss for every layer given `d_out = dL/d(output)`.
    /// When `d_out_is_preactivation` is set, `d_out` is already taken with
    /// respect to the last layer's pre-activation (softmax cross-entropy).
    pub fn backward(&self, cache: &MlpCache, d_out: Array2<f64>, d_out_is_preactivation: bool) -> Vec<DenseGrad> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = d_out;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let last = i + 1 == self.layers.len();
            if !(last && d_out_is_preactivation) {
                if let Some(m) = &cache.masks[i] {
                    delta *= m;
                }
                layer.activation.backprop(&cache.pre_dropout[i], &mut delta);
            }
            let input = &cache.activations[i];
            let gw = input.t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            if i > 0 {
                delta = delta.dot(&layer.weights.t());
            }
            grads.push(DenseGrad { weights: gw, bias: gb });
        }
        grads.reverse();
        grads
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Mutable parameter slices in declaration order (W then b per layer).
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weights.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weights.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }
}

pub fn grad_slices(grads: &[DenseGrad]) -> Vec<&[f64]> {
    grads
        .iter()
        .flat_map(|g| {
            [
                g.weights.as_slice().expect("standard layout"),
                g.bias.as_slice().expect("standard layout"),
            ]
        })
        .collect()
}

/// Mean squared error over every element and its gradient.
pub fn mse_loss(output: &Array2<f64>, target: ArrayView2<f64>) -> (f64, Array2<f64>) {
    let diff = output - &target;
    let n = diff.len().max(1) as f64;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    (loss, diff * (2.0 / n))
}

/// Row-wise softmax.
pub fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let s = row.sum();
        row /= s;
    }
    p
}

/// Mean softmax cross-entropy and its gradient with respect to the logits.
pub fn softmax_cross_entropy(logits: &Array2<f64>, targets: &[usize]) -> (f64, Array2<f64>) {
    let mut p = softmax(logits);
    let n = targets.len().max(1) as f64;
    let mut loss = 0.0;
    for (mut row, &t) in p.rows_mut().into_iter().zip(targets) {
        loss -= row[t].max(1e-300).ln();
        row[t] -= 1.0;
        row /= n;
    }
    (loss / n, p)
}
