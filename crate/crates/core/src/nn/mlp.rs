//! Dense feedforward networks with hand-written backpropagation.
//!
//! Weights are stored as `(out, in)` matrices. Batched calls take one sample
//! per row, so a layer computes `Z = X Wᵀ + b` followed by its activation.

use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    /// Logistic squashing to `(0, 1)`.
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Sigmoid => 1,
            Activation::Identity => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Sigmoid),
            2 => Some(Activation::Identity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }
}

/// Parameters of a multilayer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Per-layer parameter gradients, shaped like the network they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Activations recorded by [`Mlp::forward_batch`] for a later backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `outputs[0]` is the network input; `outputs[l + 1]` is layer `l`'s output.
    outputs: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.outputs.last().expect("cache holds at least the input")
    }

    pub fn into_output(mut self) -> Array2<f64> {
        self.outputs.pop().expect("cache holds at least the input")
    }
}

/// Which part of `∂loss/∂input` a backward pass should produce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputGradient {
    Skip,
    Full,
    /// Only the given input columns; the returned matrix has `range.len()` columns.
    Columns(Range<usize>),
}

impl Mlp {
    /// Builds a network `sizes[0] -> sizes[1] -> ... -> sizes[last]`.
    ///
    /// Hidden layers use `hidden`, the final layer uses `output`. Weights are
    /// drawn uniformly from `±1/√fan_in`, biases start at zero.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(config_err("an MLP needs at least an input and an output size"));
        }
        if sizes.contains(&0) {
            return Err(config_err(format!("layer sizes must be positive, got {sizes:?}")));
        }
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let weight =
                    Array2::from_shape_simple_fn((fan_out, fan_in), || rng.random_range(-bound..=bound));
                Layer {
                    weight,
                    bias: Array1::zeros(fan_out),
                    activation: if i == last { output } else { hidden },
                }
            })
            .collect();
        Ok(Mlp { layers })
    }

    /// Assembles a network from explicit layers, checking that shapes chain
    /// and that every entry is finite.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(config_err("an MLP needs at least one layer"));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.out_dim() {
                return Err(config_err(format!(
                    "layer {i}: bias length {} does not match {} output rows",
                    layer.bias.len(),
                    layer.out_dim()
                )));
            }
            if layer.in_dim() == 0 || layer.out_dim() == 0 {
                return Err(config_err(format!("layer {i} has an empty dimension")));
            }
            if !layer.weight.iter().chain(layer.bias.iter()).all(|v| v.is_finite()) {
                return Err(config_err(format!("layer {i} contains non-finite parameters")));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(config_err(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Iterates over all parameters, layer by layer, weights (row-major) before biases.
    pub fn parameters(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied())
    }

    /// Mutable parameters in the order of [`Mlp::parameters`].
    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weight.dim() == b.weight.dim())
    }

    /// Evaluates the network on a single input vector.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(config_err(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        let mut current = Array1::from(input.to_vec());
        for layer in &self.layers {
            let mut z = layer.weight.dot(&current);
            z += &layer.bias;
            z.mapv_inplace(|v| layer.activation.apply(v));
            current = z;
        }
        Ok(current.to_vec())
    }

    /// Evaluates the network on a batch (one sample per row) and keeps every
    /// intermediate activation for [`Mlp::backward_batch`].
    pub fn forward_batch(&self, input: Array2<f64>) -> Result<ForwardCache> {
        if input.ncols() != self.input_dim() {
            return Err(config_err(format!(
                "network expects {} input columns, got {}",
                self.input_dim(),
                input.ncols()
            )));
        }
        let mut outputs = Vec::with_capacity(self.layers.len() + 1);
        outputs.push(input);
        for layer in &self.layers {
            let x = outputs.last().expect("non-empty");
            let mut z = x.dot(&layer.weight.t());
            let act = layer.activation;
            Zip::from(z.rows_mut()).for_each(|mut row| {
                Zip::from(&mut row).and(&layer.bias).for_each(|v, &b| *v = act.apply(*v + b));
            });
            outputs.push(z);
        }
        Ok(ForwardCache { outputs })
    }

    /// Output-only batched evaluation.
    pub fn predict_batch(&self, input: Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_batch(input)?.into_output())
    }

    /// Backpropagates `upstream = ∂loss/∂output` (one row per sample) through
    /// the activations in `cache`. Parameter gradients are summed over the batch.
    pub fn backward_batch(
        &self,
        cache: &ForwardCache,
        upstream: ArrayView2<f64>,
        input_grad: InputGradient,
    ) -> Result<(Gradients, Option<Array2<f64>>)> {
        self.backward_batch_with_preactivation(cache, upstream, None, input_grad)
    }

    /// Output-layer pre-activations `W·x + b` for the batch in `cache`.
    pub fn output_preactivation(&self, cache: &ForwardCache) -> Result<Array2<f64>> {
        let layer = self.layers.last().expect("at least one layer");
        let x = cache
            .outputs
            .get(self.layers.len() - 1)
            .filter(|_| cache.outputs.len() == self.layers.len() + 1)
            .ok_or_else(|| config_err("forward cache does not belong to this network"))?;
        Ok(x.dot(&layer.weight.t()) + &layer.bias)
    }

    /// Like [`Mlp::backward_batch`], with an extra loss gradient taken directly
    /// w.r.t. the output-layer pre-activations.
    pub fn backward_batch_with_preactivation(
        &self,
        cache: &ForwardCache,
        upstream: ArrayView2<f64>,
        preactivation_grad: Option<ArrayView2<f64>>,
        input_grad: InputGradient,
    ) -> Result<(Gradients, Option<Array2<f64>>)> {
        let out = cache.output();
        if preactivation_grad.is_some_and(|g| g.dim() != out.dim()) {
            return Err(config_err("pre-activation gradient shape does not match network output"));
        }
        if upstream.dim() != out.dim() || cache.outputs.len() != self.layers.len() + 1 {
            return Err(config_err(format!(
                "upstream gradient shape {:?} does not match network output {:?}",
                upstream.dim(),
                out.dim()
            )));
        }
        if let InputGradient::Columns(r) = &input_grad {
            if r.end > self.input_dim() || r.start > r.end {
                return Err(config_err(format!("input column range {r:?} out of bounds")));
            }
        }

        let n_layers = self.layers.len();
        let mut grads: Vec<Option<LayerGradient>> = vec![None; n_layers];
        let mut delta = upstream.to_owned();
        let mut input_gradient = None;

        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let act = layer.activation;
            Zip::from(&mut delta)
                .and(&cache.outputs[l + 1])
                .for_each(|d, &y| *d *= act.derivative_from_output(y));
            if l + 1 == n_layers {
                if let Some(extra) = &preactivation_grad {
                    delta += extra;
                }
            }

            let x = &cache.outputs[l];
            let weight = delta.t().dot(x);
            let bias = delta.sum_axis(Axis(0));
            grads[l] = Some(LayerGradient { weight, bias });

            if l > 0 {
                delta = delta.dot(&layer.weight);
            } else {
                input_gradient = match &input_grad {
                    InputGradient::Skip => None,
                    InputGradient::Full => Some(delta.dot(&layer.weight)),
                    InputGradient::Columns(r) => {
                        Some(delta.dot(&layer.weight.slice(s![.., r.clone()])))
                    }
                };
            }
        }

        let layers = grads.into_iter().map(|g| g.expect("every layer visited")).collect();
        Ok((Gradients { layers }, input_gradient))
    }

    /// Single-sample backward pass returning `(∂loss/∂params, ∂loss/∂input)`.
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        if upstream.len() != self.output_dim() {
            return Err(config_err(format!(
                "upstream gradient has length {}, network outputs {}",
                upstream.len(),
                self.output_dim()
            )));
        }
        let x = ArrayView1::from(input).insert_axis(Axis(0)).to_owned();
        let cache = self.forward_batch(x)?;
        let up = ArrayView1::from(upstream).insert_axis(Axis(0));
        let (grads, dx) = self.backward_batch(&cache, up, InputGradient::Full)?;
        let dx = dx.expect("full input gradient requested");
        Ok((grads, dx.row(0).to_vec()))
    }

    /// `self ← tau·source + (1 − tau)·self`, entrywise.
    pub fn soft_update_from(&mut self, source: &Mlp, tau: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(config_err(format!("tau must lie in [0, 1], got {tau}")));
        }
        if !self.same_shape(source) {
            return Err(config_err("soft update between networks of different shapes"));
        }
        let keep = 1.0 - tau;
        for (t, s) in self.layers.iter_mut().zip(&source.layers) {
            Zip::from(&mut t.weight).and(&s.weight).for_each(|t, &s| *t = tau * s + keep * *t);
            Zip::from(&mut t.bias).and(&s.bias).for_each(|t, &s| *t = tau * s + keep * *t);
        }
        Ok(())
    }
}

/// Returns `tau·source + (1 − tau)·target` as a new network.
pub fn soft_update(target: &Mlp, source: &Mlp, tau: f64) -> Result<Mlp> {
    let mut out = target.clone();
    out.soft_update_from(source, tau)?;
    Ok(out)
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weight: Array2::zeros(l.weight.dim()),
                    bias: Array1::zeros(l.bias.len()),
                })
                .collect(),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|g| g.weight.iter().chain(g.bias.iter()).copied())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|g| g.weight.iter_mut().chain(g.bias.iter_mut()))
    }

    /// Global L2 norm over every entry.
    pub fn norm(&self) -> f64 {
        self.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }

    pub fn is_zero(&self) -> bool {
        self.values().all(|v| v == 0.0)
    }

    pub fn matches(&self, net: &Mlp) -> bool {
        self.layers.len() == net.layers.len()
            && self
                .layers
                .iter()
                .zip(&net.layers)
                .all(|(g, l)| g.weight.dim() == l.weight.dim() && g.bias.len() == l.bias.len())
    }

    /// Rescales in place so the global norm does not exceed `max_norm`.
    pub fn clip_norm(&mut self, max_norm: f64) {
        let norm = self.norm();
        if norm > max_norm {
            let scale = max_norm / norm;
            self.values_mut().for_each(|v| *v *= scale);
        }
    }
}

/// Returns a copy of `grads` clipped to global norm `max_norm`.
pub fn clip_gradients(grads: &Gradients, max_norm: f64) -> Gradients {
    let mut out = grads.clone();
    out.clip_norm(max_norm);
    out
}
