use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from;

/// Bytes billed per scalar on the wire (32-bit reals).
pub const WIRE_BYTES_PER_SCALAR: u64 = 4;

/// Layer widths of the classifier: `input -> hidden* (ReLU) -> embed (linear) -> classes`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub embed_dim: usize,
    pub num_classes: usize,
}

impl Architecture {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, embed_dim: usize, num_classes: usize) -> Self {
        Self { input_dim, hidden_dims, embed_dim, num_classes }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidArchitecture("input_dim must be positive".into()));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::InvalidArchitecture("hidden widths must be positive".into()));
        }
        if self.embed_dim == 0 {
            return Err(Error::InvalidArchitecture("embed_dim must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidArchitecture("num_classes must be at least 2".into()));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` for every layer, in forward order.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut widths = Vec::with_capacity(self.hidden_dims.len() + 3);
        widths.push(self.input_dim);
        widths.extend_from_slice(&self.hidden_dims);
        widths.push(self.embed_dim);
        widths.push(self.num_classes);
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|&(i, o)| i * o + o).sum()
    }

    fn num_hidden(&self) -> usize {
        self.hidden_dims.len()
    }
}

/// One affine layer. `weight` is `fan_in x fan_out`, so a batch maps as `x W + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { weight: Array2::zeros((fan_in, fan_out)), bias: Array1::zeros(fan_out) }
    }

    fn same_shape(&self, other: &Dense) -> bool {
        self.weight.dim() == other.weight.dim() && self.bias.len() == other.bias.len()
    }

    fn scalars(&self) -> impl Iterator<Item = &f64> {
        self.weight.iter().chain(self.bias.iter())
    }

    fn scalars_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weight.iter_mut().chain(self.bias.iter_mut())
    }
}

fn layers_match(a: &[Dense], b: &[Dense]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_shape(y))
}

/// Classifier parameters. Stored in f64; billed on the wire at 4 bytes per scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    arch: Architecture,
    layers: Vec<Dense>,
}

/// Gradient of a loss with respect to a [`ModelParams`], layer for layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    layers: Vec<Dense>,
}

impl ModelParams {
    pub fn zeros(arch: &Architecture) -> Result<Self> {
        arch.validate()?;
        let layers = arch.layer_shapes().into_iter().map(|(i, o)| Dense::zeros(i, o)).collect();
        Ok(Self { arch: arch.clone(), layers })
    }

    /// Rebuilds parameters from the flat layout produced by [`ModelParams::to_flat`].
    pub fn from_flat(arch: &Architecture, values: &[f64]) -> Result<Self> {
        let mut params = Self::zeros(arch)?;
        params.set_flat(values)?;
        Ok(params)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn serialized_bytes(&self) -> u64 {
        WIRE_BYTES_PER_SCALAR * self.param_count() as u64
    }

    /// Weights then bias of each layer in forward order, row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(Dense::scalars).copied().collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        let count = self.param_count();
        if values.len() != count {
            return Err(Error::DimensionMismatch { expected: count, actual: values.len() });
        }
        for (dst, &src) in self.layers.iter_mut().flat_map(Dense::scalars_mut).zip(values) {
            *dst = src;
        }
        Ok(())
    }

    fn shape_matches(&self, layers: &[Dense]) -> bool {
        layers_match(&self.layers, layers)
    }

    /// In-place `params -= lr * grads`.
    pub fn apply_sgd(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        if !self.shape_matches(&grads.layers) {
            return Err(Error::ShapeMismatch);
        }
        for (layer, grad) in self.layers.iter_mut().zip(&grads.layers) {
            layer.weight.scaled_add(-lr, &grad.weight);
            layer.bias.scaled_add(-lr, &grad.bias);
        }
        Ok(())
    }
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        let layers = params.layers.iter().map(|l| Dense::zeros(l.weight.nrows(), l.weight.ncols())).collect();
        Self { layers }
    }

    /// Gradients with the same layout as `params`, filled from a flat vector.
    pub fn from_flat(params: &ModelParams, values: &[f64]) -> Result<Self> {
        let mut grads = Self::zeros_like(params);
        let count = params.param_count();
        if values.len() != count {
            return Err(Error::DimensionMismatch { expected: count, actual: values.len() });
        }
        for (dst, &src) in grads.layers.iter_mut().flat_map(Dense::scalars_mut).zip(values) {
            *dst = src;
        }
        Ok(grads)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(Dense::scalars).copied().collect()
    }
}

/// Deterministic initialization: uniform weights scaled by fan-in, zero biases.
///
/// Layers followed by ReLU use the bound `sqrt(6 / fan_in)`; the two linear
/// layers (embedding and head) use `sqrt(3 / fan_in)`, which keeps the
/// activation variance roughly constant through the stack.
pub fn init_network(arch: &Architecture, seed: u64) -> Result<ModelParams> {
    let mut params = ModelParams::zeros(arch)?;
    let mut rng = rng_from(seed);
    let relu_layers = arch.num_hidden();
    for (idx, layer) in params.layers.iter_mut().enumerate() {
        let fan_in = layer.weight.nrows() as f64;
        let gain = if idx < relu_layers { 6.0 } else { 3.0 };
        let bound = (gain / fan_in).sqrt();
        layer.weight.mapv_inplace(|_| rng.random_range(-bound..bound));
    }
    Ok(params)
}

/// Output of a forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutput {
    /// Pre-classifier activations, not normalized.
    pub embeddings: Array2<f64>,
    pub logits: Array2<f64>,
}

struct Trace {
    /// Input to each layer (`activations[0]` is the batch itself).
    activations: Vec<Array2<f64>>,
    logits: Array2<f64>,
}

fn check_batch(params: &ModelParams, batch: &ArrayView2<f64>) -> Result<()> {
    let expected = params.arch.input_dim;
    if batch.ncols() != expected {
        return Err(Error::DimensionMismatch { expected, actual: batch.ncols() });
    }
    Ok(())
}

fn affine(input: &ArrayView2<f64>, layer: &Dense) -> Array2<f64> {
    input.dot(&layer.weight) + &layer.bias
}

fn run_layers(params: &ModelParams, batch: ArrayView2<f64>) -> Trace {
    let relu_layers = params.arch.num_hidden();
    let mut activations = Vec::with_capacity(params.layers.len());
    let mut current = batch.to_owned();
    for (idx, layer) in params.layers.iter().enumerate() {
        let mut out = affine(&current.view(), layer);
        if idx < relu_layers {
            out.mapv_inplace(|v| v.max(0.0));
        }
        activations.push(current);
        current = out;
    }
    Trace { activations, logits: current }
}

pub fn forward(params: &ModelParams, batch: ArrayView2<f64>) -> Result<ForwardOutput> {
    check_batch(params, &batch)?;
    let mut trace = run_layers(params, batch);
    let embeddings = trace.activations.pop().expect("head layer input");
    Ok(ForwardOutput { embeddings, logits: trace.logits })
}

/// Numerically stable softmax (max-subtracted). Entries equal to `-inf` get probability 0.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Row-wise [`softmax`].
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let probs = softmax(row.as_slice().expect("owned rows are contiguous"));
        row.iter_mut().zip(probs).for_each(|(dst, p)| *dst = p);
    }
    out
}

fn log_sum_exp(row: ndarray::ArrayView1<f64>) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|&z| (z - max).exp()).sum::<f64>().ln()
}

fn check_labels(labels: &[usize], num_classes: usize, rows: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(Error::DimensionMismatch { expected: rows, actual: labels.len() });
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::LabelOutOfRange { label, num_classes });
    }
    Ok(())
}

/// Mean cross-entropy over the batch and its exact gradient.
pub fn loss_and_grad(params: &ModelParams, batch: ArrayView2<f64>, labels: &[usize]) -> Result<(f64, Gradients)> {
    check_batch(params, &batch)?;
    if batch.nrows() == 0 {
        return Err(Error::Empty("batch"));
    }
    check_labels(labels, params.arch.num_classes, batch.nrows())?;

    let rows = batch.nrows() as f64;
    let trace = run_layers(params, batch);

    let mut loss = 0.0;
    let mut delta = Array2::zeros(trace.logits.raw_dim());
    for ((logit_row, mut delta_row), &label) in trace.logits.rows().into_iter().zip(delta.rows_mut()).zip(labels) {
        let lse = log_sum_exp(logit_row);
        loss += lse - logit_row[label];
        for (d, &z) in delta_row.iter_mut().zip(logit_row.iter()) {
            *d = (z - lse).exp() / rows;
        }
        delta_row[label] -= 1.0 / rows;
    }
    loss /= rows;

    let relu_layers = params.arch.num_hidden();
    let mut grads = Vec::with_capacity(params.layers.len());
    for idx in (0..params.layers.len()).rev() {
        let input = &trace.activations[idx];
        let weight_grad = input.t().dot(&delta);
        let bias_grad = delta.sum_axis(Axis(0));
        if idx > 0 {
            let mut upstream = delta.dot(&params.layers[idx].weight.t());
            // Layer idx-1 produced `input`; ReLU if it was a hidden layer.
            if idx - 1 < relu_layers {
                upstream.zip_mut_with(input, |g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
            }
            delta = upstream;
        }
        grads.push(Dense { weight: weight_grad, bias: bias_grad });
    }
    grads.reverse();
    Ok((loss, Gradients { layers: grads }))
}

/// Plain SGD: `params - lr * grads`.
pub fn sgd_step(params: &ModelParams, grads: &Gradients, lr: f64) -> Result<ModelParams> {
    let mut next = params.clone();
    next.apply_sgd(grads, lr)?;
    Ok(next)
}

/// Adds the gradient of `(mu / 2) * ||params - anchor||^2` to `grads`.
///
/// `mu == 0` returns `grads` untouched, bit for bit.
pub fn proximal_grad(grads: &Gradients, params: &ModelParams, anchor: &ModelParams, mu: f64) -> Result<Gradients> {
    if !params.shape_matches(&grads.layers) || !params.shape_matches(&anchor.layers) {
        return Err(Error::ShapeMismatch);
    }
    let mut out = grads.clone();
    if mu == 0.0 {
        return Ok(out);
    }
    for ((g, p), a) in out.layers.iter_mut().zip(&params.layers).zip(&anchor.layers) {
        for ((g, &p), &a) in g.scalars_mut().zip(p.scalars()).zip(a.scalars()) {
            *g += mu * (p - a);
        }
    }
    Ok(out)
}
