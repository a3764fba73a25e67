//! Feedforward networks with one additive noise-injection point.
//!
//! The noise is added to the output of layer `noise_layer_index` (index 0 means
//! the input itself). Logits are the output of the final linear layer; softmax
//! only appears inside the loss.

use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{NoiseModel, NoiseSpec};
use crate::divergences::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng, streams};

pub const MODEL_VERSION: u32 = 1;
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.1;

/// Dense affine layer `y = W x + b`, `W` stored row-major as `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    in_dim: usize,
    out_dim: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Linear {
    pub fn new(in_dim: usize, out_dim: usize, w: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::NetworkInvariant("linear layer with a zero dimension".into()));
        }
        if w.len() != in_dim * out_dim {
            return Err(Error::DimensionMismatch {
                expected: in_dim * out_dim,
                got: w.len(),
            });
        }
        if b.len() != out_dim {
            return Err(Error::DimensionMismatch {
                expected: out_dim,
                got: b.len(),
            });
        }
        if w.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::NetworkInvariant("non-finite weight".into()));
        }
        Ok(Self { in_dim, out_dim, w, b })
    }

    pub fn from_matrix(w: &DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let rows: Vec<f64> = w
            .row_iter()
            .flat_map(|r| r.iter().copied().collect::<Vec<_>>())
            .collect();
        Self::new(w.ncols(), w.nrows(), rows, b)
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Result<Self> {
        Self::new(in_dim, out_dim, vec![0.0; in_dim * out_dim], vec![0.0; out_dim])
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.out_dim, self.in_dim, &self.w)
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, bias) in self.w.chunks_exact(self.in_dim).zip(&self.b) {
            out.push(row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bias);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Linear(Linear),
    LeakyRelu { slope: f64 },
}

impl Layer {
    fn num_params(&self) -> usize {
        match self {
            Layer::Linear(l) => l.w.len() + l.b.len(),
            Layer::LeakyRelu { .. } => 0,
        }
    }
}

/// Network `phi_n o ... o phi_{i+1} (phi_i o ... o phi_1 (x) + Z)`.
///
/// Invariants: layer dimensions chain, the last layer is linear with
/// `num_classes` outputs, and the noise dimension equals the width at the
/// injection point. `noise == None` is the deterministic (zero-noise) mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedNet {
    layers: Vec<Layer>,
    noise: Option<NoiseModel>,
    noise_layer_index: usize,
    input_dim: usize,
    num_classes: usize,
}

impl RandomizedNet {
    pub fn new(layers: Vec<Layer>, noise: Option<NoiseModel>, noise_layer_index: usize) -> Result<Self> {
        let input_dim = match layers.first() {
            Some(Layer::Linear(l)) => l.in_dim,
            Some(_) => return Err(Error::NetworkInvariant("first layer must be linear".into())),
            None => return Err(Error::NetworkInvariant("network has no layers".into())),
        };
        let mut widths = vec![input_dim];
        for (j, layer) in layers.iter().enumerate() {
            let cur = *widths.last().unwrap();
            match layer {
                Layer::Linear(l) => {
                    if l.in_dim != cur {
                        return Err(Error::NetworkInvariant(format!(
                            "layer {j} expects {} inputs but receives {cur}",
                            l.in_dim
                        )));
                    }
                    widths.push(l.out_dim);
                }
                Layer::LeakyRelu { slope } => {
                    if !slope.is_finite() {
                        return Err(Error::NetworkInvariant(format!("layer {j} has a non-finite slope")));
                    }
                    widths.push(cur);
                }
            }
        }
        let num_classes = match layers.last() {
            Some(Layer::Linear(l)) => l.out_dim,
            _ => return Err(Error::NetworkInvariant("last layer must be linear".into())),
        };
        if noise_layer_index > layers.len() {
            return Err(Error::NetworkInvariant(format!(
                "noise_layer_index {noise_layer_index} exceeds the {} layers",
                layers.len()
            )));
        }
        if let Some(noise) = &noise {
            let width = widths[noise_layer_index];
            if noise.dim() != width {
                return Err(Error::NetworkInvariant(format!(
                    "noise dimension {} does not match width {width} at injection point {noise_layer_index}",
                    noise.dim()
                )));
            }
        }
        Ok(Self {
            layers,
            noise,
            noise_layer_index,
            input_dim,
            num_classes,
        })
    }

    /// MLP with Xavier-uniform weights, zero biases and leaky-ReLU between linear layers.
    ///
    /// `widths = [input, hidden..., classes]`.
    pub fn mlp(
        widths: &[usize],
        slope: f64,
        noise: Option<NoiseModel>,
        noise_layer_index: usize,
        seed: u64,
    ) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::NetworkInvariant(
                "an MLP needs at least input and output widths".into(),
            ));
        }
        let mut layers = Vec::new();
        for (j, pair) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut rng = stream_rng(seed, streams::INIT, j as u64);
            let w = (0..fan_in * fan_out).map(|_| rng.random_range(-a..a)).collect();
            layers.push(Layer::Linear(Linear::new(fan_in, fan_out, w, vec![0.0; fan_out])?));
            if j + 2 < widths.len() {
                layers.push(Layer::LeakyRelu { slope });
            }
        }
        Self::new(layers, noise, noise_layer_index)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Layers applied before the noise is added.
    pub fn prefix(&self) -> &[Layer] {
        &self.layers[..self.noise_layer_index]
    }

    pub fn noise(&self) -> Option<&NoiseModel> {
        self.noise.as_ref()
    }

    pub fn noise_layer_index(&self) -> usize {
        self.noise_layer_index
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Same weights with the noise removed (or replaced).
    pub fn with_noise(&self, noise: Option<NoiseModel>) -> Result<Self> {
        Self::new(self.layers.clone(), noise, self.noise_layer_index)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    /// Flat parameters: for each linear layer in order, `W` row-major then `b`.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            if let Layer::Linear(l) = layer {
                out.extend_from_slice(&l.w);
                out.extend_from_slice(&l.b);
            }
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                got: params.len(),
            });
        }
        let mut k = 0;
        for layer in &mut self.layers {
            if let Layer::Linear(l) = layer {
                let nw = l.w.len();
                l.w.copy_from_slice(&params[k..k + nw]);
                k += nw;
                let nb = l.b.len();
                l.b.copy_from_slice(&params[k..k + nb]);
                k += nb;
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn noise_dim(&self) -> usize {
        self.noise.as_ref().map_or(0, NoiseModel::dim)
    }

    /// Fill `tape` with every activation; `z` is added at the injection point.
    fn run(&self, x: &[f64], z: Option<&[f64]>, tape: &mut Tape) {
        tape.acts.resize_with(self.layers.len() + 1, Vec::new);
        let acts = &mut tape.acts;
        acts[0].clear();
        acts[0].extend_from_slice(x);
        if self.noise_layer_index == 0 {
            add_noise(&mut acts[0], z);
        }
        for (j, layer) in self.layers.iter().enumerate() {
            let (done, rest) = acts.split_at_mut(j + 1);
            let input = &done[j];
            let out = &mut rest[0];
            match layer {
                Layer::Linear(l) => l.apply(input, out),
                Layer::LeakyRelu { slope } => {
                    out.clear();
                    out.extend(input.iter().map(|v| if *v < 0.0 { slope * v } else { *v }));
                }
            }
            if j + 1 == self.noise_layer_index {
                add_noise(out, z);
            }
        }
    }

    /// Backpropagate `dlogits` through a recorded tape. Accumulates
    /// `scale * dL/dparams` into `grad` when given and returns `dL/dx`.
    fn backprop(&self, tape: &Tape, dlogits: &[f64], mut grad: Option<(&mut [f64], f64)>) -> Vec<f64> {
        let mut delta = dlogits.to_vec();
        let mut offset = self.num_params();
        for (j, layer) in self.layers.iter().enumerate().rev() {
            let input = &tape.acts[j];
            match layer {
                Layer::Linear(l) => {
                    offset -= l.w.len() + l.b.len();
                    if let Some((g, scale)) = grad.as_mut() {
                        let (gw, gb) = g[offset..offset + l.w.len() + l.b.len()].split_at_mut(l.w.len());
                        for (o, d) in delta.iter().enumerate() {
                            let sd = *scale * d;
                            gb[o] += sd;
                            for (gwi, xi) in gw[o * l.in_dim..(o + 1) * l.in_dim].iter_mut().zip(input) {
                                *gwi += sd * xi;
                            }
                        }
                    }
                    let mut next = vec![0.0; l.in_dim];
                    for (row, d) in l.w.chunks_exact(l.in_dim).zip(&delta) {
                        for (n, wv) in next.iter_mut().zip(row) {
                            *n += wv * d;
                        }
                    }
                    delta = next;
                }
                Layer::LeakyRelu { slope } => {
                    for (d, v) in delta.iter_mut().zip(input) {
                        if *v < 0.0 {
                            *d *= slope;
                        }
                    }
                }
            }
        }
        delta
    }

    /// Deterministic forward pass, noise omitted.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward_with_noise(x, None)
    }

    /// Forward pass with an explicit noise realization.
    pub fn forward_with_noise(&self, x: &[f64], z: Option<&[f64]>) -> Result<Vec<f64>> {
        self.check_input(x)?;
        if let Some(z) = z {
            if z.len() != self.noise_dim() || self.noise.is_none() {
                return Err(Error::DimensionMismatch {
                    expected: self.noise_dim(),
                    got: z.len(),
                });
            }
        }
        let mut tape = Tape::default();
        self.run(x, z, &mut tape);
        Ok(tape.logits().to_vec())
    }

    /// One noisy forward pass using noise draw 0 of `seed`.
    pub fn forward_noisy(&self, x: &[f64], seed: u64) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let z = self.draw_noise(seed, 0);
        let mut tape = Tape::default();
        self.run(x, z.as_deref(), &mut tape);
        Ok(tape.logits().to_vec())
    }

    /// Noise draw `index` of `seed`, or `None` in zero-noise mode.
    pub fn draw_noise(&self, seed: u64, index: u64) -> Option<Vec<f64>> {
        self.noise.as_ref().map(|n| {
            let mut z = vec![0.0; n.dim()];
            n.draw(seed, index, &mut z);
            z
        })
    }

    /// Class predicted under noise draw `index` of `seed`.
    pub fn predict_draw(&self, x: &[f64], seed: u64, index: u64, tape: &mut Tape) -> usize {
        let z = self.draw_noise(seed, index);
        self.predict_with_noise(x, z.as_deref(), tape)
    }

    /// Argmax class for a given noise realization, lowest index on ties.
    pub fn predict_with_noise(&self, x: &[f64], z: Option<&[f64]>, tape: &mut Tape) -> usize {
        self.run(x, z, tape);
        argmax(tape.logits())
    }

    /// Label counts over noise draws `0..n_mc` of `seed`.
    pub fn predict_counts(&self, x: &[f64], n_mc: usize, seed: u64) -> Result<Vec<u64>> {
        self.check_input(x)?;
        if n_mc == 0 {
            return Err(Error::param("n_mc", "must be >= 1"));
        }
        let mut counts = vec![0u64; self.num_classes];
        let mut tape = Tape::default();
        let mut z = vec![0.0; self.noise_dim()];
        for j in 0..n_mc {
            let noise = self.noise.as_ref().map(|n| {
                n.draw(seed, j as u64, &mut z);
                z.as_slice()
            });
            counts[self.predict_with_noise(x, noise, &mut tape)] += 1;
        }
        Ok(counts)
    }

    /// Cross-entropy of `logits(x + noise)` against `y`, and its input gradient.
    pub fn input_gradient(&self, x: &[f64], y: usize, z: Option<&[f64]>) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        self.check_label(y)?;
        let mut tape = Tape::default();
        self.run(x, z, &mut tape);
        let (loss, dlogits) = cross_entropy(tape.logits(), y);
        Ok((loss, self.backprop(&tape, &dlogits, None)))
    }

    /// Gradient of `sum_k c_k logit_k` with respect to the input.
    pub fn logit_gradient(&self, x: &[f64], coeffs: &[f64], z: Option<&[f64]>) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_input(x)?;
        if coeffs.len() != self.num_classes {
            return Err(Error::DimensionMismatch {
                expected: self.num_classes,
                got: coeffs.len(),
            });
        }
        let mut tape = Tape::default();
        self.run(x, z, &mut tape);
        let logits = tape.logits().to_vec();
        Ok((logits, self.backprop(&tape, coeffs, None)))
    }

    fn check_label(&self, y: usize) -> Result<()> {
        if y >= self.num_classes {
            return Err(Error::param(
                "label",
                format!("{y} is not below {} classes", self.num_classes),
            ));
        }
        Ok(())
    }
}

fn add_noise(v: &mut [f64], z: Option<&[f64]>) {
    if let Some(z) = z {
        for (a, b) in v.iter_mut().zip(z) {
            *a += b;
        }
    }
}

/// Reusable activation buffers for repeated forward passes.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    acts: Vec<Vec<f64>>,
}

impl Tape {
    fn logits(&self) -> &[f64] {
        self.acts.last().expect("tape filled by run")
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `(-ln softmax(logits)_y, softmax - onehot(y))`.
pub fn cross_entropy(logits: &[f64], y: usize) -> (f64, Vec<f64>) {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    let mut d: Vec<f64> = logits.iter().map(|v| (v - lse).exp()).collect();
    d[y] -= 1.0;
    (lse - logits[y], d)
}

/// Labelled points in `[-1, 1]^dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    num_classes: usize,
    inputs: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(dim: usize, num_classes: usize, inputs: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be >= 1"));
        }
        if inputs.len() != dim * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * labels.len(),
                got: inputs.len(),
            });
        }
        for (k, v) in inputs.iter().enumerate() {
            if !(-1.0..=1.0).contains(v) {
                return Err(Error::OutOfDomain {
                    row: k / dim,
                    column: k % dim,
                    value: *v,
                });
            }
        }
        if let Some((row, y)) = labels.iter().enumerate().find(|(_, y)| **y >= num_classes) {
            return Err(Error::BadLabel {
                row,
                value: y.to_string(),
            });
        }
        Ok(Self {
            dim,
            num_classes,
            inputs,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn y(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    /// Largest pairwise `l2` distance between inputs.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.max(crate::norms::Norm::L2.distance(self.x(i), self.x(j)));
            }
        }
        best
    }

    /// Rows `indices` as a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let inputs = indices.iter().flat_map(|&i| self.x(i).to_vec()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self {
            dim: self.dim,
            num_classes: self.num_classes,
            inputs,
            labels,
        }
    }
}

/// Empirical law of the predicted class over `n_mc` noise draws.
pub fn predict_distribution(net: &RandomizedNet, x: &[f64], n_mc: usize, seed: u64) -> Result<DiscreteDistribution> {
    DiscreteDistribution::from_counts(&net.predict_counts(x, n_mc, seed)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// Mean cross-entropy over `data[indices]` and its parameter gradient.
///
/// Example `i` sees noise draw `i` of `seed`, so a row keeps the same noise
/// wherever it appears in the batch.
pub fn loss_and_grad(net: &RandomizedNet, data: &Dataset, indices: &[usize], seed: u64) -> Result<LossGrad> {
    if indices.is_empty() {
        return Err(Error::param("batch", "must be nonempty"));
    }
    if data.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            got: data.dim(),
        });
    }
    let scale = 1.0 / indices.len() as f64;
    let mut grad = vec![0.0; net.num_params()];
    let mut loss = 0.0;
    let mut tape = Tape::default();
    let mut z = vec![0.0; net.noise_dim()];
    for &i in indices {
        if i >= data.len() {
            return Err(Error::param("batch", format!("index {i} out of range")));
        }
        let y = data.y(i);
        net.check_label(y)?;
        let noise = net.noise.as_ref().map(|n| {
            n.draw(seed, i as u64, &mut z);
            z.as_slice()
        });
        net.run(data.x(i), noise, &mut tape);
        let (l, dlogits) = cross_entropy(tape.logits(), y);
        loss += l;
        net.backprop(&tape, &dlogits, Some((&mut grad, scale)));
    }
    Ok(LossGrad {
        loss: loss * scale,
        grad,
    })
}

/// SGD with heavy-ball momentum: `v = mu v + g`, `theta -= lr v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Piecewise-constant `(first epoch, lr)` pairs; the first must start at epoch 0.
    pub lr_schedule: Vec<(usize, f64)>,
    pub momentum: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr_schedule
            .iter()
            .rfind(|(start, _)| *start <= epoch)
            .map_or(0.0, |(_, lr)| *lr)
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::param("epochs", "must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::param("momentum", "must lie in [0, 1)"));
        }
        match self.lr_schedule.first() {
            Some((0, _)) => {}
            _ => return Err(Error::param("lr_schedule", "must start at epoch 0")),
        }
        if self.lr_schedule.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::param("lr_schedule", "epochs must be strictly increasing"));
        }
        if self.lr_schedule.iter().any(|(_, lr)| !(lr.is_finite() && *lr >= 0.0)) {
            return Err(Error::param("lr_schedule", "learning rates must be finite and >= 0"));
        }
        Ok(())
    }
}

const EPOCH_NOISE_TAG: u64 = 0x6e6f_6973_6500_0000;

/// Train with one fresh noise draw per example per epoch. Returns the trained
/// network and the per-epoch mean loss.
pub fn train(net: &RandomizedNet, data: &Dataset, cfg: &TrainConfig) -> Result<(RandomizedNet, Vec<f64>)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut net = net.clone();
    let mut params = net.params();
    let mut velocity = vec![0.0; params.len()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = stream_rng(cfg.seed, streams::SHUFFLE, epoch as u64);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let noise_seed = derive_seed(cfg.seed ^ EPOCH_NOISE_TAG, epoch as u64);
        let lr = cfg.lr_at(epoch);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let lg = loss_and_grad(&net, data, batch, noise_seed)?;
            if !lg.loss.is_finite() {
                return Err(Error::Numeric(format!("non-finite loss at epoch {epoch}")));
            }
            total += lg.loss * batch.len() as f64;
            for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&lg.grad) {
                *v = cfg.momentum * *v + g;
                *p -= lr * *v;
            }
            net.set_params(&params)?;
        }
        trace.push(total / data.len() as f64);
    }
    Ok((net, trace))
}

/// Fraction of rows whose deterministic argmax equals the label.
pub fn deterministic_accuracy(net: &RandomizedNet, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut tape = Tape::default();
    let mut hits = 0usize;
    for i in 0..data.len() {
        net.check_input(data.x(i))?;
        if net.predict_with_noise(data.x(i), None, &mut tape) == data.y(i) {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum LayerRepr {
    Linear { w: Vec<Vec<f64>>, b: Vec<f64> },
    LeakyRelu { slope: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NoiseRepr {
    Spec(NoiseSpec),
    None(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    layers: Vec<LayerRepr>,
    noise: NoiseRepr,
    noise_layer_index: usize,
    num_classes: usize,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

/// Serialize to the model file format, with an optional `meta` object.
pub fn to_json(net: &RandomizedNet, meta: Option<&serde_json::Value>) -> Result<String> {
    let layers = net
        .layers
        .iter()
        .map(|l| match l {
            Layer::Linear(lin) => LayerRepr::Linear {
                w: lin.w.chunks_exact(lin.in_dim).map(<[f64]>::to_vec).collect(),
                b: lin.b.clone(),
            },
            Layer::LeakyRelu { slope } => LayerRepr::LeakyRelu { slope: *slope },
        })
        .collect();
    let file = ModelFile {
        layers,
        noise: match &net.noise {
            Some(n) => NoiseRepr::Spec(n.clone().into()),
            None => NoiseRepr::None("none".into()),
        },
        noise_layer_index: net.noise_layer_index,
        num_classes: net.num_classes,
        version: MODEL_VERSION,
        meta: meta.cloned(),
    };
    let mut s = serde_json::to_string_pretty(&file)?;
    s.push('\n');
    Ok(s)
}

fn parse_error(text: &str, e: &serde_json::Error) -> Error {
    let (line, column) = (e.line(), e.column());
    let offset = if line == 0 {
        0
    } else {
        text.split_inclusive('\n').take(line - 1).map(str::len).sum::<usize>() + column.saturating_sub(1)
    };
    Error::Parse {
        offset: offset.min(text.len()),
        line,
        column,
        message: e.to_string(),
    }
}

/// Parse a model file. Returns the network and its `meta` field, if any.
pub fn from_json(text: &str) -> Result<(RandomizedNet, Option<serde_json::Value>)> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse_error(text, &e))?;
    if let Some(v) = value.get("version") {
        let found = v.as_u64().unwrap_or(u64::MAX);
        if found != MODEL_VERSION as u64 {
            return Err(Error::VersionMismatch {
                found: found.min(u32::MAX as u64) as u32,
                expected: MODEL_VERSION,
            });
        }
    }
    let file: ModelFile = serde_json::from_str(text).map_err(|e| parse_error(text, &e))?;
    let mut layers = Vec::with_capacity(file.layers.len());
    for (j, l) in file.layers.into_iter().enumerate() {
        layers.push(match l {
            LayerRepr::Linear { w, b } => {
                let out = w.len();
                let inp = w.first().map_or(0, Vec::len);
                if w.iter().any(|r| r.len() != inp) {
                    return Err(Error::NetworkInvariant(format!("layer {j} has ragged weight rows")));
                }
                Layer::Linear(Linear::new(inp, out, w.concat(), b)?)
            }
            LayerRepr::LeakyRelu { slope } => Layer::LeakyRelu { slope },
        });
    }
    let noise = match file.noise {
        NoiseRepr::Spec(spec) => Some(NoiseModel::try_from(spec)?),
        NoiseRepr::None(s) if s == "none" => None,
        NoiseRepr::None(s) => return Err(Error::NetworkInvariant(format!("unknown noise `{s}`"))),
    };
    let net = RandomizedNet::new(layers, noise, file.noise_layer_index)?;
    if net.num_classes != file.num_classes {
        return Err(Error::NetworkInvariant(format!(
            "num_classes {} does not match final layer width {}",
            file.num_classes, net.num_classes
        )));
    }
    Ok((net, file.meta))
}

pub fn save(net: &RandomizedNet, path: &Path, meta: Option<&serde_json::Value>) -> Result<()> {
    std::fs::write(path, to_json(net, meta)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<RandomizedNet> {
    Ok(load_with_meta(path)?.0)
}

pub fn load_with_meta(path: &Path) -> Result<(RandomizedNet, Option<serde_json::Value>)> {
    from_json(&std::fs::read_to_string(path)?)
}
