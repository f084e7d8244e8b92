//! Dense multilayer perceptrons with exact reverse-mode gradients and Adam.
//!
//! Everything here is `f64` and row-major. A layer computes
//! `y = activation(W x + b)` with `W` of shape `(out_dim, in_dim)`. Batched
//! entry points take one sample per row and return one output per row; the
//! single-vector entry points are thin wrappers around them.

mod adam;
pub mod checkpoint;

pub use adam::{adam_step, AdamHyper, AdamState};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Per-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    /// `x * sigmoid(x)`.
    Swish,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Swish => z * sigmoid(z),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative with respect to the pre-activation.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Swish => {
                let s = sigmoid(z);
                s + z * s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Swish => 0,
            Activation::Tanh => 1,
            Activation::Identity => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Swish),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Identity),
            _ => None,
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// One affine layer followed by an element-wise activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// Shape `(out_dim, in_dim)`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self { weights: Array2::zeros((out_dim, in_dim)), bias: Array1::zeros(out_dim), activation }
    }

    /// Fan-in scaled uniform initialization, `U(-1/sqrt(in), 1/sqrt(in))` for
    /// weights and biases alike.
    pub fn random<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = 1.0 / (in_dim as f64).sqrt();
        let weights = Array2::from_shape_fn((out_dim, in_dim), |_| rng.gen_range(-limit..=limit));
        let bias = Array1::from_shape_fn(out_dim, |_| rng.gen_range(-limit..=limit));
        Self { weights, bias, activation }
    }
}

/// Architecture description used to build networks from config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpShape {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for MlpShape {
    fn default() -> Self {
        Self { hidden: vec![128, 128, 128], activation: Activation::Swish }
    }
}

/// The parameters of a multilayer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

impl Mlp {
    /// Validates that layer dimensions chain and that every entry is finite.
    pub fn new(layers: Vec<Dense>) -> Result<Self> {
        ensure(!layers.is_empty(), || "an MLP needs at least one layer".into())?;
        for (i, layer) in layers.iter().enumerate() {
            ensure(layer.bias.len() == layer.out_dim(), || {
                format!("layer {i}: bias length {} != out_dim {}", layer.bias.len(), layer.out_dim())
            })?;
            ensure(layer.in_dim() > 0 && layer.out_dim() > 0, || format!("layer {i} has a zero dimension"))?;
        }
        for (i, pair) in layers.windows(2).enumerate() {
            ensure(pair[0].out_dim() == pair[1].in_dim(), || {
                format!(
                    "layer {i} out_dim {} does not chain into layer {} in_dim {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )
            })?;
        }
        let mlp = Self { layers };
        ensure(mlp.is_finite(), || "non-finite parameter".into())?;
        Ok(mlp)
    }

    /// Randomly initialized network `input -> hidden... -> output`; hidden
    /// layers use `shape.activation`, the output layer is linear.
    pub fn random<R: Rng + ?Sized>(input_dim: usize, shape: &MlpShape, output_dim: usize, rng: &mut R) -> Self {
        let dims = Self::dims(input_dim, shape, output_dim);
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { Activation::Identity } else { shape.activation };
                Dense::random(dims[i], dims[i + 1], act, rng)
            })
            .collect();
        Self { layers }
    }

    /// Same architecture as [`Mlp::random`], all parameters zero.
    pub fn zeros(input_dim: usize, shape: &MlpShape, output_dim: usize) -> Self {
        let dims = Self::dims(input_dim, shape, output_dim);
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { Activation::Identity } else { shape.activation };
                Dense::zeros(dims[i], dims[i + 1], act)
            })
            .collect();
        Self { layers }
    }

    fn dims(input_dim: usize, shape: &MlpShape, output_dim: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(shape.hidden.len() + 2);
        dims.push(input_dim);
        dims.extend_from_slice(&shape.hidden);
        dims.push(output_dim);
        dims
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// All parameters flattened layer by layer: weights row-major, then bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    /// Inverse of [`Mlp::flat_params`].
    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        ensure(flat.len() == self.num_params(), || {
            format!("expected {} parameters, got {}", self.num_params(), flat.len())
        })?;
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut() {
                *w = it.next().unwrap();
            }
            for b in l.bias.iter_mut() {
                *b = it.next().unwrap();
            }
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, input.len()), input).map_err(|e| Error::Contract(e.to_string()))?;
        Ok(self.forward_batch(x)?.into_raw_vec())
    }

    /// Forward pass over a batch, one sample per row.
    pub fn forward_batch(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(inputs.ncols())?;
        let mut act = affine(&self.layers[0], inputs);
        act.mapv_inplace(|z| self.layers[0].activation.apply(z));
        for layer in &self.layers[1..] {
            let mut z = affine(layer, act.view());
            z.mapv_inplace(|v| layer.activation.apply(v));
            act = z;
        }
        Ok(act)
    }

    /// Reverse-mode gradients of `<output, cotangent>` for a single input.
    pub fn gradients(&self, input: &[f64], cotangent: &[f64]) -> Result<(MlpGrads, Vec<f64>)> {
        let x = ArrayView2::from_shape((1, input.len()), input).map_err(|e| Error::Contract(e.to_string()))?;
        let c = ArrayView2::from_shape((1, cotangent.len()), cotangent).map_err(|e| Error::Contract(e.to_string()))?;
        let (g, dx) = self.gradients_batch(x, c)?;
        Ok((g, dx.into_raw_vec()))
    }

    /// Gradients of `sum_rows <output_row, cotangent_row>`: parameter
    /// gradients are summed over the batch, input cotangents are per row.
    pub fn gradients_batch(
        &self,
        inputs: ArrayView2<'_, f64>,
        cotangents: ArrayView2<'_, f64>,
    ) -> Result<(MlpGrads, Array2<f64>)> {
        self.check_input(inputs.ncols())?;
        ensure(cotangents.nrows() == inputs.nrows(), || {
            format!("{} cotangent rows for {} inputs", cotangents.nrows(), inputs.nrows())
        })?;
        ensure(cotangents.ncols() == self.output_dim(), || {
            format!("cotangent width {} != output_dim {}", cotangents.ncols(), self.output_dim())
        })?;

        // Keep pre-activations and each layer's input for the backward sweep.
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut layer_inputs: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        layer_inputs.push(inputs.to_owned());
        for (i, layer) in self.layers.iter().enumerate() {
            let z = affine(layer, layer_inputs[i].view());
            if i + 1 < self.layers.len() {
                layer_inputs.push(z.mapv(|v| layer.activation.apply(v)));
            }
            pre.push(z);
        }

        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = cotangents.to_owned();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let act = layer.activation;
            let mut dz = upstream;
            if act != Activation::Identity {
                dz.zip_mut_with(&pre[i], |d, &z| *d *= act.derivative(z));
            }
            let weights = dz.t().dot(&layer_inputs[i]);
            let bias = dz.sum_axis(Axis(0));
            upstream = dz.dot(&layer.weights);
            grads.push(LayerGrads { weights, bias });
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, upstream))
    }

    fn check_input(&self, width: usize) -> Result<()> {
        ensure(width == self.input_dim(), || format!("input width {width} != network in_dim {}", self.input_dim()))
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }
}

fn affine(layer: &Dense, x: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut z = x.dot(&layer.weights.t());
    z += &layer.bias;
    z
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// A collection shaped exactly like an [`Mlp`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrads>,
}

impl MlpGrads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            layers: mlp
                .layers
                .iter()
                .map(|l| LayerGrads { weights: Array2::zeros(l.weights.raw_dim()), bias: Array1::zeros(l.bias.len()) })
                .collect(),
        }
    }

    pub fn matches(&self, mlp: &Mlp) -> bool {
        self.layers.len() == mlp.layers.len()
            && self
                .layers
                .iter()
                .zip(&mlp.layers)
                .all(|(g, l)| g.weights.raw_dim() == l.weights.raw_dim() && g.bias.len() == l.bias.len())
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights *= factor;
            l.bias *= factor;
        }
    }

    pub fn add_assign(&mut self, other: &MlpGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights += &b.weights;
            a.bias += &b.bias;
        }
    }

    /// Same ordering as [`Mlp::flat_params`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter())).fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
