//! Dense networks with hand-written backpropagation.
//!
//! Everything is `f64`. Batches are row-major: one sample per row.

mod adam;
mod checkpoint;
mod gradcheck;

pub use adam::{adam_step, lr_at, AdamState, LrSchedule, RegConfig};
pub use checkpoint::{read_mlp, write_mlp, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub(crate) use checkpoint::fnv1a as fnv1a_pub;
pub use gradcheck::{check_gradients, GradReport};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Tanh,
    Sin,
    Sigmoid,
    /// `sigmoid(x) - 1/2`, which passes through the origin like `tanh`.
    ShiftedSigmoid,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `tanh` through a single `exp`, with a Taylor branch near zero where the
/// quotient form cancels. Agrees with `f64::tanh` to a few ulps.
#[inline]
fn tanh(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.02 {
        let x2 = x * x;
        return x * (1.0 + x2 * (-1.0 / 3.0 + x2 * (2.0 / 15.0 + x2 * (-17.0 / 315.0 + x2 * 62.0 / 2835.0))));
    }
    if ax > 20.0 {
        return 1f64.copysign(x);
    }
    let e = (-2.0 * ax).exp();
    ((1.0 - e) / (1.0 + e)).copysign(x)
}

impl Activation {
    pub const ALL: [Activation; 5] =
        [Activation::Relu, Activation::Tanh, Activation::Sin, Activation::Sigmoid, Activation::ShiftedSigmoid];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => tanh(x),
            Activation::Sin => x.sin(),
            Activation::Sigmoid => sigmoid(x),
            Activation::ShiftedSigmoid => sigmoid(x) - 0.5,
        }
    }

    /// Derivative; `relu'(0) = 0`.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = tanh(x);
                1.0 - t * t
            }
            Activation::Sin => x.cos(),
            Activation::Sigmoid | Activation::ShiftedSigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
        }
    }

    /// Derivative at `x` when `a = eval(x)` is already known.
    #[inline]
    pub fn derivative_given(self, x: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Sin => x.cos(),
            Activation::Sigmoid => a * (1.0 - a),
            Activation::ShiftedSigmoid => (0.5 + a) * (0.5 - a),
        }
    }

    /// One-byte tag used in checkpoints.
    pub fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Sin => 2,
            Activation::Sigmoid => 3,
            Activation::ShiftedSigmoid => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sin => "sin",
            Activation::Sigmoid => "sigmoid",
            Activation::ShiftedSigmoid => "shifted_sigmoid",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown activation `{s}`")))
    }
}

/// One affine layer; `w` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Multilayer perceptron: activation on every hidden layer, linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
    activation: Activation,
}

/// Forward mode for single-sample evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Eval,
    /// Inverted dropout with rate `rate`, mask drawn from a ChaCha8 stream
    /// seeded with `seed`.
    Train { rate: f64, seed: u64 },
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    /// Input of the first layer, if the caller supplied it.
    pub input: Option<Array2<f64>>,
    /// Pre-activations of every hidden layer.
    pub preacts: Vec<Array2<f64>>,
    /// Activations of every hidden layer, before any dropout mask.
    pub acts: Vec<Array2<f64>>,
    pub masks: Vec<Option<Array2<f64>>>,
    pub output: Array2<f64>,
}

/// Parameter gradients, shaped like the layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub layers: Vec<Dense>,
}

impl Grads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Dense { w: Array2::zeros(l.w.raw_dim()), b: Array1::zeros(l.b.len()) })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Grads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.w += &b.w;
            a.b += &b.b;
        }
    }

    /// Same order as [`Mlp::write_params`].
    pub fn write_flat(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
    }
}

/// Result of [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct Backward {
    pub grads: Grads,
    /// Gradient with respect to the first-layer pre-activation.
    pub d_first: Array2<f64>,
    /// Gradient with respect to the input, when requested.
    pub d_input: Option<Array2<f64>>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases. `dims = [in, h1, ..., out]`.
    pub fn new(dims: &[usize], activation: Activation, rng: &mut impl Rng) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidArgument(format!("bad layer dimensions {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Dense {
                    w: Array2::from_shape_fn((fan_out, fan_in), |_| rng.gen_range(-limit..limit)),
                    b: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Self { layers, activation })
    }

    /// Builds a network from explicit layers, checking that they chain.
    pub fn from_layers(layers: Vec<Dense>, activation: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one layer".into()));
        }
        for l in &layers {
            if l.b.len() != l.w.nrows() {
                return Err(Error::DimensionMismatch { expected: l.w.nrows(), got: l.b.len() });
            }
        }
        for pair in layers.windows(2) {
            if pair[1].w.ncols() != pair[0].w.nrows() {
                return Err(Error::DimensionMismatch { expected: pair[0].w.nrows(), got: pair[1].w.ncols() });
            }
        }
        if layers.iter().any(|l| l.w.iter().chain(l.b.iter()).any(|x| !x.is_finite())) {
            return Err(Error::InvalidArgument("non-finite network parameter".into()));
        }
        Ok(Self { layers, activation })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.nrows()
    }

    /// `[in, h1, ..., out]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(|l| l.w.nrows()));
        d
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Appends parameters: per layer, `w` row-major then `b`.
    pub fn write_params(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
    }

    /// Inverse of [`write_params`](Self::write_params); returns the number
    /// of values consumed.
    pub fn read_params(&mut self, src: &[f64]) -> usize {
        let mut k = 0;
        for l in &mut self.layers {
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v = src[k];
                k += 1;
            }
        }
        k
    }

    /// Per-parameter L2 coefficient: `lambda` on weights, 0 on biases.
    pub fn write_l2_mask(&self, lambda: f64, out: &mut Vec<f64>) {
        for l in &self.layers {
            out.extend(std::iter::repeat_n(lambda, l.w.len()));
            out.extend(std::iter::repeat_n(0.0, l.b.len()));
        }
    }

    /// Inverted-dropout masks for a batch: entries are 0 with probability
    /// `rate`, `1/(1-rate)` otherwise. `None` when `rate == 0`.
    pub fn dropout_masks(&self, batch: usize, rate: f64, rng: &mut impl Rng) -> Vec<Option<Array2<f64>>> {
        let hidden = self.layers.len() - 1;
        if rate <= 0.0 {
            return vec![None; hidden];
        }
        let keep = 1.0 / (1.0 - rate);
        self.layers[..hidden]
            .iter()
            .map(|l| {
                Some(Array2::from_shape_fn((batch, l.w.nrows()), |_| {
                    if rng.gen::<f64>() < rate {
                        0.0
                    } else {
                        keep
                    }
                }))
            })
            .collect()
    }

    /// Batched forward pass; `x` is `batch × in`.
    pub fn forward_batch(&self, x: ArrayView2<f64>, masks: &[Option<Array2<f64>>]) -> Result<Cache> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: x.ncols() });
        }
        let first = x.dot(&self.layers[0].w.t()) + &self.layers[0].b;
        let mut cache = self.forward_from_first(first, masks)?;
        cache.input = Some(x.to_owned());
        Ok(cache)
    }

    /// Runs the network from a precomputed first-layer pre-activation
    /// (`batch × h1`). Used when the first layer is evaluated by other means.
    pub fn forward_from_first(&self, first: Array2<f64>, masks: &[Option<Array2<f64>>]) -> Result<Cache> {
        let n = self.layers.len();
        if first.ncols() != self.layers[0].w.nrows() {
            return Err(Error::DimensionMismatch { expected: self.layers[0].w.nrows(), got: first.ncols() });
        }
        if !masks.is_empty() && masks.len() != n - 1 {
            return Err(Error::DimensionMismatch { expected: n - 1, got: masks.len() });
        }
        let act = self.activation;
        let mut preacts = Vec::with_capacity(n - 1);
        let mut acts = Vec::with_capacity(n - 1);
        let mut z = first;
        for i in 1..n {
            let a = z.mapv(|v| act.eval(v));
            let next = match masks.get(i - 1) {
                Some(Some(mask)) => (&a * mask).dot(&self.layers[i].w.t()),
                _ => a.dot(&self.layers[i].w.t()),
            } + &self.layers[i].b;
            preacts.push(z);
            acts.push(a);
            z = next;
        }
        let masks = if masks.is_empty() { vec![None; n - 1] } else { masks.to_vec() };
        Ok(Cache { input: None, preacts, acts, masks, output: z })
    }

    /// Backpropagates `d_out` (`batch × out`). The first-layer weight
    /// gradient is only filled when the cache holds the input.
    pub fn backward(&self, cache: &Cache, d_out: &Array2<f64>, want_input_grad: bool) -> Backward {
        let n = self.layers.len();
        let act = self.activation;
        let mut grads = Grads::zeros_like(self);
        let mut delta = d_out.clone();
        for i in (1..n).rev() {
            let mask = &cache.masks[i - 1];
            grads.layers[i].w = match mask {
                Some(mk) => delta.t().dot(&(&cache.acts[i - 1] * mk)),
                None => delta.t().dot(&cache.acts[i - 1]),
            };
            grads.layers[i].b = delta.sum_axis(Axis(0));
            let mut up = delta.dot(&self.layers[i].w);
            if let Some(mk) = mask {
                up *= mk;
            }
            ndarray::Zip::from(&mut up)
                .and(&cache.preacts[i - 1])
                .and(&cache.acts[i - 1])
                .for_each(|u, &z, &a| *u *= act.derivative_given(z, a));
            delta = up;
        }
        grads.layers[0].b = delta.sum_axis(Axis(0));
        if let Some(x) = &cache.input {
            grads.layers[0].w = delta.t().dot(x);
        }
        let d_input = want_input_grad.then(|| delta.dot(&self.layers[0].w));
        Backward { grads, d_first: delta, d_input }
    }

    /// Single-sample forward pass.
    pub fn forward(&self, x: &[f64], mode: Mode) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        let masks = match mode {
            Mode::Eval => vec![],
            Mode::Train { rate, seed } => {
                let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
                self.dropout_masks(1, rate, &mut rng)
            }
        };
        Ok(self.forward_batch(view, &masks)?.output.into_raw_vec_and_offset().0)
    }
}
