//! Feed-forward denoising autoencoder.
//!
//! Dense layers with rectified hidden units and linear output, trained on mean
//! squared reconstruction error with hand-written backpropagation. In training mode
//! the input is corrupted with additive Gaussian noise and every hidden activation
//! goes through inverted dropout; the target is always the clean input.

mod adam;
mod artifact;
mod train;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng as _;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::seed::Rng;
use crate::{Error, Result};

pub use adam::{adam_update, Adam, AdamParams};
pub use artifact::{load_model, read_model, save_model, write_model, FORMAT_VERSION};
pub use train::{
    hidden_sizes, train, train_network, EpochRecord, TrainConfig, TrainHistory, TrainedNetwork,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `inputs × outputs`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }
}

/// Corruption applied in training mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corruption {
    pub noise_mu: f64,
    pub noise_sigma: f64,
    pub dropout: f64,
}

impl Corruption {
    pub const NONE: Corruption = Corruption {
        noise_mu: 0.0,
        noise_sigma: 0.0,
        dropout: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Train(Corruption),
    Infer,
}

/// Intermediate values of a training-mode pass, consumed by [`Network::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of each layer (after noise or dropout).
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Array2<f64>>,
    /// Dropout scale (0 or 1/(1-p)) applied to each hidden layer's output.
    masks: Vec<Option<Array2<f64>>>,
    pub output: Array2<f64>,
}

/// Gradient per layer: `(d weights, d bias)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
}

impl Network {
    /// Glorot-uniform weights, zero biases; ReLU on hidden layers, linear output.
    pub fn glorot(sizes: &[usize], rng: &mut Rng) -> Result<Self> {
        Self::build(sizes, |fan_in, fan_out| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new(-limit, limit).expect("positive limit");
            Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(rng))
        })
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        Self::build(sizes, |i, o| Array2::zeros((i, o)))
    }

    fn build(
        sizes: &[usize],
        mut init: impl FnMut(usize, usize) -> Array2<f64>,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| Layer {
                weights: init(w[0], w[1]),
                bias: Array1::zeros(w[1]),
                activation: if i + 1 == n {
                    Activation::Linear
                } else {
                    Activation::Relu
                },
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_width()];
        s.extend(self.layers.iter().map(Layer::outputs));
        s
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs()
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.input_width() {
            return Err(Error::Shape {
                expected: self.input_width(),
                actual: width,
            });
        }
        Ok(())
    }

    /// Deterministic reconstruction of a batch of rows.
    pub fn infer(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_width(x.ncols())?;
        let mut a = x.to_owned();
        for layer in &self.layers {
            let mut z = a.dot(&layer.weights);
            z += &layer.bias;
            if layer.activation == Activation::Relu {
                z.mapv_inplace(|v| v.max(0.0));
            }
            a = z;
        }
        Ok(a)
    }

    pub fn infer_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, row.len()), row).expect("contiguous row");
        Ok(self.infer(x)?.into_raw_vec_and_offset().0)
    }

    /// Forward pass keeping what backpropagation needs. In [`Mode::Infer`] no
    /// corruption is applied and `rng` is untouched.
    pub fn forward(
        &self,
        x: ArrayView2<'_, f64>,
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<ForwardCache> {
        self.check_width(x.ncols())?;
        let corruption = match mode {
            Mode::Train(c) => c,
            Mode::Infer => Corruption::NONE,
        };
        if !(0.0..1.0).contains(&corruption.dropout) {
            return Err(Error::Config(format!(
                "dropout {} outside [0, 1)",
                corruption.dropout
            )));
        }
        let mut a = x.to_owned();
        if corruption.noise_sigma > 0.0 || corruption.noise_mu != 0.0 {
            let normal = Normal::new(corruption.noise_mu, corruption.noise_sigma)
                .map_err(|e| Error::Config(format!("input noise: {e}")))?;
            a.mapv_inplace(|v| v + normal.sample(rng));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut masks = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut z = a.dot(&layer.weights);
            z += &layer.bias;
            let mut out = z.clone();
            let mut mask = None;
            if layer.activation == Activation::Relu {
                out.mapv_inplace(|v| v.max(0.0));
                if corruption.dropout > 0.0 {
                    let keep = 1.0 - corruption.dropout;
                    let scale = 1.0 / keep;
                    let m = Array2::from_shape_simple_fn(out.raw_dim(), || {
                        if rng.random::<f64>() < keep {
                            scale
                        } else {
                            0.0
                        }
                    });
                    out *= &m;
                    mask = Some(m);
                }
            }
            inputs.push(std::mem::replace(&mut a, out));
            pre.push(z);
            masks.push(mask);
        }
        Ok(ForwardCache {
            inputs,
            pre,
            masks,
            output: a,
        })
    }

    /// Mean squared error of the cached output against `target` (averaged over rows
    /// and columns) and its gradient with respect to every parameter.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        target: ArrayView2<'_, f64>,
    ) -> Result<(f64, Gradients)> {
        if target.dim() != cache.output.dim() {
            return Err(Error::Shape {
                expected: cache.output.len(),
                actual: target.len(),
            });
        }
        let n = cache.output.len() as f64;
        let mut delta = &cache.output - &target;
        let loss = delta.iter().map(|d| d * d).sum::<f64>() / n;
        delta *= 2.0 / n;

        let mut grads = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            if layer.activation == Activation::Relu {
                Zip::from(&mut delta).and(&cache.pre[l]).for_each(|d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            let dw = cache.inputs[l].t().dot(&delta);
            let db = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut upstream = delta.dot(&layer.weights.t());
                if let Some(mask) = &cache.masks[l - 1] {
                    upstream *= mask;
                }
                delta = upstream;
            }
            grads.push((dw, db));
        }
        grads.reverse();
        Ok((loss, Gradients { layers: grads }))
    }
}
