//! Mini-batch training with plateau learning-rate decay and early stopping.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Adam, AdamParams, Corruption, Mode, Network};
use crate::detectors::{reconstruction_errors, training_errors, PerResolution, DEFAULT_ALPHA};
use crate::encoding::{EncodedBatch, EncodingLayout};
use crate::seed;
use crate::{Error, Result};

fn d_batch_size() -> usize {
    50
}
fn d_max_epochs() -> usize {
    200
}
fn d_early_stop() -> usize {
    10
}
fn d_lr() -> f64 {
    0.001
}
fn d_plateau() -> usize {
    5
}
fn d_factor() -> f64 {
    0.1
}
fn d_beta1() -> f64 {
    0.9
}
fn d_beta2() -> f64 {
    0.99
}
fn d_epsilon() -> f64 {
    1e-8
}
fn d_dropout() -> f64 {
    0.5
}
fn d_sigma() -> f64 {
    0.1
}
fn d_ratio() -> f64 {
    0.5
}
fn d_hidden() -> usize {
    2
}
fn d_validation() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "d_batch_size")]
    pub batch_size: usize,
    #[serde(default = "d_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "d_early_stop")]
    pub early_stop_patience: usize,
    #[serde(default = "d_lr")]
    pub lr: f64,
    #[serde(default = "d_plateau")]
    pub lr_plateau_patience: usize,
    #[serde(default = "d_factor")]
    pub lr_factor: f64,
    #[serde(default = "d_beta1")]
    pub beta1: f64,
    #[serde(default = "d_beta2")]
    pub beta2: f64,
    #[serde(default = "d_epsilon")]
    pub epsilon: f64,
    #[serde(default = "d_dropout")]
    pub dropout_rate: f64,
    #[serde(default)]
    pub noise_mu: f64,
    #[serde(default = "d_sigma")]
    pub noise_sigma: f64,
    #[serde(default = "d_ratio")]
    pub hidden_size_ratio: f64,
    #[serde(default = "d_hidden")]
    pub n_hidden_layers: usize,
    #[serde(default = "d_validation")]
    pub validation_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.batch_size == 0 {
            return bad("batch_size must be ≥ 1".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be ≥ 1".into());
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.lr_factor > 0.0 && self.lr_factor <= 1.0) {
            return bad(format!("lr_factor must be in (0, 1], got {}", self.lr_factor));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} must be in [0, 1), got {b}"));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate must be in [0, 1), got {}", self.dropout_rate));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0 && self.noise_mu.is_finite())
        {
            return bad("noise parameters must be finite with sigma ≥ 0".into());
        }
        if !(self.hidden_size_ratio > 0.0 && self.hidden_size_ratio.is_finite()) {
            return bad(format!(
                "hidden_size_ratio must be positive, got {}",
                self.hidden_size_ratio
            ));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad(format!(
                "validation_fraction must be in [0, 1), got {}",
                self.validation_fraction
            ));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamParams {
        AdamParams {
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn corruption(&self) -> Corruption {
        Corruption {
            noise_mu: self.noise_mu,
            noise_sigma: self.noise_sigma,
            dropout: self.dropout_rate,
        }
    }

    /// Learning rate after `plateaus` reductions.
    pub fn lr_after(&self, plateaus: u32) -> f64 {
        self.lr * self.lr_factor.powi(plateaus as i32)
    }
}

/// Layer sizes `[d, h, …, h, d]` with `h = round(ratio · d)`.
pub fn hidden_sizes(width: usize, ratio: f64, n_hidden: usize) -> Vec<usize> {
    let h = ((width as f64 * ratio).round() as usize).max(1);
    let mut sizes = vec![width];
    sizes.extend(std::iter::repeat_n(h, n_hidden));
    sizes.push(width);
    sizes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights were kept (1-based).
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub plateaus: u32,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,lr\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_loss, e.val_loss, e.lr));
        }
        out
    }
}

/// A trained autoencoder with everything needed to score new logs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedNetwork {
    pub network: Network,
    pub layout: EncodingLayout,
    pub config: TrainConfig,
    /// Mean training-set reconstruction error per resolution.
    pub error_means: PerResolution,
    /// Default threshold scale stored with the model.
    pub alpha: f64,
    pub history: TrainHistory,
}

fn mse(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    let n = a.len() as f64;
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n
}

fn diverged(what: &str, epoch: usize, value: f64) -> Error {
    Error::Training(format!(
        "{what} became {value} at epoch {epoch}; lower the learning rate or check the input"
    ))
}

/// Trains an autoencoder that reproduces the rows of `x`.
///
/// Rows are split once into a training part and a validation holdout. Each epoch
/// visits the training rows in a fresh seeded order in mini-batches. The weights
/// with the lowest validation loss are returned.
pub fn train_network(x: &Array2<f64>, cfg: &TrainConfig) -> Result<(Network, TrainHistory)> {
    cfg.validate()?;
    let n = x.nrows();
    if n < 2 {
        return Err(Error::Training(format!("need at least 2 rows, got {n}")));
    }
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut seed::rng(seed::derive(cfg.seed, "split")));
    let n_val = if cfg.validation_fraction > 0.0 {
        ((n as f64 * cfg.validation_fraction).round() as usize).clamp(1, n - 1)
    } else {
        0
    };
    let (val_rows, train_rows) = rows.split_at(n_val);
    let x_train = x.select(Axis(0), train_rows);
    // Without a holdout the clean training loss drives the schedule.
    let x_val = if n_val > 0 {
        x.select(Axis(0), val_rows)
    } else {
        x_train.clone()
    };

    let sizes = hidden_sizes(x.ncols(), cfg.hidden_size_ratio, cfg.n_hidden_layers);
    let mut net = Network::glorot(&sizes, &mut seed::rng(seed::derive(cfg.seed, "init")))?;
    let mut adam = Adam::new(&net, cfg.adam());
    let mut order_rng = seed::rng(seed::derive(cfg.seed, "shuffle"));
    let mut noise_rng = seed::rng(seed::derive(cfg.seed, "corruption"));
    let corruption = Mode::Train(cfg.corruption());

    let mut history = TrainHistory {
        best_val_loss: f64::INFINITY,
        ..TrainHistory::default()
    };
    let mut best = net.clone();
    let (mut since_best, mut since_plateau) = (0usize, 0usize);
    let mut order: Vec<usize> = (0..x_train.nrows()).collect();

    for epoch in 1..=cfg.max_epochs {
        let lr = cfg.lr_after(history.plateaus);
        order.shuffle(&mut order_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let xb = x_train.select(Axis(0), chunk);
            let cache = net.forward(xb.view(), corruption, &mut noise_rng)?;
            let (loss, grads) = net.backward(&cache, xb.view())?;
            if !loss.is_finite() {
                return Err(diverged("training loss", epoch, loss));
            }
            adam.step(&mut net, &grads, lr);
            loss_sum += loss * chunk.len() as f64;
        }
        let train_loss = loss_sum / order.len() as f64;
        let val_loss = mse(net.infer(x_val.view())?.view(), x_val.view());
        if !val_loss.is_finite() {
            return Err(diverged("validation loss", epoch, val_loss));
        }
        log::debug!("epoch {epoch}: train {train_loss:.6} val {val_loss:.6} lr {lr}");
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            lr,
        });
        if val_loss < history.best_val_loss {
            history.best_val_loss = val_loss;
            history.best_epoch = epoch;
            best = net.clone();
            since_best = 0;
            since_plateau = 0;
        } else {
            since_best += 1;
            since_plateau += 1;
            if since_best >= cfg.early_stop_patience {
                history.stopped_early = true;
                break;
            }
            if since_plateau >= cfg.lr_plateau_patience {
                history.plateaus += 1;
                since_plateau = 0;
            }
        }
    }
    Ok((best, history))
}

/// Trains on an encoded log and records the training-set error means.
pub fn train(
    batch: &EncodedBatch,
    layout: &EncodingLayout,
    cfg: &TrainConfig,
) -> Result<TrainedNetwork> {
    if batch.width() != layout.total_width() {
        return Err(Error::Shape {
            expected: layout.total_width(),
            actual: batch.width(),
        });
    }
    let (network, history) = train_network(&batch.matrix, cfg)?;
    let errors = reconstruction_errors(&network, layout, batch)?;
    let error_means = training_errors(&errors, &batch.lengths, layout).means()?;
    Ok(TrainedNetwork {
        network,
        layout: layout.clone(),
        config: cfg.clone(),
        error_means,
        alpha: DEFAULT_ALPHA,
        history,
    })
}
