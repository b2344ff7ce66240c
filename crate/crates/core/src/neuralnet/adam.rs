//! Adam optimizer with bias-corrected moment estimates.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Gradients, Network};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.99,
            epsilon: 1e-8,
        }
    }
}

/// One Adam step over a flat parameter block. `t` is the 1-based step count.
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    lr: f64,
    cfg: &AdamParams,
) {
    assert!(t >= 1, "Adam step count starts at 1");
    assert!(params.len() == grads.len() && m.len() == grads.len() && v.len() == grads.len());
    let exp = i32::try_from(t).unwrap_or(i32::MAX);
    let c1 = 1.0 - cfg.beta1.powi(exp);
    let c2 = 1.0 - cfg.beta2.powi(exp);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Moment state for every parameter of a [`Network`].
#[derive(Debug, Clone)]
pub struct Adam {
    pub params: AdamParams,
    moments: Vec<[(Array2<f64>, Array1<f64>); 2]>,
    t: u64,
}

impl Adam {
    pub fn new(net: &Network, params: AdamParams) -> Self {
        let moments = net
            .layers
            .iter()
            .map(|l| {
                let zero = (Array2::zeros(l.weights.raw_dim()), Array1::zeros(l.bias.len()));
                [zero.clone(), zero]
            })
            .collect();
        Self {
            params,
            moments,
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, net: &mut Network, grads: &Gradients, lr: f64) {
        self.t += 1;
        for ((layer, (dw, db)), [m, v]) in net
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.moments)
        {
            adam_update(
                layer.weights.as_slice_mut().expect("standard layout"),
                dw.as_slice().expect("standard layout"),
                m.0.as_slice_mut().expect("standard layout"),
                v.0.as_slice_mut().expect("standard layout"),
                self.t,
                lr,
                &self.params,
            );
            adam_update(
                layer.bias.as_slice_mut().expect("contiguous"),
                db.as_slice().expect("contiguous"),
                m.1.as_slice_mut().expect("contiguous"),
                v.1.as_slice_mut().expect("contiguous"),
                self.t,
                lr,
                &self.params,
            );
        }
    }
}
