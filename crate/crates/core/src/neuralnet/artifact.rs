//! Model file: magic, header length, JSON header, then raw weights.
//!
//! ```text
//! b"BPADDAE\0" | u64 LE header length | JSON header | f64 LE blocks
//! ```
//!
//! Each layer contributes its weight matrix (row-major, `inputs × outputs`) followed
//! by its bias vector. The header carries the layer sizes and activations, the
//! encoding layout, the training configuration and history, and the thresholds.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, Layer, Network, TrainConfig, TrainHistory, TrainedNetwork};
use crate::detectors::{PerResolution, Threshold};
use crate::encoding::EncodingLayout;
use crate::eventlog::write_atomic;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"BPADDAE\0";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    layer_sizes: Vec<usize>,
    activations: Vec<Activation>,
    layout: EncodingLayout,
    config: TrainConfig,
    threshold: Threshold,
    /// Informational: `alpha · mean` per resolution.
    taus: PerResolution,
    history: TrainHistory,
}

pub fn write_model(model: &TrainedNetwork) -> Result<Vec<u8>> {
    let threshold = Threshold::new(model.error_means, model.alpha)?;
    let header = Header {
        format_version: FORMAT_VERSION,
        layer_sizes: model.network.sizes(),
        activations: model.network.layers.iter().map(|l| l.activation).collect(),
        layout: model.layout.clone(),
        config: model.config.clone(),
        threshold,
        taus: threshold.taus(),
        history: model.history.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(16 + json.len() + 8 * model.network.n_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for layer in &model.network.layers {
        for v in layer.weights.iter().chain(layer.bias.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_model(bytes: &[u8]) -> Result<TrainedNetwork> {
    let bad = |m: &str| Error::Artifact(m.to_string());
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("not a model file (bad magic)"));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = bytes
        .get(16..16usize.saturating_add(len))
        .ok_or_else(|| bad("truncated header"))?;
    // Check the version before the full schema so newer files get a clear message.
    let probe: serde_json::Value = serde_json::from_slice(body)?;
    match probe.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(FORMAT_VERSION) => {}
        Some(v) => {
            return Err(Error::Artifact(format!(
                "unsupported model format version {v} (this build reads {FORMAT_VERSION})"
            )))
        }
        None => return Err(bad("header has no format_version")),
    }
    let header: Header = serde_json::from_value(probe)?;
    let sizes = &header.layer_sizes;
    if sizes.len() < 2 || header.activations.len() != sizes.len() - 1 {
        return Err(bad("inconsistent layer description"));
    }
    if sizes[0] != header.layout.total_width() || *sizes.last().unwrap() != sizes[0] {
        return Err(bad("layer sizes do not match the encoding layout"));
    }
    let mut floats = bytes[16 + len..].chunks_exact(8);
    if floats.remainder().len() != 0 {
        return Err(bad("weight block is not a whole number of f64 values"));
    }
    let expected: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    if floats.len() != expected {
        return Err(Error::Artifact(format!(
            "expected {expected} weights, found {}",
            floats.len()
        )));
    }
    let mut next = || f64::from_le_bytes(floats.next().expect("counted").try_into().unwrap());
    let mut layers = Vec::with_capacity(sizes.len() - 1);
    for (w, &activation) in sizes.windows(2).zip(&header.activations) {
        let weights = Array2::from_shape_simple_fn((w[0], w[1]), &mut next);
        let bias = Array1::from_shape_simple_fn(w[1], &mut next);
        layers.push(Layer {
            weights,
            bias,
            activation,
        });
    }
    Ok(TrainedNetwork {
        network: Network { layers },
        layout: header.layout,
        config: header.config,
        error_means: header.threshold.means,
        alpha: header.threshold.alpha,
        history: header.history,
    })
}

pub fn save_model(model: &TrainedNetwork, path: &Path) -> Result<()> {
    write_atomic(path, &write_model(model)?)
}

pub fn load_model(path: &Path) -> Result<TrainedNetwork> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_model(&bytes)
}
