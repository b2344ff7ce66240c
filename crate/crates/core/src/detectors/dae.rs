//! Reconstruction-error scoring with a trained denoising autoencoder.

use ndarray::{s, Axis};

use super::{ErrorLists, RawTraceScores, ScoreReport, Threshold};
use crate::encoding::{encode, slot_errors, EncodedBatch, EncodingLayout, SlotErrors};
use crate::eventlog::EventLog;
use crate::neuralnet::{Network, TrainedNetwork};
use crate::Result;

/// Rows reconstructed per inference call; bounds peak memory.
const CHUNK: usize = 512;

/// Per-row reconstruction errors of `batch` in inference mode.
pub fn reconstruction_errors(
    net: &Network,
    layout: &EncodingLayout,
    batch: &EncodedBatch,
) -> Result<Vec<SlotErrors>> {
    let mut out = Vec::with_capacity(batch.n_rows());
    let n = batch.n_rows();
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let input = batch.matrix.slice(s![start..end, ..]);
        let output = net.infer(input)?;
        for (x, y) in input.axis_iter(Axis(0)).zip(output.axis_iter(Axis(0))) {
            out.push(slot_errors(
                x.as_slice().expect("row-major"),
                y.as_slice().expect("row-major"),
                layout,
            )?);
        }
        start = end;
    }
    Ok(out)
}

fn event_score(errors: &SlotErrors, event: usize, n_fields: usize) -> f64 {
    let slots = &errors.slots[event * n_fields..(event + 1) * n_fields];
    slots.iter().sum::<f64>() / n_fields as f64
}

/// Training-set scores per resolution; padding positions are excluded from the
/// event and attribute lists.
pub fn training_errors(
    errors: &[SlotErrors],
    lengths: &[usize],
    layout: &EncodingLayout,
) -> ErrorLists {
    let nf = layout.n_fields();
    let mut lists = ErrorLists::default();
    for (e, &len) in errors.iter().zip(lengths) {
        lists.trace.push(e.trace);
        for ev in 0..len {
            lists.event.push(event_score(e, ev, nf));
            lists
                .attribute
                .extend_from_slice(&e.slots[ev * nf..(ev + 1) * nf]);
        }
    }
    lists
}

/// Trace score is the full-row mean squared error, event score the mean of the
/// event's slot errors, attribute score the slot error itself.
pub fn dae_score(model: &TrainedNetwork, log: &EventLog, alpha: f64) -> Result<ScoreReport> {
    let batch = encode(log, &model.layout)?;
    let errors = reconstruction_errors(&model.network, &model.layout, &batch)?;
    let nf = model.layout.n_fields();
    let raw = errors
        .iter()
        .zip(&batch.lengths)
        .map(|(e, &len)| RawTraceScores {
            score: e.trace,
            events: (0..len).map(|ev| event_score(e, ev, nf)).collect(),
            attrs: (0..len)
                .map(|ev| e.slots[ev * nf..(ev + 1) * nf].to_vec())
                .collect(),
        })
        .collect();
    let threshold = Threshold::new(model.error_means, alpha)?;
    ScoreReport::new(
        "dae",
        log,
        model.layout.max_len(),
        threshold.taus(),
        raw,
    )
}
