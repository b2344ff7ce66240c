//! Sliding-window frequency detectors (t-STIDE and its attribute-aware variant).
//!
//! Training counts every length-`k` window of every trace. A window's score is the
//! negative log of its relative training frequency, with unseen windows floored at
//! half a pseudo-count. A trace scores the maximum over its windows; each window's
//! score is attributed to its last event (and that event's slots), taking the
//! maximum where windows collide. Traces shorter than `k` form a single truncated
//! window closed by [`END_MARKER`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ErrorLists, PerResolution, RawTraceScores, ScoreReport, Threshold};
use crate::eventlog::{Event, EventLog, Trace};
use crate::{Error, Result};

/// Token closing a window cut short by the end of its trace.
pub const END_MARKER: &str = "<end>";

/// Pseudo-count given to windows never seen in training.
const SMOOTHING: f64 = 0.5;

const FIELD_SEP: char = '\u{1f}';
const EVENT_SEP: char = '\u{1e}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowVariant {
    /// Windows of activities.
    Activity,
    /// Windows of (activity, attribute values) tuples.
    ActivityAttributes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowModel {
    pub k: usize,
    pub variant: WindowVariant,
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
    /// Mean training score per resolution.
    pub training_means: PerResolution,
}

fn token(event: &Event, variant: WindowVariant, out: &mut String) {
    out.push_str(&event.activity);
    if variant == WindowVariant::ActivityAttributes {
        for a in &event.attrs {
            out.push(FIELD_SEP);
            out.push_str(a);
        }
    }
}

/// Window keys of a trace paired with the index of their last event.
fn windows(trace: &Trace, k: usize, variant: WindowVariant) -> Vec<(String, usize)> {
    let key = |events: &[Event], truncated: bool| {
        let mut s = String::new();
        for (i, e) in events.iter().enumerate() {
            if i > 0 {
                s.push(EVENT_SEP);
            }
            token(e, variant, &mut s);
        }
        if truncated {
            s.push(EVENT_SEP);
            s.push_str(END_MARKER);
        }
        s
    };
    let n = trace.len();
    if n == 0 {
        return Vec::new();
    }
    if n < k {
        return vec![(key(&trace.events, true), n - 1)];
    }
    trace
        .events
        .windows(k)
        .enumerate()
        .map(|(i, w)| (key(w, false), i + k - 1))
        .collect()
}

impl WindowModel {
    pub fn count(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    fn window_score(&self, key: &str) -> f64 {
        let c = (self.count(key) as f64).max(SMOOTHING);
        -(c / self.total as f64).ln()
    }

    /// The largest possible window score (that of an unseen window).
    pub fn max_score(&self) -> f64 {
        -(SMOOTHING / self.total as f64).ln()
    }

    fn raw_scores(&self, trace: &Trace, n_fields: usize) -> RawTraceScores {
        let mut events = vec![0.0f64; trace.len()];
        let mut score = 0.0f64;
        for (key, last) in windows(trace, self.k, self.variant) {
            let s = self.window_score(&key);
            score = score.max(s);
            events[last] = events[last].max(s);
        }
        let attrs = events
            .iter()
            .map(|&s| {
                let mut row = vec![0.0; n_fields];
                match self.variant {
                    WindowVariant::Activity => row[0] = s,
                    WindowVariant::ActivityAttributes => row.fill(s),
                }
                row
            })
            .collect();
        RawTraceScores {
            score,
            events,
            attrs,
        }
    }
}

pub fn tstide_fit(log: &EventLog, k: usize, variant: WindowVariant) -> Result<WindowModel> {
    if k < 2 {
        return Err(Error::Config(format!("window length must be ≥ 2, got {k}")));
    }
    let mut counts = BTreeMap::new();
    let mut total = 0u64;
    for trace in log.traces() {
        for (key, _) in windows(trace, k, variant) {
            *counts.entry(key).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyLog);
    }
    let mut model = WindowModel {
        k,
        variant,
        counts,
        total,
        training_means: PerResolution::default(),
    };
    let n_fields = 1 + log.attribute_names().len();
    let mut lists = ErrorLists::default();
    for trace in log.traces() {
        let raw = model.raw_scores(trace, n_fields);
        lists.trace.push(raw.score);
        lists.event.extend_from_slice(&raw.events);
        for row in &raw.attrs {
            match variant {
                WindowVariant::Activity => lists.attribute.push(row[0]),
                WindowVariant::ActivityAttributes => lists.attribute.extend_from_slice(row),
            }
        }
    }
    model.training_means = lists.means()?;
    Ok(model)
}

pub fn tstide_score(model: &WindowModel, log: &EventLog, alpha: f64) -> Result<ScoreReport> {
    let n_fields = 1 + log.attribute_names().len();
    let raw = log
        .traces()
        .iter()
        .map(|t| model.raw_scores(t, n_fields))
        .collect();
    let name = match model.variant {
        WindowVariant::Activity => "tstide",
        WindowVariant::ActivityAttributes => "tstide+",
    };
    let threshold = Threshold::new(model.training_means, alpha)?;
    ScoreReport::new(name, log, log.max_trace_len(), threshold.taus(), raw)
}
