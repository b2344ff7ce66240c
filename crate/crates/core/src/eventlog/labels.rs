//! Ground-truth labels at trace, event and attribute resolution.
//!
//! The sidecar is JSON Lines keyed by case id. Event and attribute arrays are padded
//! to the log's maximum trace length with `"pad"` markers. Attribute slots are ordered
//! activity first, then the log's attributes.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{write_atomic, EventLog};
use crate::anomalies::{AnomalyKind, AnomalyRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Anomaly,
    Pad,
}

impl Label {
    pub fn is_anomaly(self) -> bool {
        self == Label::Anomaly
    }

    pub fn is_pad(self) -> bool {
        self == Label::Pad
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceVerdict {
    Normal,
    Anomaly(AnomalyKind),
}

impl TraceVerdict {
    pub fn is_anomaly(self) -> bool {
        matches!(self, TraceVerdict::Anomaly(_))
    }
}

impl Serialize for TraceVerdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TraceVerdict::Normal => s.serialize_str("normal"),
            TraceVerdict::Anomaly(kind) => s.serialize_str(kind.name()),
        }
    }
}

impl<'de> Deserialize<'de> for TraceVerdict {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "normal" {
            return Ok(TraceVerdict::Normal);
        }
        s.parse::<AnomalyKind>()
            .map(TraceVerdict::Anomaly)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceLabels {
    pub case_id: String,
    pub trace: TraceVerdict,
    pub events: Vec<Label>,
    pub attrs: Vec<Vec<Label>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anomaly: Option<AnomalyRecord>,
}

impl TraceLabels {
    /// All-normal labels for a trace of `len` events padded to `max_len`.
    pub fn normal(case_id: impl Into<String>, len: usize, max_len: usize, n_fields: usize) -> Self {
        let events = (0..max_len)
            .map(|i| if i < len { Label::Normal } else { Label::Pad })
            .collect::<Vec<_>>();
        let attrs = events.iter().map(|&l| vec![l; n_fields]).collect();
        Self {
            case_id: case_id.into(),
            trace: TraceVerdict::Normal,
            events,
            attrs,
            anomaly: None,
        }
    }

    /// Number of real (non-padding) events.
    pub fn len(&self) -> usize {
        self.events.iter().filter(|l| !l.is_pad()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Marks attribute slot `field` of event `event` anomalous and propagates the
    /// verdict to the event and the trace.
    pub fn mark(&mut self, event: usize, field: usize, kind: AnomalyKind) {
        self.attrs[event][field] = Label::Anomaly;
        self.events[event] = Label::Anomaly;
        self.trace = TraceVerdict::Anomaly(kind);
    }

    /// Cross-resolution consistency: padding is a suffix shared by events and
    /// attributes, an event is anomalous iff one of its attributes is, and the trace
    /// is anomalous iff one of its events is.
    pub fn check_consistency(&self) -> std::result::Result<(), String> {
        if self.attrs.len() != self.events.len() {
            return Err("attribute rows do not match event count".into());
        }
        let len = self.len();
        for (i, (&ev, attrs)) in self.events.iter().zip(&self.attrs).enumerate() {
            if (i < len) == ev.is_pad() {
                return Err(format!("padding is not a suffix at event {i}"));
            }
            let pads_ok = if ev.is_pad() {
                attrs.iter().all(|a| a.is_pad())
            } else {
                !attrs.iter().any(|a| a.is_pad())
            };
            if !pads_ok {
                return Err(format!("padding mismatch at event {i}"));
            }
            if ev.is_anomaly() != attrs.iter().any(|a| a.is_anomaly()) {
                return Err(format!("event {i} verdict disagrees with its attributes"));
            }
        }
        if self.trace.is_anomaly() != self.events.iter().any(|e| e.is_anomaly()) {
            return Err("trace verdict disagrees with its events".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub traces: Vec<TraceLabels>,
}

impl LabelSet {
    /// All-normal labels for every trace of `log`.
    pub fn all_normal(log: &EventLog) -> Self {
        let n_fields = 1 + log.attribute_names().len();
        let max_len = log.max_trace_len();
        Self {
            traces: log
                .traces()
                .iter()
                .map(|t| TraceLabels::normal(&t.case_id, t.len(), max_len, n_fields))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn anomalous_count(&self) -> usize {
        self.traces.iter().filter(|t| t.trace.is_anomaly()).count()
    }

    /// Checks that labels and log describe the same traces in the same order.
    pub fn check_against(&self, log: &EventLog) -> Result<()> {
        if self.traces.len() != log.len() {
            return Err(Error::Labels(format!(
                "{} label rows for {} traces",
                self.traces.len(),
                log.len()
            )));
        }
        for (labels, trace) in self.traces.iter().zip(log.traces()) {
            if labels.case_id != trace.case_id {
                return Err(Error::Labels(format!(
                    "expected case {}, found {}",
                    trace.case_id, labels.case_id
                )));
            }
            if labels.len() != trace.len() {
                return Err(Error::Labels(format!(
                    "case {} has {} events but {} event labels",
                    trace.case_id,
                    trace.len(),
                    labels.len()
                )));
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for t in &self.traces {
            out.push_str(&serde_json::to_string(t)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses a sidecar and validates every row against `log`.
    pub fn from_jsonl(text: &str, log: &EventLog) -> Result<Self> {
        let known: HashSet<&str> = log.traces().iter().map(|t| t.case_id.as_str()).collect();
        let mut traces = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let location = format!("line {}", lineno + 1);
            let row: TraceLabels =
                serde_json::from_str(line).map_err(|e| Error::parse(&location, e.to_string()))?;
            if !known.contains(row.case_id.as_str()) {
                return Err(Error::Labels(format!(
                    "{location}: unknown case_id {:?}",
                    row.case_id
                )));
            }
            row.check_consistency()
                .map_err(|m| Error::Labels(format!("{location}: {m}")))?;
            traces.push(row);
        }
        let set = LabelSet { traces };
        set.check_against(log)?;
        Ok(set)
    }
}

pub fn write_labels(labels: &LabelSet, path: &Path) -> Result<()> {
    write_atomic(path, labels.to_jsonl()?.as_bytes())
}

pub fn read_labels(path: &Path, log: &EventLog) -> Result<LabelSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    LabelSet::from_jsonl(&text, log)
}
