//! Score reports and their serializations (JSON Lines, heatmap CSV and SVG).

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PerResolution;
use crate::eventlog::{write_atomic, EventLog, Trace};
use crate::{Error, Result};

/// Detector output for one trace before thresholding.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTraceScores {
    pub score: f64,
    /// One score per real event.
    pub events: Vec<f64>,
    /// `[event][field]`, field 0 being the activity.
    pub attrs: Vec<Vec<f64>>,
}

/// Scores and verdicts of one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceScore {
    pub case_id: String,
    pub score: f64,
    pub anomalous: bool,
    pub event_scores: Vec<f64>,
    pub event_anomalous: Vec<bool>,
    pub attr_scores: Vec<Vec<f64>>,
    pub attr_anomalous: Vec<Vec<bool>>,
    /// Observed values `[event][field]`.
    pub values: Vec<Vec<String>>,
}

impl TraceScore {
    fn apply(&mut self, taus: &PerResolution) {
        self.anomalous = self.score > taus.trace;
        self.event_anomalous = self.event_scores.iter().map(|&s| s > taus.event).collect();
        self.attr_anomalous = self
            .attr_scores
            .iter()
            .map(|row| row.iter().map(|&s| s > taus.attribute).collect())
            .collect();
    }

    pub fn len(&self) -> usize {
        self.event_scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_scores.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub detector: String,
    /// Field names, activity first.
    pub field_names: Vec<String>,
    /// Number of event positions in the heatmap.
    pub max_len: usize,
    pub taus: PerResolution,
    pub traces: Vec<TraceScore>,
}

fn observed_values(trace: &Trace) -> Vec<Vec<String>> {
    trace
        .events
        .iter()
        .map(|e| {
            std::iter::once(e.activity.clone())
                .chain(e.attrs.iter().cloned())
                .collect()
        })
        .collect()
}

impl ScoreReport {
    /// Assembles a report; `raw` is aligned with the traces of `log`.
    pub fn new(
        detector: impl Into<String>,
        log: &EventLog,
        max_len: usize,
        taus: PerResolution,
        raw: Vec<RawTraceScores>,
    ) -> Result<Self> {
        if raw.len() != log.len() {
            return Err(Error::Shape {
                expected: log.len(),
                actual: raw.len(),
            });
        }
        let n_fields = 1 + log.attribute_names().len();
        let mut traces = Vec::with_capacity(raw.len());
        for (r, trace) in raw.into_iter().zip(log.traces()) {
            if r.events.len() != trace.len()
                || r.attrs.len() != trace.len()
                || r.attrs.iter().any(|a| a.len() != n_fields)
            {
                return Err(Error::Shape {
                    expected: trace.len() * n_fields,
                    actual: r.attrs.iter().map(Vec::len).sum(),
                });
            }
            let mut t = TraceScore {
                case_id: trace.case_id.clone(),
                score: r.score,
                anomalous: false,
                event_scores: r.events,
                event_anomalous: Vec::new(),
                attr_scores: r.attrs,
                attr_anomalous: Vec::new(),
                values: observed_values(trace),
            };
            t.apply(&taus);
            traces.push(t);
        }
        let field_names = std::iter::once("activity".to_string())
            .chain(log.attribute_names().iter().cloned())
            .collect();
        Ok(Self {
            detector: detector.into(),
            field_names,
            max_len: max_len.max(log.max_trace_len()),
            taus,
            traces,
        })
    }

    /// Re-derives every verdict from new thresholds; scores are unchanged.
    pub fn rethreshold(&mut self, taus: PerResolution) {
        self.taus = taus;
        for t in &mut self.traces {
            t.apply(&taus);
        }
    }

    pub fn n_fields(&self) -> usize {
        self.field_names.len()
    }

    pub fn anomalous_trace_count(&self) -> usize {
        self.traces.iter().filter(|t| t.anomalous).count()
    }

    /// One JSON object per trace.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for t in &self.traces {
            out.push_str(&serde_json::to_string(t)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn column_headers(&self) -> Vec<String> {
        (0..self.max_len)
            .flat_map(|e| self.field_names.iter().map(move |f| format!("e{e}:{f}")))
            .collect()
    }

    /// Attribute-score matrix: one row per trace, one column per slot; padding
    /// cells are empty.
    pub fn heatmap_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["case_id".to_string()];
        header.extend(self.column_headers());
        w.write_record(&header).map_err(csv_error)?;
        for t in &self.traces {
            let mut row = vec![t.case_id.clone()];
            for e in 0..self.max_len {
                for f in 0..self.n_fields() {
                    row.push(
                        t.attr_scores
                            .get(e)
                            .map(|r| r[f].to_string())
                            .unwrap_or_default(),
                    );
                }
            }
            w.write_record(&row).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Artifact(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Slot grid where cell darkness is proportional to the attribute score and
    /// anomalous cells are outlined; each cell shows the observed value.
    pub fn heatmap_svg(&self) -> String {
        const CELL_W: usize = 90;
        const CELL_H: usize = 18;
        const LABEL_W: usize = 70;
        let cols = self.max_len * self.n_fields();
        let width = LABEL_W + cols * CELL_W;
        let height = CELL_H * (self.traces.len() + 1);
        let max = self
            .traces
            .iter()
            .flat_map(|t| t.attr_scores.iter().flatten())
            .fold(0.0f64, |m, &s| m.max(s));
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="monospace" font-size="9">"#
        );
        for (c, h) in self.column_headers().iter().enumerate() {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="12">{}</text>"#,
                LABEL_W + c * CELL_W + 2,
                xml_escape(h)
            );
        }
        for (r, t) in self.traces.iter().enumerate() {
            let y = (r + 1) * CELL_H;
            let _ = writeln!(
                svg,
                r#"<text x="2" y="{}">{}</text>"#,
                y + 12,
                xml_escape(&t.case_id)
            );
            for (e, scores) in t.attr_scores.iter().enumerate() {
                for (f, &s) in scores.iter().enumerate() {
                    let x = LABEL_W + (e * self.n_fields() + f) * CELL_W;
                    let level = if max > 0.0 { s / max } else { 0.0 };
                    let grey = (255.0 * (1.0 - level)).round() as u8;
                    let stroke = if t.attr_anomalous[e][f] {
                        r#" stroke="red" stroke-width="1.5""#
                    } else {
                        ""
                    };
                    let ink = if level > 0.5 { "white" } else { "black" };
                    let _ = writeln!(
                        svg,
                        r#"<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="rgb({grey},{grey},{grey})"{stroke}/><text x="{}" y="{}" fill="{ink}">{}</text>"#,
                        x + 2,
                        y + 12,
                        xml_escape(&t.values[e][f])
                    );
                }
            }
        }
        svg.push_str("</svg>\n");
        svg
    }

    /// Writes `<stem>.jsonl`, `<stem>_heatmap.csv` and `<stem>_heatmap.svg` in `dir`.
    pub fn write_all(&self, dir: &Path, stem: &str) -> Result<()> {
        write_atomic(&dir.join(format!("{stem}.jsonl")), self.to_jsonl()?.as_bytes())?;
        write_atomic(
            &dir.join(format!("{stem}_heatmap.csv")),
            self.heatmap_csv()?.as_bytes(),
        )?;
        write_atomic(
            &dir.join(format!("{stem}_heatmap.svg")),
            self.heatmap_svg().as_bytes(),
        )
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Artifact(format!("heatmap csv: {e}"))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
