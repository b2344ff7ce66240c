//! Per-class precision, recall and F1 with macro averaging.

use serde::{Deserialize, Serialize};

use crate::detectors::{Resolution, ScoreReport};
use crate::eventlog::{Label, LabelSet};
use crate::{Error, Result};

/// Binary confusion counts with "anomaly" as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn add(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = Self::default();
        for (t, p) in pairs {
            c.add(t, p);
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Precision/recall/F1 from hits, predicted positives and actual positives.
/// Zero denominators yield 0.
fn class_stats(hits: u64, predicted: u64, actual: u64) -> ClassStats {
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(hits, predicted);
    let recall = ratio(hits, actual);
    let f1 = ratio(2 * hits, predicted + actual);
    ClassStats {
        precision,
        recall,
        f1,
        support: actual,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub resolution: Resolution,
    pub normal: ClassStats,
    pub anomaly: ClassStats,
    pub f1_macro: f64,
}

impl MetricRow {
    pub fn from_confusion(resolution: Resolution, c: &Confusion) -> Self {
        let anomaly = class_stats(c.tp, c.tp + c.fp, c.tp + c.fn_);
        let normal = class_stats(c.tn, c.tn + c.fn_, c.tn + c.fp);
        Self {
            resolution,
            normal,
            anomaly,
            f1_macro: (normal.f1 + anomaly.f1) / 2.0,
        }
    }
}

/// Confusion counts per resolution; padding positions are skipped.
pub fn confusions(report: &ScoreReport, labels: &LabelSet) -> Result<[Confusion; 3]> {
    if report.traces.len() != labels.traces.len() {
        return Err(Error::Labels(format!(
            "{} scored traces but {} label rows",
            report.traces.len(),
            labels.traces.len()
        )));
    }
    let mut out = [Confusion::default(); 3];
    for (s, l) in report.traces.iter().zip(&labels.traces) {
        if s.case_id != l.case_id || s.len() != l.len() {
            return Err(Error::Labels(format!(
                "report case {} ({} events) does not match label case {} ({} events)",
                s.case_id,
                s.len(),
                l.case_id,
                l.len()
            )));
        }
        out[0].add(l.trace.is_anomaly(), s.anomalous);
        for e in 0..s.len() {
            out[1].add(l.events[e] == Label::Anomaly, s.event_anomalous[e]);
            for (f, &predicted) in s.attr_anomalous[e].iter().enumerate() {
                let truth = l.attrs[e].get(f).ok_or_else(|| {
                    Error::Labels(format!("case {}: missing attribute label", l.case_id))
                })?;
                out[2].add(*truth == Label::Anomaly, predicted);
            }
        }
    }
    Ok(out)
}

/// One row per resolution, in trace, event, attribute order.
pub fn score_to_metrics(report: &ScoreReport, labels: &LabelSet) -> Result<Vec<MetricRow>> {
    let c = confusions(report, labels)?;
    Ok(Resolution::ALL
        .iter()
        .zip(&c)
        .map(|(&r, c)| MetricRow::from_confusion(r, c))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let c = Confusion::from_pairs([(true, true), (false, false), (false, false)]);
        let m = MetricRow::from_confusion(Resolution::Trace, &c);
        assert_eq!((m.normal.f1, m.anomaly.f1, m.f1_macro), (1.0, 1.0, 1.0));
    }

    #[test]
    fn all_anomaly_on_balanced_set() {
        let c = Confusion::from_pairs((0..100).map(|i| (i % 2 == 0, true)));
        let m = MetricRow::from_confusion(Resolution::Trace, &c);
        assert_eq!(m.normal.f1, 0.0);
        assert!((m.anomaly.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.f1_macro - 1.0 / 3.0).abs() < 1e-15);
    }
}
