//! Evaluation: macro-F1 metrics, threshold grid search and experiment sweeps.

mod metrics;
mod pipeline;
mod sweep;

use crate::detectors::{PerResolution, ScoreReport};
use crate::eventlog::LabelSet;
use crate::{Error, Result};

pub use metrics::{confusions, score_to_metrics, ClassStats, Confusion, MetricRow};
pub use pipeline::{
    capacity, fit_detector, inject_config, layout_for, make_dataset, resolve_model, run_detector,
    sample_logs, DataConfig, Dataset, DetectorRun, DetectorSettings, Split,
};
pub use sweep::{
    run_cell, run_sweep, summarize, CellKey, ExperimentSpec, ResultRow, SummaryRow, SweepOutcome,
    RESULTS_HEADER,
};

/// `1.0, 1.25, …, 4.0`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=12).map(|i| 1.0 + 0.25 * f64::from(i)).collect()
}

/// A scored log together with its labels and the detector's training means.
#[derive(Debug, Clone, Copy)]
pub struct AlphaCase<'a> {
    pub report: &'a ScoreReport,
    pub labels: &'a LabelSet,
    pub means: PerResolution,
}

/// Mean trace-level macro F1 over `cases` with thresholds `alpha · means`.
pub fn trace_f1_at(cases: &[AlphaCase<'_>], alpha: f64) -> Result<f64> {
    let mut total = 0.0;
    for case in cases {
        let mut report = case.report.clone();
        report.rethreshold(case.means.map(|m| alpha * m));
        let c = confusions(&report, case.labels)?;
        total += MetricRow::from_confusion(crate::detectors::Resolution::Trace, &c[0]).f1_macro;
    }
    Ok(total / cases.len() as f64)
}

/// The single α maximizing mean trace-level macro F1 across all cases (first
/// candidate wins ties), with the score of every candidate.
pub fn grid_search_alpha(
    cases: &[AlphaCase<'_>],
    candidates: &[f64],
) -> Result<(f64, Vec<(f64, f64)>)> {
    if candidates.is_empty() {
        return Err(Error::Config("alpha grid is empty".into()));
    }
    if cases.is_empty() {
        return Err(Error::Config("alpha grid search needs at least one labeled log".into()));
    }
    let mut scores = Vec::with_capacity(candidates.len());
    let mut best = (candidates[0], f64::NEG_INFINITY);
    for &alpha in candidates {
        let f1 = trace_f1_at(cases, alpha)?;
        if f1 > best.1 {
            best = (alpha, f1);
        }
        scores.push((alpha, f1));
    }
    Ok((best.0, scores))
}
