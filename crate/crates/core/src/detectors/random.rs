//! Random classifier baseline.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{PerResolution, RawTraceScores, ScoreReport};
use crate::eventlog::EventLog;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomBaseline {
    /// Probability of an anomalous verdict.
    pub p: f64,
    pub seed: u64,
}

impl Default for RandomBaseline {
    fn default() -> Self {
        Self { p: 0.5, seed: 0 }
    }
}

/// Independent verdicts at every resolution: each trace, event and slot is
/// anomalous with probability `p`. Scores are `1 − u` for `u ~ U[0, 1)` against
/// thresholds `1 − p`, so the usual "score above τ" rule yields the draw.
pub fn random_baseline(log: &EventLog, p: f64, seed: u64) -> ScoreReport {
    let p = p.clamp(0.0, 1.0);
    let mut rng = seed::rng(seed);
    let n_fields = 1 + log.attribute_names().len();
    let mut draw = || 1.0 - rng.random::<f64>();
    let raw = log
        .traces()
        .iter()
        .map(|t| RawTraceScores {
            score: draw(),
            events: (0..t.len()).map(|_| draw()).collect(),
            attrs: (0..t.len())
                .map(|_| (0..n_fields).map(|_| draw()).collect())
                .collect(),
        })
        .collect();
    let tau = 1.0 - p;
    let taus = PerResolution {
        trace: tau,
        event: tau,
        attribute: tau,
    };
    ScoreReport::new("random", log, log.max_trace_len(), taus, raw)
        .expect("scores are shaped after the log")
}
