//! Anomaly scoring and classification at trace, event and attribute resolution.
//!
//! Every detector produces a [`ScoreReport`]: one anomaly score per trace, per real
//! event and per attribute slot, turned into verdicts by a per-resolution threshold
//! `τ = α · mean training score`. A score strictly above `τ` is anomalous.

mod dae;
mod random;
mod report;
mod tstide;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eventlog::{write_atomic, EventLog};
use crate::neuralnet::{read_model, write_model, TrainedNetwork};
use crate::{Error, Result};

pub use dae::{dae_score, reconstruction_errors, training_errors};
pub use random::{random_baseline, RandomBaseline};
pub use report::{RawTraceScores, ScoreReport, TraceScore};
pub use tstide::{tstide_fit, tstide_score, WindowModel, WindowVariant, END_MARKER};

/// Default threshold scale.
pub const DEFAULT_ALPHA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    Trace,
    Event,
    Attribute,
}

impl Resolution {
    pub const ALL: [Resolution; 3] = [Resolution::Trace, Resolution::Event, Resolution::Attribute];

    pub fn name(self) -> &'static str {
        match self {
            Resolution::Trace => "trace",
            Resolution::Event => "event",
            Resolution::Attribute => "attribute",
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One number per resolution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerResolution {
    pub trace: f64,
    pub event: f64,
    pub attribute: f64,
}

impl PerResolution {
    pub fn get(&self, r: Resolution) -> f64 {
        match r {
            Resolution::Trace => self.trace,
            Resolution::Event => self.event,
            Resolution::Attribute => self.attribute,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            trace: f(self.trace),
            event: f(self.event),
            attribute: f(self.attribute),
        }
    }
}

/// Training-set scores, one list per resolution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorLists {
    pub trace: Vec<f64>,
    pub event: Vec<f64>,
    pub attribute: Vec<f64>,
}

impl ErrorLists {
    pub fn get(&self, r: Resolution) -> &[f64] {
        match r {
            Resolution::Trace => &self.trace,
            Resolution::Event => &self.event,
            Resolution::Attribute => &self.attribute,
        }
    }

    pub fn means(&self) -> Result<PerResolution> {
        let mean = |r: Resolution| {
            let xs = self.get(r);
            if xs.is_empty() {
                return Err(Error::Config(format!("no {r}-level training scores")));
            }
            Ok(xs.iter().sum::<f64>() / xs.len() as f64)
        };
        Ok(PerResolution {
            trace: mean(Resolution::Trace)?,
            event: mean(Resolution::Event)?,
            attribute: mean(Resolution::Attribute)?,
        })
    }
}

/// Per-resolution decision threshold `τ = α · mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub alpha: f64,
    pub means: PerResolution,
}

impl Threshold {
    pub fn new(means: PerResolution, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::Config(format!("alpha must be finite and ≥ 0, got {alpha}")));
        }
        Ok(Self { alpha, means })
    }

    pub fn taus(&self) -> PerResolution {
        self.means.map(|m| self.alpha * m)
    }

    pub fn tau(&self, r: Resolution) -> f64 {
        self.alpha * self.means.get(r)
    }
}

pub fn fit_threshold(errors: &ErrorLists, alpha: f64) -> Result<Threshold> {
    Threshold::new(errors.means()?, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectorKind {
    #[serde(rename = "dae")]
    Dae,
    #[serde(rename = "tstide")]
    TStide,
    #[serde(rename = "tstide+")]
    TStidePlus,
    #[serde(rename = "random")]
    Random,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] = [
        DetectorKind::Dae,
        DetectorKind::TStide,
        DetectorKind::TStidePlus,
        DetectorKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Dae => "dae",
            DetectorKind::TStide => "tstide",
            DetectorKind::TStidePlus => "tstide+",
            DetectorKind::Random => "random",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown detector {s:?} (expected dae, tstide, tstide+ or random)"
                ))
            })
    }
}

/// A detector ready to score logs.
#[derive(Debug, Clone)]
pub enum FittedDetector {
    Dae(Box<TrainedNetwork>),
    Window(WindowModel),
    Random(RandomBaseline),
}

impl FittedDetector {
    pub fn kind(&self) -> DetectorKind {
        match self {
            FittedDetector::Dae(_) => DetectorKind::Dae,
            FittedDetector::Window(w) => match w.variant {
                WindowVariant::Activity => DetectorKind::TStide,
                WindowVariant::ActivityAttributes => DetectorKind::TStidePlus,
            },
            FittedDetector::Random(_) => DetectorKind::Random,
        }
    }

    /// Mean training score per resolution; `None` for detectors without a fit.
    pub fn training_means(&self) -> Option<PerResolution> {
        match self {
            FittedDetector::Dae(m) => Some(m.error_means),
            FittedDetector::Window(w) => Some(w.training_means),
            FittedDetector::Random(_) => None,
        }
    }

    /// Scores `log`; `alpha` is ignored by the random baseline.
    pub fn score(&self, log: &EventLog, alpha: f64) -> Result<ScoreReport> {
        match self {
            FittedDetector::Dae(m) => dae_score(m, log, alpha),
            FittedDetector::Window(w) => tstide_score(w, log, alpha),
            FittedDetector::Random(r) => Ok(random_baseline(log, r.p, r.seed)),
        }
    }
}

/// JSON form of the detectors that are not neural networks.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DetectorFile {
    Window { model: WindowModel },
    Random { baseline: RandomBaseline },
}

impl FittedDetector {
    /// Serializes the detector: the binary model format for the autoencoder, JSON
    /// otherwise.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        match self {
            FittedDetector::Dae(m) => write_model(m),
            FittedDetector::Window(w) => Ok(serde_json::to_vec_pretty(&DetectorFile::Window {
                model: w.clone(),
            })?),
            FittedDetector::Random(r) => {
                Ok(serde_json::to_vec_pretty(&DetectorFile::Random { baseline: *r })?)
            }
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.first() == Some(&b'{') {
            return Ok(match serde_json::from_slice::<DetectorFile>(bytes)? {
                DetectorFile::Window { model } => FittedDetector::Window(model),
                DetectorFile::Random { baseline } => FittedDetector::Random(baseline),
            });
        }
        Ok(FittedDetector::Dae(Box::new(read_model(bytes)?)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
