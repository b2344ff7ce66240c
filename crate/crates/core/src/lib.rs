//! Anomaly detection for business-process event logs.
//!
//! The crate covers the whole experimental pipeline:
//!
//! * [`eventlog`]: the event-log data model, JSONL/CSV/XES import and label sidecars.
//! * [`procgen`]: random acyclic process models, variant enumeration, user permissions and
//!   long-term user dependencies, and log sampling.
//! * [`anomalies`]: injection of skip, switch, rework, incorrect-user and incorrect-LTD
//!   anomalies with labels at trace, event and attribute resolution.
//! * [`encoding`]: padded one-hot encoding of traces and per-slot error decomposition.
//! * [`neuralnet`]: a small feed-forward denoising autoencoder with hand-written
//!   backpropagation and Adam.
//! * [`detectors`]: the autoencoder detector, t-STIDE / t-STIDE+ and a random baseline.
//! * [`eval`]: macro-F1 metrics, alpha grid search and seeded experiment sweeps.

pub mod anomalies;
pub mod detectors;
pub mod encoding;
pub mod error;
pub mod eval;
pub mod eventlog;
pub mod neuralnet;
pub mod procgen;
pub mod seed;

pub use error::{Error, Result};
