//! Pipeline configuration: one JSON document with a section per stage.
//!
//! Every field has a default, unknown keys are rejected, and any field can be
//! overridden from the command line with `--set section.key=value` (the value is
//! parsed as JSON when possible and taken as a string otherwise).

use std::path::{Path, PathBuf};

use bpad_core::anomalies::AnomalyKind;
use bpad_core::detectors::{DetectorKind, DEFAULT_ALPHA};
use bpad_core::eval::{DataConfig, DetectorSettings, ExperimentSpec};
use bpad_core::eventlog::LogFormat;
use bpad_core::neuralnet::TrainConfig;
use bpad_core::procgen::GenConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Global seed; every stage derives its own seed from it.
    pub seed: u64,
    /// Log format for written logs: `jsonl`, `csv` (`xes` is read-only).
    pub format: String,
    pub generate: GenerateSection,
    pub inject: InjectSection,
    pub train: TrainConfig,
    pub detector: DetectorSection,
    pub sweep: ExperimentSpec,
    pub heatmap: HeatmapSection,
    pub paths: Paths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            format: "jsonl".into(),
            generate: GenerateSection::default(),
            inject: InjectSection::default(),
            train: TrainConfig::default(),
            detector: DetectorSection::default(),
            sweep: ExperimentSpec::default(),
            heatmap: HeatmapSection::default(),
            paths: Paths::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateSection {
    /// `p2p`, a generator profile (`small`, `medium`, `large`, `huge`, `wide`) or
    /// `custom` to use the `custom` generator settings.
    pub model: String,
    pub custom: GenConfig,
    pub n_train: usize,
    pub n_test: usize,
    pub variant_prob_mu: f64,
    pub variant_prob_sigma: f64,
}

impl Default for GenerateSection {
    fn default() -> Self {
        Self {
            model: "p2p".into(),
            custom: GenConfig::default(),
            n_train: 12_500,
            n_test: 2_500,
            variant_prob_mu: 1.0,
            variant_prob_sigma: 0.2,
        }
    }
}

impl GenerateSection {
    pub fn data_config(&self) -> DataConfig {
        DataConfig {
            n_train: self.n_train,
            n_test: self.n_test,
            variant_prob_mu: self.variant_prob_mu,
            variant_prob_sigma: self.variant_prob_sigma,
            ..DataConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InjectSection {
    /// Share of anomalous traces in the training log.
    pub noise_level: f64,
    /// Share of anomalous traces in the test log.
    pub test_noise_level: f64,
    pub enabled_types: Vec<AnomalyKind>,
}

impl Default for InjectSection {
    fn default() -> Self {
        Self {
            noise_level: 0.3,
            test_noise_level: 0.3,
            enabled_types: AnomalyKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub kind: DetectorKind,
    pub alpha: f64,
    /// t-STIDE window length.
    pub window: usize,
    /// Anomaly probability of the random baseline.
    pub random_p: f64,
    pub unknown_column: bool,
    /// Candidate α values searched by `evaluate`; empty disables the search.
    pub alpha_grid: Vec<f64>,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            kind: DetectorKind::Dae,
            alpha: DEFAULT_ALPHA,
            window: 4,
            random_p: 0.5,
            unknown_column: false,
            alpha_grid: Vec::new(),
        }
    }
}

impl DetectorSection {
    pub fn settings(&self, train: &TrainConfig) -> DetectorSettings {
        DetectorSettings {
            alpha: self.alpha,
            window: self.window,
            random_p: self.random_p,
            unknown_column: self.unknown_column,
            train: train.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatmapSection {
    /// Traces to render; when empty the first `limit` flagged traces are used.
    pub case_ids: Vec<String>,
    pub limit: usize,
}

impl Default for HeatmapSection {
    fn default() -> Self {
        Self {
            case_ids: Vec::new(),
            limit: 20,
        }
    }
}

/// Input and output locations. Unset inputs default to files in `out_dir`
/// written by the preceding command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub out_dir: Option<PathBuf>,
    pub process_model: Option<PathBuf>,
    pub train_log: Option<PathBuf>,
    pub test_log: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub detector: Option<PathBuf>,
    /// Drop imported traces longer than this.
    pub max_trace_len: Option<usize>,
}

impl PipelineConfig {
    pub fn out_dir(&self) -> PathBuf {
        self.paths
            .out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn log_format(&self) -> Result<LogFormat, CliError> {
        self.format
            .parse()
            .map_err(|e: bpad_core::Error| CliError::usage(format!("format: {e}")))
    }
}

/// Loads the configuration file (if any) and applies `--set` overrides.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<PipelineConfig, CliError> {
    let mut value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::usage(format!("cannot read config {}: {e}", p.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("config {}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        CliError::usage(format!("config key `{path}`: {}", e.into_inner()))
    })
}

/// Sets `section.key=value` inside a JSON document, creating objects on the way.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("--set expects key=value, got {spec:?}")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::usage(format!("--set: malformed key path {path:?}")));
    }
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| {
            CliError::usage(format!("--set {path}: `{}` is not a section", keys[..i].join(".")))
        })?;
        if i + 1 == keys.len() {
            obj.insert((*key).to_string(), parsed);
            return Ok(());
        }
        node = obj
            .entry((*key).to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("key path is non-empty")
}
