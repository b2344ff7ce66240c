//! One experiment run: model → train/test logs → injection → detectors → metrics.

use serde::{Deserialize, Serialize};

use super::metrics::{score_to_metrics, MetricRow};
use crate::anomalies::{inject, AnomalyKind, InjectConfig, Injection};
use crate::detectors::{
    random_baseline, tstide_fit, DetectorKind, FittedDetector, RandomBaseline, ScoreReport,
    WindowVariant, DEFAULT_ALPHA,
};
use crate::encoding::{build_layout_with, encode, EncodingLayout, LayoutHints};
use crate::eventlog::{EventLog, USER};
use crate::neuralnet::{train, TrainConfig};
use crate::procgen::{model_by_name, sample_log, ProcessModel};
use crate::seed;
use crate::{Error, Result};

/// How logs are drawn from a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub n_train: usize,
    pub n_test: usize,
    /// Share of anomalous traces in the test log.
    pub test_noise: f64,
    pub anomaly_types: Vec<AnomalyKind>,
    pub variant_prob_mu: f64,
    pub variant_prob_sigma: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            n_train: 2000,
            n_test: 500,
            test_noise: 0.3,
            anomaly_types: AnomalyKind::ALL.to_vec(),
            variant_prob_mu: 1.0,
            variant_prob_sigma: 0.2,
        }
    }
}

/// Detector hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSettings {
    pub alpha: f64,
    pub window: usize,
    pub random_p: f64,
    /// Give every categorical field an extra column for unseen values.
    pub unknown_column: bool,
    pub train: TrainConfig,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            window: 4,
            random_p: 0.5,
            unknown_column: false,
            train: TrainConfig::default(),
        }
    }
}

/// Injected train and test logs drawn from one model.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub model: ProcessModel,
    pub train: Injection,
    pub test: Injection,
}

/// Encoder capacity for logs of `model`: one more than its longest variant so a
/// rework on any trace still fits.
pub fn capacity(model: &ProcessModel) -> usize {
    model.max_variant_len() + 1
}

/// Layout covering every activity and user of the model, not only those sampled.
pub fn layout_for(
    log: &EventLog,
    model: Option<&ProcessModel>,
    unknown_column: bool,
) -> Result<EncodingLayout> {
    let Some(model) = model else {
        // Leave room for one inserted event, as injected test logs may contain one.
        return build_layout_with(
            log,
            &LayoutHints {
                min_max_len: Some(log.max_trace_len() + 1),
                unknown_column,
                ..LayoutHints::default()
            },
        );
    };
    let mut hints = LayoutHints {
        min_max_len: Some(capacity(model)),
        activities: &model.activities,
        unknown_column,
        ..LayoutHints::default()
    };
    if log.attribute_index(USER).is_some() {
        hints.attribute_values.push((USER, &model.users));
    }
    build_layout_with(log, &hints)
}

/// Redraws the variant distribution and samples clean train and test logs with
/// independent seeds. The returned model carries the redrawn distribution.
pub fn sample_logs(
    model: &ProcessModel,
    cfg: &DataConfig,
    seed: u64,
) -> Result<(ProcessModel, EventLog, EventLog)> {
    let mut model = model.clone();
    model.redraw_variant_probs(
        cfg.variant_prob_mu,
        cfg.variant_prob_sigma,
        seed::derive(seed, "variant_probs"),
    )?;
    let train = sample_log(&model, cfg.n_train, seed::derive(seed, "sample/train"))?;
    let test = sample_log(&model, cfg.n_test, seed::derive(seed, "sample/test"))?;
    Ok((model, train, test))
}

/// Which log of a pair is being injected; selects the seed stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Injection settings used by the pipeline for one log of a pair.
pub fn inject_config(
    model: Option<&ProcessModel>,
    noise: f64,
    types: &[AnomalyKind],
    split: Split,
    seed: u64,
) -> InjectConfig {
    let stage = match split {
        Split::Train => "inject/train",
        Split::Test => "inject/test",
    };
    InjectConfig {
        noise_level: noise,
        enabled_types: types.to_vec(),
        seed: seed::derive(seed, &format!("{stage}/{noise}")),
        max_len: model.map(capacity),
    }
}

/// Samples train and test logs (independent seeds, shared redrawn variant
/// distribution) and injects anomalies at `noise` into the training log and at
/// `cfg.test_noise` into the test log.
pub fn make_dataset(model: &ProcessModel, noise: f64, cfg: &DataConfig, seed: u64) -> Result<Dataset> {
    let (model, train_log, test_log) = sample_logs(model, cfg, seed)?;
    let types = &cfg.anomaly_types;
    let train_cfg = inject_config(Some(&model), noise, types, Split::Train, seed);
    let test_cfg = inject_config(Some(&model), cfg.test_noise, types, Split::Test, seed);
    let train = inject(&train_log, Some(&model), &train_cfg)?;
    let test = inject(&test_log, Some(&model), &test_cfg)?;
    Ok(Dataset { model, train, test })
}

/// Fits a detector on the (noisy) training log.
pub fn fit_detector(
    kind: DetectorKind,
    train_log: &EventLog,
    model: Option<&ProcessModel>,
    settings: &DetectorSettings,
    seed: u64,
) -> Result<FittedDetector> {
    Ok(match kind {
        DetectorKind::Dae => {
            let layout = layout_for(train_log, model, settings.unknown_column)?;
            let batch = encode(train_log, &layout)?;
            let cfg = TrainConfig {
                seed: seed::derive(seed, "dae"),
                ..settings.train.clone()
            };
            let mut trained = train(&batch, &layout, &cfg)?;
            trained.alpha = settings.alpha;
            FittedDetector::Dae(Box::new(trained))
        }
        DetectorKind::TStide => {
            FittedDetector::Window(tstide_fit(train_log, settings.window, WindowVariant::Activity)?)
        }
        DetectorKind::TStidePlus => FittedDetector::Window(tstide_fit(
            train_log,
            settings.window,
            WindowVariant::ActivityAttributes,
        )?),
        DetectorKind::Random => FittedDetector::Random(RandomBaseline {
            p: settings.random_p,
            seed: seed::derive(seed, "random"),
        }),
    })
}

/// Outcome of one detector on one dataset.
#[derive(Debug, Clone)]
pub struct DetectorRun {
    pub kind: DetectorKind,
    pub detector: FittedDetector,
    pub report: ScoreReport,
    pub metrics: Vec<MetricRow>,
    pub train_seconds: f64,
}

/// Fits, scores and evaluates one detector.
pub fn run_detector(
    kind: DetectorKind,
    data: &Dataset,
    settings: &DetectorSettings,
    seed: u64,
) -> Result<DetectorRun> {
    let started = std::time::Instant::now();
    let detector = fit_detector(kind, &data.train.log, Some(&data.model), settings, seed)?;
    let train_seconds = started.elapsed().as_secs_f64();
    let report = match &detector {
        FittedDetector::Random(r) => random_baseline(&data.test.log, r.p, r.seed),
        d => d.score(&data.test.log, settings.alpha)?,
    };
    let metrics = score_to_metrics(&report, &data.test.labels)?;
    Ok(DetectorRun {
        kind,
        detector,
        report,
        metrics,
        train_seconds,
    })
}

/// Resolves a model name (`p2p` or a profile) with a seed derived for `seed`.
pub fn resolve_model(name: &str, seed: u64) -> Result<ProcessModel> {
    model_by_name(name, seed::derive(seed, &format!("model/{name}"))).map_err(|e| match e {
        Error::Config(m) => Error::Config(m),
        other => Error::Generation(format!("model {name}: {other}")),
    })
}
