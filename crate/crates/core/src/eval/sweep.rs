//! Resumable, seeded experiment sweeps over models × noise levels × seeds.
//!
//! Each cell writes its rows to `cells/<model>__<noise>__<seed>.csv` atomically; an
//! existing cell file marks the cell as done, so an interrupted sweep resumes where
//! it stopped. After all cells the combined `results.csv`, `summary.csv` and
//! `summary.md` are rewritten from the cell files in spec order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pipeline::{make_dataset, resolve_model, run_detector, DataConfig, DetectorRun, DetectorSettings};
use crate::detectors::{DetectorKind, Resolution};
use crate::eventlog::write_atomic;
use crate::procgen::ProcessModel;
use crate::{Error, Result};

pub const RESULTS_HEADER: &str = "model,noise,seed,detector,resolution,f1_macro,f1_normal,f1_anomaly,precision_normal,precision_anomaly,recall_normal,recall_anomaly,train_seconds";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    /// Model names: `p2p` or a generator profile.
    pub models: Vec<String>,
    /// Share of anomalous traces in each training log.
    pub noise_levels: Vec<f64>,
    pub seeds: Vec<u64>,
    pub detectors: Vec<DetectorKind>,
    pub data: DataConfig,
    pub detector: DetectorSettings,
    /// Fill the `train_seconds` column (makes output timing-dependent).
    pub record_timing: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            models: vec!["small".into()],
            noise_levels: (1..=10).map(|i| f64::from(i) / 10.0).collect(),
            seeds: vec![0, 1, 2],
            detectors: DetectorKind::ALL.to_vec(),
            data: DataConfig::default(),
            detector: DetectorSettings::default(),
            record_timing: false,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty()
            || self.noise_levels.is_empty()
            || self.seeds.is_empty()
            || self.detectors.is_empty()
        {
            return Err(Error::Config(
                "sweep needs at least one model, noise level, seed and detector".into(),
            ));
        }
        if let Some(n) = self.noise_levels.iter().find(|n| !(0.0..=1.0).contains(*n)) {
            return Err(Error::Config(format!("noise level {n} outside [0, 1]")));
        }
        if self.data.n_train < 2 || self.data.n_test == 0 {
            return Err(Error::Config("need n_train ≥ 2 and n_test ≥ 1".into()));
        }
        self.detector.train.validate()
    }

    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for model in &self.models {
            for &noise in &self.noise_levels {
                for &seed in &self.seeds {
                    out.push(CellKey {
                        model: model.clone(),
                        noise,
                        seed,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub model: String,
    pub noise: f64,
    pub seed: u64,
}

impl CellKey {
    fn file_name(&self) -> String {
        format!("{}__{}__{}.csv", self.model, self.noise, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub noise: f64,
    pub seed: u64,
    pub detector: DetectorKind,
    pub resolution: Resolution,
    pub f1_macro: f64,
    pub f1_normal: f64,
    pub f1_anomaly: f64,
    pub precision_normal: f64,
    pub precision_anomaly: f64,
    pub recall_normal: f64,
    pub recall_anomaly: f64,
    pub train_seconds: Option<f64>,
}

fn rows_for(key: &CellKey, run: &DetectorRun, timing: bool) -> Vec<ResultRow> {
    run.metrics
        .iter()
        .map(|m| ResultRow {
            model: key.model.clone(),
            noise: key.noise,
            seed: key.seed,
            detector: run.kind,
            resolution: m.resolution,
            f1_macro: m.f1_macro,
            f1_normal: m.normal.f1,
            f1_anomaly: m.anomaly.f1,
            precision_normal: m.normal.precision,
            precision_anomaly: m.anomaly.precision,
            recall_normal: m.normal.recall,
            recall_anomaly: m.anomaly.recall,
            train_seconds: timing.then_some(run.train_seconds),
        })
        .collect()
}

/// Runs every detector of `spec` on one cell. `model` is the resolved model for
/// the cell's (name, seed).
pub fn run_cell(
    key: &CellKey,
    model: &ProcessModel,
    spec: &ExperimentSpec,
) -> Result<(Vec<ResultRow>, Vec<DetectorRun>)> {
    let data = make_dataset(model, key.noise, &spec.data, key.seed)?;
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for &kind in &spec.detectors {
        let run = run_detector(kind, &data, &spec.detector, key.seed)?;
        rows.extend(rows_for(key, &run, spec.record_timing));
        runs.push(run);
    }
    Ok((rows, runs))
}

fn rows_to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Artifact(format!("results csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Artifact(format!("results csv: {e}")))?;
    let mut text = String::from_utf8(bytes).expect("csv output is UTF-8");
    if rows.is_empty() {
        text = format!("{RESULTS_HEADER}\n");
    }
    Ok(text)
}

fn rows_from_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::parse(path.display().to_string(), e.to_string())))
        .collect()
}

/// Mean and standard deviation of one (model, noise, detector, resolution) group
/// across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub noise: f64,
    pub detector: DetectorKind,
    pub resolution: Resolution,
    pub runs: usize,
    pub f1_macro_mean: f64,
    /// Sample standard deviation over seeds (0 for a single run).
    pub f1_macro_std: f64,
    pub f1_normal_mean: f64,
    pub f1_anomaly_mean: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups rows in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: Vec<(SummaryRow, Vec<&ResultRow>)> = Vec::new();
    for r in rows {
        let same = |s: &SummaryRow| {
            s.model == r.model
                && s.noise == r.noise
                && s.detector == r.detector
                && s.resolution == r.resolution
        };
        match groups.iter_mut().find(|(s, _)| same(s)) {
            Some((_, members)) => members.push(r),
            None => groups.push((
                SummaryRow {
                    model: r.model.clone(),
                    noise: r.noise,
                    detector: r.detector,
                    resolution: r.resolution,
                    runs: 0,
                    f1_macro_mean: 0.0,
                    f1_macro_std: 0.0,
                    f1_normal_mean: 0.0,
                    f1_anomaly_mean: 0.0,
                },
                vec![r],
            )),
        }
    }
    groups
        .into_iter()
        .map(|(mut s, members)| {
            let col = |f: fn(&ResultRow) -> f64| members.iter().map(|r| f(r)).collect::<Vec<_>>();
            (s.f1_macro_mean, s.f1_macro_std) = mean_std(&col(|r| r.f1_macro));
            s.f1_normal_mean = mean_std(&col(|r| r.f1_normal)).0;
            s.f1_anomaly_mean = mean_std(&col(|r| r.f1_anomaly)).0;
            s.runs = members.len();
            s
        })
        .collect()
}

fn summary_markdown(summary: &[SummaryRow]) -> String {
    let mut md = String::from(
        "| model | noise | detector | resolution | runs | macro F1 (mean ± std) | F1 normal | F1 anomaly |\n\
         |---|---|---|---|---|---|---|---|\n",
    );
    for s in summary {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} | {:.3} ± {:.3} | {:.3} | {:.3} |",
            s.model,
            s.noise,
            s.detector,
            s.resolution,
            s.runs,
            s.f1_macro_mean,
            s.f1_macro_std,
            s.f1_normal_mean,
            s.f1_anomaly_mean
        );
    }
    md
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    /// Cells that failed, with the error message.
    pub failures: Vec<(CellKey, String)>,
    /// Cells found complete on disk and not re-run.
    pub resumed: usize,
    pub results_path: PathBuf,
}

/// Runs (or resumes) a sweep, writing into `out_dir`. A failing cell is recorded
/// in `failures.csv` and the sweep continues.
pub fn run_sweep(spec: &ExperimentSpec, out_dir: &Path) -> Result<SweepOutcome> {
    spec.validate()?;
    let cell_dir = out_dir.join("cells");
    std::fs::create_dir_all(&cell_dir).map_err(|e| Error::io(&cell_dir, e))?;
    write_atomic(
        &out_dir.join("spec.json"),
        serde_json::to_string_pretty(spec)?.as_bytes(),
    )?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut resumed = 0;
    let mut models: Vec<((String, u64), std::result::Result<ProcessModel, String>)> = Vec::new();
    for key in spec.cells() {
        let path = cell_dir.join(key.file_name());
        if path.exists() {
            rows.extend(rows_from_csv(&path)?);
            resumed += 1;
            continue;
        }
        let id = (key.model.clone(), key.seed);
        if !models.iter().any(|(k, _)| *k == id) {
            let m = resolve_model(&key.model, key.seed).map_err(|e| e.to_string());
            models.push((id.clone(), m));
        }
        let model = &models.iter().find(|(k, _)| *k == id).expect("inserted").1;
        let result = match model {
            Ok(m) => run_cell(&key, m, spec).map_err(|e| e.to_string()),
            Err(e) => Err(e.clone()),
        };
        match result {
            Ok((cell_rows, _)) => {
                write_atomic(&path, rows_to_csv(&cell_rows)?.as_bytes())?;
                log::info!("cell {} done", key.file_name());
                rows.extend(cell_rows);
            }
            Err(message) => {
                log::error!("cell {} failed: {message}", key.file_name());
                failures.push((key, message));
            }
        }
    }
    let results_path = out_dir.join("results.csv");
    write_atomic(&results_path, rows_to_csv(&rows)?.as_bytes())?;
    let summary = summarize(&rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in &summary {
        w.serialize(s)
            .map_err(|e| Error::Artifact(format!("summary csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Artifact(format!("summary csv: {e}")))?;
    write_atomic(&out_dir.join("summary.csv"), &bytes)?;
    write_atomic(&out_dir.join("summary.md"), summary_markdown(&summary).as_bytes())?;
    let failures_path = out_dir.join("failures.csv");
    if failures.is_empty() {
        if failures_path.exists() {
            std::fs::remove_file(&failures_path).map_err(|e| Error::io(&failures_path, e))?;
        }
    } else {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["model", "noise", "seed", "error"])
            .and_then(|_| {
                failures.iter().try_for_each(|(k, m)| {
                    w.write_record([&k.model, &k.noise.to_string(), &k.seed.to_string(), m])
                })
            })
            .map_err(|e| Error::Artifact(format!("failures csv: {e}")))?;
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Artifact(format!("failures csv: {e}")))?;
        write_atomic(&failures_path, &bytes)?;
    }
    Ok(SweepOutcome {
        rows,
        summary,
        failures,
        resumed,
        results_path,
    })
}
