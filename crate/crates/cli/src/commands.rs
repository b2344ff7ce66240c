//! Command implementations. Every command writes its outputs atomically; after a
//! successful run the effective configuration is echoed to
//! `<command>_config.json` in the output directory.

use std::path::{Path, PathBuf};

use bpad_core::anomalies::inject as inject_anomalies;
use bpad_core::detectors::{DetectorKind, FittedDetector, ScoreReport};
use bpad_core::eval::{
    fit_detector, grid_search_alpha, inject_config, resolve_model, run_sweep, sample_logs,
    score_to_metrics, AlphaCase, MetricRow, Split,
};
use bpad_core::eventlog::{
    read_labels, read_log_with, write_atomic, write_labels, EventLog, LabelSet, LogFormat,
    ReadOptions, USER,
};
use bpad_core::procgen::{generate_assigned, ProcessModel};

use crate::config::PipelineConfig;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn out_dir(cfg: &PipelineConfig) -> Result<PathBuf> {
    let dir = cfg.out_dir();
    std::fs::create_dir_all(&dir).map_err(|e| CliError {
        code: 2,
        message: format!("cannot create {}: {e}", dir.display()),
    })?;
    Ok(dir)
}

/// Records the effective configuration of a successful command.
pub fn echo_config(cfg: &PipelineConfig, command: &str) -> Result<()> {
    let dir = out_dir(cfg)?;
    let echo = serde_json::to_string_pretty(cfg).expect("config serializes");
    write_atomic(&dir.join(format!("{command}_config.json")), echo.as_bytes())?;
    Ok(())
}

fn extension(format: LogFormat) -> &'static str {
    match format {
        LogFormat::Jsonl => "jsonl",
        LogFormat::Csv => "csv",
        LogFormat::Xes => "xes",
    }
}

fn log_file(cfg: &PipelineConfig, dir: &Path, stem: &str) -> Result<PathBuf> {
    Ok(dir.join(format!("{stem}.{}", extension(cfg.log_format()?))))
}

fn read(cfg: &PipelineConfig, path: &Path) -> Result<EventLog> {
    let format = match LogFormat::from_path(path) {
        Some(f) => f,
        None => cfg.log_format()?,
    };
    let options = ReadOptions {
        max_trace_len: cfg.paths.max_trace_len,
    };
    Ok(read_log_with(path, format, options)?)
}

fn write(cfg: &PipelineConfig, log: &EventLog, path: &Path) -> Result<()> {
    Ok(bpad_core::eventlog::write_log(log, path, cfg.log_format()?)?)
}

/// The process model from `paths.process_model`, or `model.json` in the output
/// directory when present.
fn process_model(cfg: &PipelineConfig, dir: &Path) -> Result<Option<ProcessModel>> {
    let path = match &cfg.paths.process_model {
        Some(p) => p.clone(),
        None => {
            let p = dir.join("model.json");
            if !p.exists() {
                return Ok(None);
            }
            p
        }
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::from(bpad_core::Error::io(&path, e)))?;
    Ok(Some(ProcessModel::from_json(&text)?))
}

fn detector_file(cfg: &PipelineConfig, dir: &Path) -> PathBuf {
    cfg.paths.detector.clone().unwrap_or_else(|| {
        dir.join(match cfg.detector.kind {
            DetectorKind::Dae => "dae.model",
            DetectorKind::TStide => "tstide.json",
            DetectorKind::TStidePlus => "tstide_plus.json",
            DetectorKind::Random => "random.json",
        })
    })
}

fn file_stem(kind: DetectorKind) -> &'static str {
    match kind {
        DetectorKind::TStidePlus => "tstide_plus",
        k => k.name(),
    }
}

/// Training log consumed by `train`: `paths.train_log` or the injected log.
fn noisy_train(cfg: &PipelineConfig, dir: &Path) -> Result<PathBuf> {
    match &cfg.paths.train_log {
        Some(p) => Ok(p.clone()),
        None => log_file(cfg, dir, "train_noisy"),
    }
}

fn noisy_test(cfg: &PipelineConfig, dir: &Path) -> Result<PathBuf> {
    match &cfg.paths.test_log {
        Some(p) => Ok(p.clone()),
        None => log_file(cfg, dir, "test_noisy"),
    }
}

pub fn generate(cfg: &PipelineConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let model = match cfg.generate.model.as_str() {
        "custom" => generate_assigned(&cfg.generate.custom)?,
        name => resolve_model(name, cfg.seed)?,
    };
    let (model, train, test) = sample_logs(&model, &cfg.generate.data_config(), cfg.seed)?;
    write_atomic(&dir.join("model.json"), model.to_json()?.as_bytes())?;
    write(cfg, &train, &log_file(cfg, &dir, "train")?)?;
    write(cfg, &test, &log_file(cfg, &dir, "test")?)?;
    println!(
        "model {}: {} nodes, {} edges, {} variants, max length {}; {} train / {} test traces",
        model.name,
        model.n_nodes(),
        model.n_edges(),
        model.variants.len(),
        model.max_variant_len(),
        train.len(),
        test.len()
    );
    Ok(())
}

pub fn inject(cfg: &PipelineConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let model = process_model(cfg, &dir)?;
    let train_path = match &cfg.paths.train_log {
        Some(p) => p.clone(),
        None => log_file(cfg, &dir, "train")?,
    };
    let test_path = match &cfg.paths.test_log {
        Some(p) => p.clone(),
        None => log_file(cfg, &dir, "test")?,
    };
    let train = read(cfg, &train_path)?;
    let test = read(cfg, &test_path)?;
    let mut types = cfg.inject.enabled_types.clone();
    let users_possible =
        model.is_some() && train.attribute_index(USER).is_some() && test.attribute_index(USER).is_some();
    if !users_possible && types.iter().any(|k| k.needs_users()) {
        log::warn!("no process model or user attribute: user anomalies disabled");
        types.retain(|k| !k.needs_users());
    }
    if types.is_empty() {
        return Err(CliError::usage(
            "inject.enabled_types: no applicable anomaly type remains",
        ));
    }
    for (log, noise, split, stem) in [
        (&train, cfg.inject.noise_level, Split::Train, "train"),
        (&test, cfg.inject.test_noise_level, Split::Test, "test"),
    ] {
        let icfg = inject_config(model.as_ref(), noise, &types, split, cfg.seed);
        let injection = inject_anomalies(log, model.as_ref(), &icfg)?;
        write(cfg, &injection.log, &log_file(cfg, &dir, &format!("{stem}_noisy"))?)?;
        write_labels(&injection.labels, &dir.join(format!("{stem}_labels.jsonl")))?;
        println!(
            "{stem}: {} of {} traces anomalous",
            injection.labels.anomalous_count(),
            injection.log.len()
        );
    }
    Ok(())
}

pub fn train(cfg: &PipelineConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let model = process_model(cfg, &dir)?;
    let log = read(cfg, &noisy_train(cfg, &dir)?)?;
    let settings = cfg.detector.settings(&cfg.train);
    let detector = fit_detector(cfg.detector.kind, &log, model.as_ref(), &settings, cfg.seed)?;
    let path = detector_file(cfg, &dir);
    detector.save(&path)?;
    if let FittedDetector::Dae(m) = &detector {
        write_atomic(&dir.join("dae_history.csv"), m.history.to_csv().as_bytes())?;
        println!(
            "trained {} epochs (best {}, validation loss {:.6})",
            m.history.epochs.len(),
            m.history.best_epoch,
            m.history.best_val_loss
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn load_detector(cfg: &PipelineConfig, dir: &Path) -> Result<FittedDetector> {
    let detector = FittedDetector::load(&detector_file(cfg, dir))?;
    if detector.kind() != cfg.detector.kind {
        return Err(CliError::usage(format!(
            "detector file holds {}, but {} was requested",
            detector.kind(),
            cfg.detector.kind
        )));
    }
    Ok(detector)
}

fn score_test(cfg: &PipelineConfig, dir: &Path) -> Result<(FittedDetector, EventLog, ScoreReport)> {
    let detector = load_detector(cfg, dir)?;
    let log = read(cfg, &noisy_test(cfg, dir)?)?;
    let report = detector.score(&log, cfg.detector.alpha)?;
    Ok((detector, log, report))
}

pub fn score(cfg: &PipelineConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let (_, _, report) = score_test(cfg, &dir)?;
    let stem = format!("scores_{}", file_stem(cfg.detector.kind));
    report.write_all(&dir, &stem)?;
    println!(
        "{} of {} traces flagged; wrote {}",
        report.anomalous_trace_count(),
        report.traces.len(),
        dir.join(format!("{stem}.jsonl")).display()
    );
    Ok(())
}

fn metrics_csv(rows: &[MetricRow], alpha: f64) -> String {
    let mut out = String::from(
        "resolution,alpha,f1_macro,f1_normal,f1_anomaly,precision_normal,precision_anomaly,recall_normal,recall_anomaly,support_normal,support_anomaly\n",
    );
    for m in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            m.resolution,
            alpha,
            m.f1_macro,
            m.normal.f1,
            m.anomaly.f1,
            m.normal.precision,
            m.anomaly.precision,
            m.normal.recall,
            m.anomaly.recall,
            m.normal.support,
            m.anomaly.support
        ));
    }
    out
}

fn test_labels(cfg: &PipelineConfig, dir: &Path, log: &EventLog) -> Result<LabelSet> {
    let path = cfg
        .paths
        .test_labels
        .clone()
        .unwrap_or_else(|| dir.join("test_labels.jsonl"));
    Ok(read_labels(&path, log)?)
}

pub fn evaluate(cfg: &PipelineConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let (detector, log, mut report) = score_test(cfg, &dir)?;
    let labels = test_labels(cfg, &dir, &log)?;
    let stem = file_stem(cfg.detector.kind);
    let mut alpha = cfg.detector.alpha;
    if let (false, Some(means)) = (cfg.detector.alpha_grid.is_empty(), detector.training_means()) {
        let case = AlphaCase {
            report: &report,
            labels: &labels,
            means,
        };
        let (best, scores) = grid_search_alpha(&[case], &cfg.detector.alpha_grid)?;
        let mut grid = String::from("alpha,trace_f1_macro\n");
        for (a, f) in &scores {
            grid.push_str(&format!("{a},{f}\n"));
        }
        write_atomic(&dir.join(format!("alpha_grid_{stem}.csv")), grid.as_bytes())?;
        alpha = best;
        report.rethreshold(means.map(|m| best * m));
    }
    let rows = score_to_metrics(&report, &labels)?;
    write_atomic(
        &dir.join(format!("metrics_{stem}.csv")),
        metrics_csv(&rows, alpha).as_bytes(),
    )?;
    for m in &rows {
        println!(
            "{:<9} macro F1 {:.3} (normal {:.3}, anomaly {:.3})",
            m.resolution.name(),
            m.f1_macro,
            m.normal.f1,
            m.anomaly.f1
        );
    }
    Ok(())
}

pub fn sweep(cfg: &PipelineConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let outcome = run_sweep(&cfg.sweep, &dir)?;
    println!(
        "{} rows ({} cells resumed, {} failed); wrote {}",
        outcome.rows.len(),
        outcome.resumed,
        outcome.failures.len(),
        outcome.results_path.display()
    );
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError {
            code: 2,
            message: format!("{} sweep cells failed; see failures.csv", outcome.failures.len()),
        })
    }
}

pub fn heatmap(cfg: &PipelineConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let (_, _, mut report) = score_test(cfg, &dir)?;
    if cfg.heatmap.case_ids.is_empty() {
        report.traces.retain(|t| t.anomalous);
        report.traces.truncate(cfg.heatmap.limit);
    } else {
        let wanted = &cfg.heatmap.case_ids;
        if let Some(missing) = wanted
            .iter()
            .find(|id| !report.traces.iter().any(|t| &t.case_id == *id))
        {
            return Err(CliError {
                code: 2,
                message: format!("heatmap: case {missing:?} not in the test log"),
            });
        }
        report.traces.retain(|t| wanted.contains(&t.case_id));
    }
    let stem = format!("heatmap_{}", file_stem(cfg.detector.kind));
    write_atomic(&dir.join(format!("{stem}.csv")), report.heatmap_csv()?.as_bytes())?;
    write_atomic(&dir.join(format!("{stem}.svg")), report.heatmap_svg().as_bytes())?;
    println!("rendered {} traces to {}", report.traces.len(), dir.join(format!("{stem}.svg")).display());
    Ok(())
}

