//! Acceptance suite: every criterion runs at its stated tolerance and prints one
//! PASS/FAIL line. The process exits non-zero if any criterion fails.
//!
//! Run alone with `cargo test -p bpad-core --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::time::Instant;

use ndarray::Array2;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::IndexedRandom;
use rand::Rng as _;

use bpad_core::anomalies::{inject, AnomalyKind, InjectConfig};
use bpad_core::detectors::{
    fit_threshold, tstide_fit, tstide_score, DetectorKind, ErrorLists, PerResolution,
    RawTraceScores, Resolution, ScoreReport, WindowVariant,
};
use bpad_core::encoding::EncodingLayout;
use bpad_core::eval::{
    confusions, grid_search_alpha, make_dataset, resolve_model, run_detector, run_sweep,
    AlphaCase, Dataset, DetectorRun, DetectorSettings, ExperimentSpec, MetricRow,
};
use bpad_core::eventlog::{Alphabet, EventLog, LabelSet, USER};
use bpad_core::neuralnet::{adam_update, AdamParams, Corruption, Mode, Network};
use bpad_core::procgen::{builtin_p2p, sample_log, ProcessModel};
use bpad_core::seed;

use common::{check_injection, toy_log, BruteStide};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------------------
// 1. Encoding width

fn encoding_width() -> Outcome {
    let mut activities = Alphabet::new();
    for i in 0..10 {
        activities.insert(&format!("a{i}"));
    }
    let mut users = Alphabet::new();
    for i in 0..20 {
        users.insert(&format!("u{i}"));
    }
    let layout = EncodingLayout::new(activities, vec![USER.into()], vec![users], 12, false)
        .expect("valid layout");
    let w = layout.total_width();
    outcome(w == 360, format!("10 activities, 20 users, max_len 12 -> width {w}"))
}

// ---------------------------------------------------------------------------
// 2. Gradient check

fn mse(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let d = a - b;
    d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64
}

/// Loss under the dropout masks drawn from `mask_seed` (the same masks on every call).
fn loss(net: &Network, x: &Array2<f64>, y: &Array2<f64>, c: Corruption, mask_seed: u64) -> f64 {
    let cache = net
        .forward(x.view(), Mode::Train(c), &mut seed::rng(mask_seed))
        .expect("forward");
    mse(&cache.output, y)
}

/// Worst relative error between analytic and central-difference gradients.
fn gradient_case(case: u64) -> f64 {
    let mut rng = seed::rng(seed::derive(case, "gradient-case"));
    let d = rng.random_range(2..=8);
    let h = rng.random_range(1..=4);
    let sizes = if rng.random_bool(0.5) {
        vec![d, h, d]
    } else {
        vec![d, h, h, d]
    };
    let rows = rng.random_range(1..=4);
    let c = Corruption {
        noise_mu: 0.0,
        noise_sigma: 0.0,
        dropout: if case % 2 == 0 { 0.0 } else { 0.3 },
    };
    let mut net = Network::glorot(&sizes, &mut rng).expect("net");
    for layer in &mut net.layers {
        layer.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    let x = Array2::from_shape_simple_fn((rows, d), || rng.random_range(-1.0..1.0));
    let y = Array2::from_shape_simple_fn((rows, d), || rng.random_range(-1.0..1.0));
    let mask_seed = rng.random::<u64>();

    let cache = net
        .forward(x.view(), Mode::Train(c), &mut seed::rng(mask_seed))
        .expect("forward");
    let (l, grads) = net.backward(&cache, y.view()).expect("backward");
    assert!((l - mse(&cache.output, &y)).abs() < 1e-12);

    let step = 1e-5;
    let mut worst = 0.0f64;
    let mut compare = |numeric: f64, analytic: f64| {
        let scale = numeric.abs().max(analytic.abs()).max(1e-7);
        worst = worst.max((numeric - analytic).abs() / scale);
    };
    for li in 0..net.layers.len() {
        let (rows_w, cols_w) = net.layers[li].weights.dim();
        for r in 0..rows_w {
            for col in 0..cols_w {
                let mut p = net.clone();
                p.layers[li].weights[[r, col]] += step;
                let mut m = net.clone();
                m.layers[li].weights[[r, col]] -= step;
                let numeric = (loss(&p, &x, &y, c, mask_seed) - loss(&m, &x, &y, c, mask_seed))
                    / (2.0 * step);
                compare(numeric, grads.layers[li].0[[r, col]]);
            }
        }
        for b in 0..net.layers[li].bias.len() {
            let mut p = net.clone();
            p.layers[li].bias[b] += step;
            let mut m = net.clone();
            m.layers[li].bias[b] -= step;
            let numeric =
                (loss(&p, &x, &y, c, mask_seed) - loss(&m, &x, &y, c, mask_seed)) / (2.0 * step);
            compare(numeric, grads.layers[li].1[b]);
        }
    }
    worst
}

fn gradient_check() -> Outcome {
    let started = Instant::now();
    let worst = (0..100).map(gradient_case).fold(0.0f64, f64::max);
    let secs = started.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-4 && secs < 10.0,
        format!("100 cases, worst relative error {worst:.2e} (≤ 1e-4), {secs:.2} s (< 10 s)"),
    )
}

// ---------------------------------------------------------------------------
// 3. Adam transcript

fn adam_transcript() -> Outcome {
    // Reference values evaluated with 50-digit decimal arithmetic.
    let expected = [
        ([0.490_000_000_099_999_999, -1.009_999_999_500_000_025], [0.1, 0.02], [0.01, 0.0004]),
        ([0.487_333_005_843_007_273, -1.019_899_462_957_465_378], [0.04, 0.048], [0.0124, 0.001296]),
    ];
    let grads = [[1.0, 0.2], [-0.5, 0.3]];
    let cfg = AdamParams::default();
    let mut p = [0.5, -1.0];
    let (mut m, mut v) = ([0.0; 2], [0.0; 2]);
    let mut worst = 0.0f64;
    for (t, (g, (ep, em, ev))) in grads.iter().zip(expected).enumerate() {
        adam_update(&mut p, g, &mut m, &mut v, t as u64 + 1, 0.01, &cfg);
        for i in 0..2 {
            worst = worst
                .max((p[i] - ep[i]).abs())
                .max((m[i] - em[i]).abs())
                .max((v[i] - ev[i]).abs());
        }
    }
    outcome(worst <= 1e-12, format!("two steps, max deviation {worst:.1e} (≤ 1e-12)"))
}

// ---------------------------------------------------------------------------
// 4. Threshold arithmetic and α-monotonicity

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn threshold_exact() -> (usize, usize) {
    let mut rng = seed::rng(4);
    let mut exact = 0;
    let cases = 200;
    for _ in 0..cases {
        // Dyadic errors, a power-of-two count and a dyadic α keep every step exact.
        let n = 1usize << rng.random_range(0..6);
        let errors: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(0..1024u32)) / 64.0)
            .collect();
        let alpha = f64::from(rng.random_range(0..16u32)) / 4.0;
        let lists = ErrorLists {
            trace: errors.clone(),
            event: errors.clone(),
            attribute: errors.clone(),
        };
        let t = fit_threshold(&lists, alpha).expect("threshold");
        let sum = errors
            .iter()
            .fold(BigRational::from_integer(BigInt::from(0)), |a, &e| a + rational(e));
        let want = rational(alpha) * sum / BigRational::from_integer(BigInt::from(n));
        if Resolution::ALL.iter().all(|&r| rational(t.tau(r)) == want) {
            exact += 1;
        }
    }
    (exact, cases)
}

fn random_report(rng: &mut seed::Rng) -> (EventLog, ScoreReport) {
    let n = rng.random_range(1..=8);
    let traces: Vec<Vec<(String, String)>> = (0..n)
        .map(|_| {
            (0..rng.random_range(1..=6))
                .map(|_| {
                    (
                        format!("a{}", rng.random_range(0..4)),
                        format!("u{}", rng.random_range(0..3)),
                    )
                })
                .collect()
        })
        .collect();
    let log = toy_log(&traces);
    let raw = log
        .traces()
        .iter()
        .map(|t| RawTraceScores {
            score: rng.random_range(0.0..1.0),
            events: (0..t.len()).map(|_| rng.random_range(0.0..1.0)).collect(),
            attrs: (0..t.len())
                .map(|_| (0..2).map(|_| rng.random_range(0.0..1.0)).collect())
                .collect(),
        })
        .collect();
    let report = ScoreReport::new("test", &log, log.max_trace_len(), PerResolution::default(), raw)
        .expect("report");
    (log, report)
}

fn flagged(report: &ScoreReport) -> Vec<bool> {
    report
        .traces
        .iter()
        .flat_map(|t| {
            std::iter::once(t.anomalous)
                .chain(t.event_anomalous.iter().copied())
                .chain(t.attr_anomalous.iter().flatten().copied())
        })
        .collect()
}

fn monotonicity() -> usize {
    let mut rng = seed::rng(44);
    let mut violations = 0;
    for _ in 0..1000 {
        let (_, mut report) = random_report(&mut rng);
        let means = PerResolution {
            trace: rng.random_range(0.01..1.0),
            event: rng.random_range(0.01..1.0),
            attribute: rng.random_range(0.01..1.0),
        };
        let mut alphas: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..4.0)).collect();
        alphas.sort_by(f64::total_cmp);
        let mut previous: Option<Vec<bool>> = None;
        for a in alphas {
            report.rethreshold(means.map(|m| a * m));
            let now = flagged(&report);
            if let Some(prev) = &previous {
                if now.iter().zip(prev).any(|(&n, &p)| n && !p) {
                    violations += 1;
                }
            }
            previous = Some(now);
        }
    }
    violations
}

fn threshold_criterion() -> Outcome {
    let (exact, cases) = threshold_exact();
    let violations = monotonicity();
    outcome(
        exact == cases && violations == 0,
        format!("{exact}/{cases} exact rational thresholds; {violations} monotonicity violations in 1000 score sets"),
    )
}

// ---------------------------------------------------------------------------
// 5. t-STIDE oracle equivalence

fn random_toy(rng: &mut seed::Rng) -> Vec<Vec<(String, String)>> {
    (0..rng.random_range(1..=10))
        .map(|_| {
            (0..rng.random_range(1..=8))
                .map(|_| {
                    (
                        ["a", "b", "c", "d"].choose(rng).unwrap().to_string(),
                        ["u1", "u2", "u3"].choose(rng).unwrap().to_string(),
                    )
                })
                .collect()
        })
        .collect()
}

fn tstide_equivalence() -> Outcome {
    let mut rng = seed::rng(5);
    let mut mismatches = Vec::new();
    for case in 0..50 {
        let train = toy_log(&random_toy(&mut rng));
        let test = toy_log(&random_toy(&mut rng));
        let k = rng.random_range(2..=5);
        for (variant, users) in [
            (WindowVariant::Activity, false),
            (WindowVariant::ActivityAttributes, true),
        ] {
            let model = tstide_fit(&train, k, variant).expect("fit");
            let oracle = BruteStide::fit(&train, k, users);
            let mut counts: Vec<u64> = model.counts.values().copied().collect();
            counts.sort_unstable();
            let mut ok = model.total == oracle.total && counts == oracle.sorted_counts();
            for log in [&train, &test] {
                let report = tstide_score(&model, log, 1.0).expect("score");
                for (t, s) in log.traces().iter().zip(&report.traces) {
                    let (score, events) = oracle.score(t);
                    ok &= s.score == score && s.event_scores == events;
                }
            }
            if !ok {
                mismatches.push(format!("case {case} ({variant:?}, k={k})"));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("50 toy logs x 2 variants, mismatches: {mismatches:?}"),
    )
}

// ---------------------------------------------------------------------------
// 6–9. Desk-scale detection

const TUNING_SEEDS: [u64; 2] = [100, 101];
const EVAL_SEEDS: [u64; 3] = [0, 1, 2];
const TUNED: [DetectorKind; 3] = [DetectorKind::Dae, DetectorKind::TStide, DetectorKind::TStidePlus];

/// Candidate α values 0.50, 0.51, …, 4.00. The t-STIDE scores are log ratios and
/// need a finer grid than the documented default.
fn alpha_grid() -> Vec<f64> {
    (50..=400).map(|i| f64::from(i) / 100.0).collect()
}

struct Cell {
    data: Dataset,
    runs: BTreeMap<&'static str, DetectorRun>,
}

fn run_cell(model_name: &str, seed: u64, noise: f64, kinds: &[DetectorKind]) -> Cell {
    let started = Instant::now();
    let model = resolve_model(model_name, seed).expect("model");
    let data = make_dataset(&model, noise, &Default::default(), seed).expect("dataset");
    let settings = DetectorSettings::default();
    let runs = kinds
        .iter()
        .map(|&k| (k.name(), run_detector(k, &data, &settings, seed).expect("detector")))
        .collect();
    eprintln!(
        "  cell {model_name} seed {seed} noise {noise}: {:.1} s",
        started.elapsed().as_secs_f64()
    );
    Cell { data, runs }
}

/// Metric rows of `run` rethresholded at `alpha`.
fn metrics_at(run: &DetectorRun, labels: &LabelSet, alpha: f64) -> (ScoreReport, [MetricRow; 3]) {
    let mut report = run.report.clone();
    if let Some(means) = run.detector.training_means() {
        report.rethreshold(means.map(|m| alpha * m));
    }
    let c = confusions(&report, labels).expect("confusions");
    let rows = [
        MetricRow::from_confusion(Resolution::Trace, &c[0]),
        MetricRow::from_confusion(Resolution::Event, &c[1]),
        MetricRow::from_confusion(Resolution::Attribute, &c[2]),
    ];
    (report, rows)
}

fn tune_alphas() -> BTreeMap<&'static str, f64> {
    let cells: Vec<Cell> = TUNING_SEEDS
        .iter()
        .map(|&s| run_cell("small", s, 0.3, &TUNED))
        .collect();
    let grid = alpha_grid();
    TUNED
        .iter()
        .map(|k| {
            let cases: Vec<AlphaCase<'_>> = cells
                .iter()
                .map(|c| {
                    let run = &c.runs[k.name()];
                    AlphaCase {
                        report: &run.report,
                        labels: &c.data.test.labels,
                        means: run.detector.training_means().expect("thresholded detector"),
                    }
                })
                .collect();
            let (best, _) = grid_search_alpha(&cases, &grid).expect("grid search");
            (k.name(), best)
        })
        .collect()
}

fn mean_trace_error(report: &ScoreReport, labels: &LabelSet) -> (f64, f64) {
    let (mut anomalous, mut normal) = (Vec::new(), Vec::new());
    for (s, l) in report.traces.iter().zip(&labels.traces) {
        if l.trace.is_anomaly() {
            anomalous.push(s.score);
        } else {
            normal.push(s.score);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    (mean(&anomalous), mean(&normal))
}

/// Incorrect-user true positives and how many peak on the altered user slot.
fn localization(data: &Dataset, report: &ScoreReport) -> (usize, usize) {
    let (mut hits, mut total) = (0, 0);
    let index: BTreeMap<&str, usize> = report
        .traces
        .iter()
        .enumerate()
        .map(|(i, t)| (t.case_id.as_str(), i))
        .collect();
    for record in &data.test.records {
        if record.kind != AnomalyKind::IncorrectUser {
            continue;
        }
        let t = &report.traces[index[record.case_id.as_str()]];
        if !t.anomalous {
            continue;
        }
        total += 1;
        let mut best = (f64::NEG_INFINITY, (0, 0));
        for (e, row) in t.attr_scores.iter().enumerate() {
            for (f, &s) in row.iter().enumerate() {
                if s > best.0 {
                    best = (s, (e, f));
                }
            }
        }
        if record.slots.contains(&best.1) {
            hits += 1;
        }
    }
    (hits, total)
}

struct DeskScale {
    detection: Outcome,
    localization: Outcome,
    noise: Outcome,
    separation: Outcome,
}

fn desk_scale() -> DeskScale {
    eprintln!("  tuning α on seeds {TUNING_SEEDS:?}");
    let alphas = tune_alphas();
    eprintln!("  tuned α: {alphas:?}");
    let trace_f1 = |cell: &Cell, k: DetectorKind| {
        let alpha = alphas.get(k.name()).copied().unwrap_or(0.0);
        metrics_at(&cell.runs[k.name()], &cell.data.test.labels, alpha).1[0].f1_macro
    };

    // 6 and 8 share the evaluation runs.
    let mut passing = 0;
    let mut lines = Vec::new();
    let (mut hits, mut tps) = (0, 0);
    let (mut dae_attr, mut plus_attr) = (0.0, 0.0);
    let mut separation = Vec::new();
    let mut separated = true;
    for &s in &EVAL_SEEDS {
        let cell = run_cell("small", s, 0.3, &DetectorKind::ALL);
        let dae = trace_f1(&cell, DetectorKind::Dae);
        let random = trace_f1(&cell, DetectorKind::Random);
        let stide = trace_f1(&cell, DetectorKind::TStide);
        let plus = trace_f1(&cell, DetectorKind::TStidePlus);
        let ok = dae >= 0.75 && dae - random >= 0.25 && plus >= stide;
        passing += usize::from(ok);
        lines.push(format!(
            "seed {s}: dae {dae:.3} random {random:.3} tstide {stide:.3} tstide+ {plus:.3} {}",
            if ok { "ok" } else { "miss" }
        ));

        let (dae_report, dae_rows) =
            metrics_at(&cell.runs["dae"], &cell.data.test.labels, alphas["dae"]);
        let (_, plus_rows) =
            metrics_at(&cell.runs["tstide+"], &cell.data.test.labels, alphas["tstide+"]);
        let (h, t) = localization(&cell.data, &dae_report);
        hits += h;
        tps += t;
        dae_attr += dae_rows[2].f1_macro / EVAL_SEEDS.len() as f64;
        plus_attr += plus_rows[2].f1_macro / EVAL_SEEDS.len() as f64;

        if s == EVAL_SEEDS[0] {
            let (a, n) = mean_trace_error(&cell.runs["dae"].report, &cell.data.test.labels);
            separated &= a > n;
            separation.push(format!("0.3: {a:.5} > {n:.5}"));
        }
    }
    let detection = outcome(passing * 2 > EVAL_SEEDS.len(), format!(
        "{passing}/{} seeds pass (α {:?}); {}",
        EVAL_SEEDS.len(),
        alphas,
        lines.join("; ")
    ));
    let share = if tps == 0 { 0.0 } else { hits as f64 / tps as f64 };
    let localization = outcome(
        share >= 0.6 && dae_attr > plus_attr,
        format!(
            "{hits}/{tps} incorrect-user true positives peak on the user slot ({:.1}% ≥ 60%); attribute F1 dae {dae_attr:.3} > tstide+ {plus_attr:.3}",
            100.0 * share
        ),
    );

    // 7: all training traces anomalous.
    let cell = run_cell("small", EVAL_SEEDS[0], 1.0, &[DetectorKind::Dae, DetectorKind::Random]);
    let dae = trace_f1(&cell, DetectorKind::Dae);
    let random = trace_f1(&cell, DetectorKind::Random);
    let noise = outcome(
        dae - random >= 0.10,
        format!("noise 1.0: dae {dae:.3} - random {random:.3} = {:.3} (≥ 0.10)", dae - random),
    );

    // 9: the remaining noise levels up to 0.5.
    for noise in [0.1, 0.2, 0.4, 0.5] {
        let cell = run_cell("small", EVAL_SEEDS[0], noise, &[DetectorKind::Dae]);
        let (a, n) = mean_trace_error(&cell.runs["dae"].report, &cell.data.test.labels);
        separated &= a > n;
        separation.push(format!("{noise}: {a:.5} > {n:.5}"));
    }
    separation.sort();
    let separation = outcome(
        separated,
        format!("mean trace error anomalous > normal per noise level: {}", separation.join("; ")),
    );

    DeskScale {
        detection,
        localization,
        noise,
        separation,
    }
}

// ---------------------------------------------------------------------------
// 10. Injector invariants

fn injection_invariants() -> Outcome {
    let models: Vec<ProcessModel> = std::iter::once(builtin_p2p())
        .chain((0..3).map(|s| resolve_model("small", s).expect("model")))
        .collect();
    let mut rng = seed::rng(10);
    let mut violations = Vec::new();
    let runs = 10_000;
    for i in 0..runs {
        let model = &models[i % models.len()];
        let log = sample_log(model, rng.random_range(1..=20), rng.random()).expect("sample");
        let with_model = rng.random_bool(0.8);
        let pool: &[AnomalyKind] = if with_model {
            &AnomalyKind::ALL
        } else {
            &AnomalyKind::CONTROL_FLOW
        };
        let mut types: Vec<AnomalyKind> =
            pool.iter().copied().filter(|_| rng.random_bool(0.6)).collect();
        // Skip applies to every trace of these models, so no selection can be stuck.
        if !types.contains(&AnomalyKind::Skip) {
            types.push(AnomalyKind::Skip);
        }
        let cfg = InjectConfig {
            noise_level: f64::from(rng.random_range(0..=10u32)) / 10.0,
            enabled_types: types,
            seed: rng.random(),
            max_len: with_model.then(|| model.max_variant_len() + 1),
        };
        let m = with_model.then_some(model);
        let result = inject(&log, m, &cfg)
            .map_err(|e| e.to_string())
            .and_then(|out| check_injection(&log, m, &cfg, &out));
        if let Err(e) = result {
            violations.push(format!("run {i}: {e}"));
        }
    }
    violations.truncate(3);
    outcome(
        violations.is_empty(),
        format!("{runs} randomized injections, violations: {violations:?}"),
    )
}

// ---------------------------------------------------------------------------
// 11. Determinism

fn read_tree(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("read dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).expect("read"));
            }
        }
    }
    out
}

fn pipeline_once(dir: &std::path::Path) {
    use bpad_core::eventlog::{write_labels, write_log, LogFormat};
    let mut spec = ExperimentSpec {
        models: vec!["p2p".into()],
        noise_levels: vec![0.3],
        seeds: vec![7],
        ..ExperimentSpec::default()
    };
    spec.data.n_train = 300;
    spec.data.n_test = 100;
    spec.detector.train.max_epochs = 5;
    run_sweep(&spec, &dir.join("sweep")).expect("sweep");

    // The individual stages, with every intermediate artifact written to disk.
    let model = resolve_model("p2p", 7).expect("model");
    std::fs::write(dir.join("model.json"), model.to_json().unwrap()).unwrap();
    let data = make_dataset(&model, 0.3, &spec.data, 7).expect("dataset");
    write_log(&data.train.log, &dir.join("train.jsonl"), LogFormat::Jsonl).unwrap();
    write_log(&data.test.log, &dir.join("test.jsonl"), LogFormat::Jsonl).unwrap();
    write_labels(&data.train.labels, &dir.join("train_labels.jsonl")).unwrap();
    write_labels(&data.test.labels, &dir.join("test_labels.jsonl")).unwrap();
    for kind in DetectorKind::ALL {
        let run = run_detector(kind, &data, &spec.detector, 7).expect("run");
        let stem = kind.name().replace('+', "_plus");
        run.detector.save(&dir.join(format!("{stem}.model"))).unwrap();
        run.report.write_all(dir, &stem).unwrap();
        let metrics: String = run
            .metrics
            .iter()
            .map(|m| format!("{:?}\n", m))
            .collect();
        std::fs::write(dir.join(format!("{stem}_metrics.txt")), metrics).unwrap();
    }
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline_once(a.path());
    pipeline_once(b.path());
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    let differing: Vec<&String> = ta
        .iter()
        .filter(|(k, v)| tb.get(*k) != Some(*v))
        .map(|(k, _)| k)
        .collect();
    outcome(
        ta.len() == tb.len() && differing.is_empty() && ta.len() > 10,
        format!("{} files compared, differing: {differing:?}", ta.len()),
    )
}

// ---------------------------------------------------------------------------
// 12. P2P fixture

fn p2p_fixture() -> Outcome {
    let m = builtin_p2p();
    let got = (m.n_nodes(), m.n_edges(), m.variants.len(), m.max_variant_len());
    outcome(
        got == (14, 16, 6, 9),
        format!("nodes {}, edges {}, variants {}, max length {}", got.0, got.1, got.2, got.3),
    )
}

// ---------------------------------------------------------------------------

fn report(failures: &mut usize, id: usize, name: &str, o: Outcome) {
    if !o.pass {
        *failures += 1;
    }
    println!(
        "{} [{id:>2}] {name}: {}",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail
    );
    std::io::stdout().flush().ok();
}

fn main() {
    // `cargo test -- --list` and filtered runs expect a quiet harness.
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let started = Instant::now();
    let mut failures = 0;
    report(&mut failures, 1, "encoding width", encoding_width());
    report(&mut failures, 2, "gradient check", gradient_check());
    report(&mut failures, 3, "Adam transcript", adam_transcript());
    report(&mut failures, 4, "threshold arithmetic", threshold_criterion());
    report(&mut failures, 5, "t-STIDE oracle", tstide_equivalence());
    let desk = desk_scale();
    report(&mut failures, 6, "desk-scale detection", desk.detection);
    report(&mut failures, 7, "noise robustness", desk.noise);
    report(&mut failures, 8, "localization", desk.localization);
    report(&mut failures, 9, "error separation", desk.separation);
    report(&mut failures, 10, "injector invariants", injection_invariants());
    report(&mut failures, 11, "determinism", determinism());
    report(&mut failures, 12, "P2P fixture", p2p_fixture());
    println!(
        "acceptance: {} of 12 criteria passed in {:.0} s",
        12 - failures,
        started.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
