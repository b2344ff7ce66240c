//! Helpers shared by the integration tests: toy-log builders and independent
//! reference implementations used as oracles.

#![allow(dead_code)]

use std::collections::HashMap;

use bpad_core::anomalies::{AnomalyKind, InjectConfig, Injection};
use bpad_core::eventlog::{Event, EventLog, Label, Trace, USER};
use bpad_core::procgen::ProcessModel;

/// A log with a single `user` attribute from `(activity, user)` pairs.
pub fn toy_log(traces: &[Vec<(String, String)>]) -> EventLog {
    let traces = traces
        .iter()
        .enumerate()
        .map(|(i, events)| Trace {
            case_id: format!("c{i}"),
            events: events
                .iter()
                .map(|(a, u)| Event::new(a.clone(), vec![u.clone()]))
                .collect(),
        })
        .collect();
    EventLog::new(vec![USER.to_string()], traces).expect("valid toy log")
}

/// A window as a tuple of `(activity, user)` steps; `None` closes a window cut
/// short by the end of its trace.
type Window = Vec<Option<(String, Option<String>)>>;

fn step(e: &Event, with_users: bool) -> Option<(String, Option<String>)> {
    Some((e.activity.clone(), with_users.then(|| e.attrs[0].clone())))
}

/// Every window of `trace` with the index of its last event, enumerated by
/// nested loops rather than slice windows.
pub fn brute_windows(trace: &Trace, k: usize, with_users: bool) -> Vec<(Window, usize)> {
    let n = trace.events.len();
    let mut out = Vec::new();
    if n < k {
        let mut w: Window = trace.events.iter().map(|e| step(e, with_users)).collect();
        w.push(None);
        out.push((w, n - 1));
        return out;
    }
    let mut start = 0;
    while start + k <= n {
        let mut w = Window::new();
        for offset in 0..k {
            w.push(step(&trace.events[start + offset], with_users));
        }
        out.push((w, start + k - 1));
        start += 1;
    }
    out
}

/// Reference sliding-window detector.
pub struct BruteStide {
    pub counts: HashMap<Window, u64>,
    pub total: u64,
    pub k: usize,
    pub with_users: bool,
}

impl BruteStide {
    pub fn fit(log: &EventLog, k: usize, with_users: bool) -> Self {
        let mut counts = HashMap::new();
        let mut total = 0;
        for t in log.traces() {
            for (w, _) in brute_windows(t, k, with_users) {
                *counts.entry(w).or_insert(0) += 1;
                total += 1;
            }
        }
        Self {
            counts,
            total,
            k,
            with_users,
        }
    }

    pub fn window_score(&self, w: &Window) -> f64 {
        let c = self.counts.get(w).copied().unwrap_or(0) as f64;
        let c = if c < 0.5 { 0.5 } else { c };
        -(c / self.total as f64).ln()
    }

    /// Trace score and per-event scores.
    pub fn score(&self, trace: &Trace) -> (f64, Vec<f64>) {
        let mut events = vec![0.0f64; trace.events.len()];
        let mut best = 0.0f64;
        for (w, last) in brute_windows(trace, self.k, self.with_users) {
            let s = self.window_score(&w);
            if s > best {
                best = s;
            }
            if s > events[last] {
                events[last] = s;
            }
        }
        (best, events)
    }

    /// Window counts sorted, for comparison with an opaque key scheme.
    pub fn sorted_counts(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.counts.values().copied().collect();
        v.sort_unstable();
        v
    }
}

fn user_of(e: &Event, k: usize) -> &str {
    &e.attrs[k]
}

fn permitted(model: &ProcessModel, activity: &str, user: &str) -> bool {
    let a = model.activities.iter().position(|x| x == activity);
    let u = model.users.iter().position(|x| x == user);
    match (a, u) {
        (Some(a), Some(u)) => model.permitted_users[a].contains(&u),
        _ => false,
    }
}

/// Checks every structural postcondition of an injection against its input.
pub fn check_injection(
    original: &EventLog,
    model: Option<&ProcessModel>,
    cfg: &InjectConfig,
    out: &Injection,
) -> Result<(), String> {
    let n = original.len();
    if out.log.len() != n || out.labels.len() != n {
        return Err("trace count changed".into());
    }
    let expected = ((cfg.noise_level * n as f64) + 1e-9).floor() as usize;
    if out.records.len() != expected || out.labels.anomalous_count() != expected {
        return Err(format!(
            "expected {expected} anomalies, got {} records / {} labels",
            out.records.len(),
            out.labels.anomalous_count()
        ));
    }
    let max_len = out.log.max_trace_len();
    let n_fields = 1 + out.log.attribute_names().len();
    let records: HashMap<&str, _> = out.records.iter().map(|r| (r.case_id.as_str(), r)).collect();
    if records.len() != out.records.len() {
        return Err("more than one record for a trace".into());
    }
    let user_k = out.log.attribute_index(USER);
    for ((before, after), labels) in original
        .traces()
        .iter()
        .zip(out.log.traces())
        .zip(&out.labels.traces)
    {
        if before.case_id != after.case_id || labels.case_id != after.case_id {
            return Err("trace order changed".into());
        }
        labels.check_consistency()?;
        if labels.events.len() != max_len || labels.attrs.iter().any(|r| r.len() != n_fields) {
            return Err(format!("{}: label shape", after.case_id));
        }
        if labels.len() != after.len() {
            return Err(format!("{}: label length", after.case_id));
        }
        let Some(record) = records.get(after.case_id.as_str()) else {
            if before != after || labels.trace.is_anomaly() {
                return Err(format!("{}: normal trace altered", after.case_id));
            }
            continue;
        };
        if !cfg.enabled_types.contains(&record.kind) {
            return Err(format!("{}: disabled type {}", after.case_id, record.kind));
        }
        if labels.anomaly.as_ref() != Some(*record) {
            return Err(format!("{}: sidecar record mismatch", after.case_id));
        }
        // Marked slots are exactly the record's slots.
        let mut marked = Vec::new();
        for (i, row) in labels.attrs.iter().enumerate() {
            for (f, l) in row.iter().enumerate() {
                if *l == Label::Anomaly {
                    marked.push((i, f));
                }
            }
        }
        let mut slots = record.slots.clone();
        slots.sort_unstable();
        if marked != slots || slots.is_empty() {
            return Err(format!("{}: marked slots {marked:?} vs {slots:?}", after.case_id));
        }
        if record.events.iter().any(|&p| p >= after.len()) {
            return Err(format!("{}: position out of range", after.case_id));
        }
        let (b, a) = (&before.events, &after.events);
        match record.kind {
            AnomalyKind::Skip => {
                if a.len() + 1 != b.len() {
                    return Err(format!("{}: skip length", after.case_id));
                }
                let removed = (0..b.len()).any(|p| {
                    let mut v = b.clone();
                    v.remove(p);
                    v == *a
                });
                if !removed {
                    return Err(format!("{}: skip is not a removal", after.case_id));
                }
            }
            AnomalyKind::Switch => {
                let &[p, q] = record.events.as_slice() else {
                    return Err(format!("{}: switch positions", after.case_id));
                };
                if a.len() != b.len() || q != p + 1 {
                    return Err(format!("{}: switch shape", after.case_id));
                }
                for i in 0..a.len() {
                    let src = if i == p {
                        q
                    } else if i == q {
                        p
                    } else {
                        i
                    };
                    if !a[i].same_step(&b[src]) {
                        return Err(format!("{}: switch is not a swap", after.case_id));
                    }
                }
                if a[p].activity == a[q].activity {
                    return Err(format!("{}: switch of identical activities", after.case_id));
                }
            }
            AnomalyKind::Rework => {
                let &[p, q] = record.events.as_slice() else {
                    return Err(format!("{}: rework positions", after.case_id));
                };
                if a.len() != b.len() + 1 || q != p + 1 || !a[p].same_step(&a[q]) {
                    return Err(format!("{}: rework shape", after.case_id));
                }
                let mut v = a.clone();
                v.remove(q);
                if v != *b {
                    return Err(format!("{}: rework is not a duplication", after.case_id));
                }
                if let Some(cap) = cfg.max_len {
                    if a.len() > cap {
                        return Err(format!("{}: rework beyond capacity", after.case_id));
                    }
                }
            }
            AnomalyKind::IncorrectUser | AnomalyKind::IncorrectLtd => {
                let model = model.ok_or("user anomaly without model")?;
                let k = user_k.ok_or("user anomaly without user attribute")?;
                let &[p] = record.events.as_slice() else {
                    return Err(format!("{}: user positions", after.case_id));
                };
                if a.len() != b.len() {
                    return Err(format!("{}: user anomaly changed length", after.case_id));
                }
                for i in 0..a.len() {
                    let same = if i == p {
                        a[i].activity == b[i].activity && user_of(&a[i], k) != user_of(&b[i], k)
                    } else {
                        a[i] == b[i]
                    };
                    if !same {
                        return Err(format!("{}: unexpected change at {i}", after.case_id));
                    }
                }
                if slots != vec![(p, k + 1)] {
                    return Err(format!("{}: user slot", after.case_id));
                }
                let user = user_of(&a[p], k);
                let allowed = permitted(model, &a[p].activity, user);
                if record.kind == AnomalyKind::IncorrectUser {
                    if allowed {
                        return Err(format!("{}: incorrect user is permitted", after.case_id));
                    }
                } else {
                    let variant = model
                        .variant_of(before)
                        .ok_or("dependency anomaly on an unknown variant")?;
                    let (i, j) = model.variants[variant].ltd.ok_or("variant without dependency")?;
                    if j != p || !allowed || user == user_of(&b[i], k) {
                        return Err(format!("{}: dependency violation malformed", after.case_id));
                    }
                }
            }
        }
    }
    Ok(())
}
