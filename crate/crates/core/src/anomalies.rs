//! Anomaly injection with ground-truth labels.
//!
//! A fixed fraction of traces receives exactly one anomaly each. Attribute-level
//! marks follow a fixed rule so that metrics are auditable:
//!
//! | kind             | marked slot                                                   |
//! |------------------|---------------------------------------------------------------|
//! | `skip`           | activity of the event now at the removed position (or the last event) |
//! | `switch`         | activities of both swapped events                             |
//! | `rework`         | activity of the duplicated copy                               |
//! | `incorrect_user` | user of the altered event                                     |
//! | `incorrect_ltd`  | user at the dependent position                                |

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::eventlog::{EventLog, LabelSet, Trace, TraceLabels, USER};
use crate::procgen::ProcessModel;
use crate::seed::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    Skip,
    Switch,
    Rework,
    IncorrectUser,
    IncorrectLtd,
}

impl AnomalyKind {
    pub const ALL: [AnomalyKind; 5] = [
        AnomalyKind::Skip,
        AnomalyKind::Switch,
        AnomalyKind::Rework,
        AnomalyKind::IncorrectUser,
        AnomalyKind::IncorrectLtd,
    ];

    /// The kinds that only touch the control flow; usable on logs without users.
    pub const CONTROL_FLOW: [AnomalyKind; 3] =
        [AnomalyKind::Skip, AnomalyKind::Switch, AnomalyKind::Rework];

    pub fn name(self) -> &'static str {
        match self {
            AnomalyKind::Skip => "skip",
            AnomalyKind::Switch => "switch",
            AnomalyKind::Rework => "rework",
            AnomalyKind::IncorrectUser => "incorrect_user",
            AnomalyKind::IncorrectLtd => "incorrect_ltd",
        }
    }

    pub fn needs_users(self) -> bool {
        matches!(self, AnomalyKind::IncorrectUser | AnomalyKind::IncorrectLtd)
    }
}

impl fmt::Display for AnomalyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnomalyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AnomalyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown anomaly type {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InjectConfig {
    /// Fraction of traces to mutate, in `[0, 1]`.
    pub noise_level: f64,
    pub enabled_types: Vec<AnomalyKind>,
    pub seed: u64,
    /// Encoder capacity; rework is not applied to traces already this long.
    pub max_len: Option<usize>,
}

impl Default for InjectConfig {
    fn default() -> Self {
        Self {
            noise_level: 0.3,
            enabled_types: AnomalyKind::ALL.to_vec(),
            seed: 0,
            max_len: None,
        }
    }
}

impl InjectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.noise_level) {
            return Err(Error::Config(format!(
                "inject: noise_level {} outside [0, 1]",
                self.noise_level
            )));
        }
        if self.enabled_types.is_empty() {
            return Err(Error::Config("inject: enabled_types is empty".into()));
        }
        Ok(())
    }

    /// Number of traces mutated in a log of `n` traces: `floor(noise * n)`.
    pub fn anomaly_count(&self, n: usize) -> usize {
        // The epsilon absorbs representation error such as 0.29 * 100 = 28.999...
        ((self.noise_level * n as f64) + 1e-9).floor() as usize
    }
}

/// What was done to one trace. Positions refer to the mutated trace; slots are
/// `(event, field)` with field 0 the activity and field `1 + k` the `k`-th attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnomalyRecord {
    pub case_id: String,
    #[serde(rename = "type")]
    pub kind: AnomalyKind,
    pub events: Vec<usize>,
    pub slots: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct Injection {
    pub log: EventLog,
    pub labels: LabelSet,
    pub records: Vec<AnomalyRecord>,
}

struct Context<'a> {
    model: Option<&'a ProcessModel>,
    user_attr: Option<usize>,
    max_len: Option<usize>,
}

impl Context<'_> {
    fn user_field(&self) -> Option<usize> {
        self.user_attr.map(|k| k + 1)
    }

    /// Positions whose user can be replaced by a non-permitted one.
    fn incorrect_user_positions(&self, trace: &Trace) -> Vec<usize> {
        let (Some(model), Some(_)) = (self.model, self.user_attr) else {
            return Vec::new();
        };
        (0..trace.len())
            .filter(|&p| {
                model
                    .activity_index(&trace.events[p].activity)
                    .is_some_and(|a| model.permitted_users[a].len() < model.users.len())
            })
            .collect()
    }

    /// Dependent position `j` and the permitted users different from the user at `i`.
    fn ltd_target(&self, trace: &Trace) -> Option<(usize, Vec<String>)> {
        let model = self.model?;
        let k = self.user_attr?;
        let variant = &model.variants[model.variant_of(trace)?];
        let (i, j) = variant.ltd?;
        let source = &trace.events[i].attrs[k];
        let options: Vec<String> = model.permitted_users[variant.activities[j]]
            .iter()
            .map(|&u| model.users[u].clone())
            .filter(|u| u != source)
            .collect();
        (!options.is_empty()).then_some((j, options))
    }

    fn switch_positions(trace: &Trace) -> Vec<usize> {
        (0..trace.len().saturating_sub(1))
            .filter(|&p| trace.events[p].activity != trace.events[p + 1].activity)
            .collect()
    }

    fn applicable(&self, kind: AnomalyKind, trace: &Trace) -> bool {
        match kind {
            AnomalyKind::Skip => trace.len() >= 2,
            AnomalyKind::Switch => !Self::switch_positions(trace).is_empty(),
            AnomalyKind::Rework => self.max_len.is_none_or(|m| trace.len() < m),
            AnomalyKind::IncorrectUser => !self.incorrect_user_positions(trace).is_empty(),
            AnomalyKind::IncorrectLtd => self.ltd_target(trace).is_some(),
        }
    }

    /// Applies `kind` in place and returns the affected events and marked slots.
    fn apply(
        &self,
        kind: AnomalyKind,
        trace: &mut Trace,
        rng: &mut Rng,
    ) -> (Vec<usize>, Vec<(usize, usize)>) {
        use rand::Rng as _;
        match kind {
            AnomalyKind::Skip => {
                let p = rng.random_range(0..trace.len());
                trace.events.remove(p);
                let marked = p.min(trace.len() - 1);
                (vec![marked], vec![(marked, 0)])
            }
            AnomalyKind::Switch => {
                let p = *Self::switch_positions(trace).choose(rng).expect("applicable");
                // Timestamps stay in place so the swapped order survives re-sorting.
                let (a, b) = trace.events.split_at_mut(p + 1);
                let (x, y) = (&mut a[p], &mut b[0]);
                std::mem::swap(&mut x.activity, &mut y.activity);
                std::mem::swap(&mut x.attrs, &mut y.attrs);
                (vec![p, p + 1], vec![(p, 0), (p + 1, 0)])
            }
            AnomalyKind::Rework => {
                let p = rng.random_range(0..trace.len());
                let copy = trace.events[p].clone();
                trace.events.insert(p + 1, copy);
                (vec![p, p + 1], vec![(p + 1, 0)])
            }
            AnomalyKind::IncorrectUser => {
                let model = self.model.expect("applicable");
                let k = self.user_attr.expect("applicable");
                let p = *self.incorrect_user_positions(trace).choose(rng).expect("applicable");
                let a = model
                    .activity_index(&trace.events[p].activity)
                    .expect("applicable");
                let outsiders: Vec<usize> = (0..model.users.len())
                    .filter(|u| model.permitted_users[a].binary_search(u).is_err())
                    .collect();
                let u = *outsiders.choose(rng).expect("applicable");
                trace.events[p].attrs[k] = model.users[u].clone();
                (vec![p], vec![(p, self.user_field().expect("user attr"))])
            }
            AnomalyKind::IncorrectLtd => {
                let k = self.user_attr.expect("applicable");
                let (j, options) = self.ltd_target(trace).expect("applicable");
                trace.events[j].attrs[k] = options.choose(rng).expect("non-empty").clone();
                (vec![j], vec![(j, self.user_field().expect("user attr"))])
            }
        }
    }
}

/// Mutates `floor(noise_level * |log|)` traces, chosen uniformly without
/// replacement, with one anomaly each.
///
/// The kind is drawn uniformly among the enabled kinds applicable to the chosen
/// trace. User anomalies need the process model (permitted users and dependency
/// pairs) and a `user` attribute.
pub fn inject(log: &EventLog, model: Option<&ProcessModel>, cfg: &InjectConfig) -> Result<Injection> {
    cfg.validate()?;
    let user_attr = log.attribute_index(USER);
    if cfg.enabled_types.iter().any(|k| k.needs_users()) && (model.is_none() || user_attr.is_none())
    {
        return Err(Error::Injection(
            "user anomalies need a process model and a user attribute".into(),
        ));
    }
    let ctx = Context {
        model,
        user_attr,
        max_len: cfg.max_len,
    };
    let mut enabled = cfg.enabled_types.clone();
    enabled.sort_unstable();
    enabled.dedup();

    let n_mut = cfg.anomaly_count(log.len());
    if n_mut == 0 && cfg.noise_level > 0.0 {
        log::warn!(
            "noise level {} on {} traces mutates nothing",
            cfg.noise_level,
            log.len()
        );
    }
    let mut rng = seed::rng(cfg.seed);
    let mut chosen = rand::seq::index::sample(&mut rng, log.len(), n_mut).into_vec();
    chosen.sort_unstable();

    let mut traces = log.traces().to_vec();
    let mut marks: Vec<Option<(AnomalyKind, Vec<usize>, Vec<(usize, usize)>)>> =
        vec![None; traces.len()];
    for &t in &chosen {
        let trace = &mut traces[t];
        let options: Vec<AnomalyKind> = enabled
            .iter()
            .copied()
            .filter(|&k| ctx.applicable(k, trace))
            .collect();
        let kind = *options.choose(&mut rng).ok_or_else(|| {
            Error::Injection(format!(
                "no enabled anomaly type applies to trace {}",
                trace.case_id
            ))
        })?;
        let (events, slots) = ctx.apply(kind, trace, &mut rng);
        marks[t] = Some((kind, events, slots));
    }

    let out = EventLog::new(log.attribute_names().to_vec(), traces)?;
    let n_fields = 1 + out.attribute_names().len();
    let max_len = out.max_trace_len();
    let mut labels = Vec::with_capacity(out.len());
    let mut records = Vec::with_capacity(n_mut);
    for (trace, mark) in out.traces().iter().zip(marks) {
        let mut l = TraceLabels::normal(&trace.case_id, trace.len(), max_len, n_fields);
        if let Some((kind, events, slots)) = mark {
            for &(e, f) in &slots {
                l.mark(e, f, kind);
            }
            let record = AnomalyRecord {
                case_id: trace.case_id.clone(),
                kind,
                events,
                slots,
            };
            l.anomaly = Some(record.clone());
            records.push(record);
        }
        labels.push(l);
    }
    Ok(Injection {
        log: out,
        labels: LabelSet { traces: labels },
        records,
    })
}
