//! Random process models and log sampling.
//!
//! Models are layered acyclic graphs with exclusive (XOR) branching only: activities
//! are spread over `L` layers, every activity has a predecessor in the previous layer
//! and a successor in a later one, and extra forward edges add branching. A variant is
//! one START→END path. Each activity gets a small set of permitted users drawn from a
//! global pool, and each variant pins one pair of positions that must be executed by
//! the same user (the long-term dependency).

use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{Duration, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::eventlog::{Event, EventLog, Trace, USER};
use crate::seed::{self, Rng};
use crate::{Error, Result};

pub const START: &str = "START";
pub const END: &str = "END";

/// Default cap on the number of enumerated variants.
pub const DEFAULT_VARIANT_CAP: usize = 10_000;

/// Lower clamp applied to raw variant weights before normalisation.
pub const MIN_VARIANT_WEIGHT: f64 = 0.05;

const GENERATION_ATTEMPTS: usize = 2_000;
const USER_ASSIGNMENT_ATTEMPTS: usize = 100;

const USER_NAMES: &[&str] = &[
    "Roy", "Earl", "James", "Ryan", "Marilyn", "Emily", "Johnny", "Craig", "Amanda", "Laura",
    "Mike", "Nina", "Oscar", "Paula", "Quentin", "Rita", "Sam", "Tara", "Uma", "Victor",
    "Wendy", "Xavier", "Yara", "Zoe", "Alan", "Bella", "Carl", "Diana", "Ethan", "Fiona",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    /// Number of activities, not counting START and END.
    pub n_activities: usize,
    /// Edge budget including edges leaving START and entering END.
    pub target_edges: usize,
    /// Preferred number of variants; candidates closer to it win.
    pub target_variants: Option<usize>,
    /// Number of layers, which is also the longest variant length.
    pub max_variant_len: Option<usize>,
    pub seed: u64,
    /// Size of the global user pool; drawn from 10..=30 when absent.
    pub n_users: Option<usize>,
    pub max_users_per_activity: usize,
    pub variant_prob_mu: f64,
    pub variant_prob_sigma: f64,
    pub variant_cap: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_activities: 20,
            target_edges: 26,
            target_variants: None,
            max_variant_len: None,
            seed: 0,
            n_users: None,
            max_users_per_activity: 5,
            variant_prob_mu: 1.0,
            variant_prob_sigma: 0.2,
            variant_cap: DEFAULT_VARIANT_CAP,
        }
    }
}

impl GenConfig {
    /// Presets matching the published model statistics (node counts include START
    /// and END).
    pub fn profile(name: &str) -> Option<Self> {
        let (nodes, edges, variants, max_len) = match name.to_ascii_lowercase().as_str() {
            "small" => (22, 26, 6, 10),
            "medium" => (34, 48, 25, 8),
            "large" => (44, 56, 28, 12),
            "huge" => (56, 75, 39, 11),
            "wide" => (36, 53, 19, 7),
            _ => return None,
        };
        Some(Self {
            n_activities: nodes - 2,
            target_edges: edges,
            target_variants: Some(variants),
            max_variant_len: Some(max_len),
            ..Self::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("gen: {m}")));
        if self.n_activities == 0 {
            return bad("n_activities must be positive");
        }
        if self.target_edges + 1 < self.n_activities {
            return bad("target_edges must be at least n_activities - 1");
        }
        if self.max_users_per_activity == 0 {
            return bad("max_users_per_activity must be positive");
        }
        if self.n_users == Some(0) {
            return bad("n_users must be positive");
        }
        if let Some(l) = self.max_variant_len {
            if l < 2 || l > self.n_activities {
                return bad("max_variant_len must lie in 2..=n_activities");
            }
        }
        if !(self.variant_prob_sigma >= 0.0) || !self.variant_prob_mu.is_finite() {
            return bad("variant_prob_sigma must be >= 0 and mu finite");
        }
        if self.variant_cap == 0 {
            return bad("variant_cap must be positive");
        }
        Ok(())
    }
}

/// Directed graph over START (node 0), activities (nodes 1..=n) and END (node n+1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessGraph {
    n_activities: usize,
    /// Sorted successor lists.
    succ: Vec<Vec<usize>>,
}

impl ProcessGraph {
    pub fn new(n_activities: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let n_nodes = n_activities + 2;
        let mut succ = vec![Vec::new(); n_nodes];
        for &(u, v) in edges {
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::Generation(format!("edge ({u}, {v}) out of range")));
            }
            if v == 0 || u == n_nodes - 1 {
                return Err(Error::Generation("edge into START or out of END".into()));
            }
            succ[u].push(v);
        }
        for s in &mut succ {
            s.sort_unstable();
            s.dedup();
        }
        Ok(Self { n_activities, succ })
    }

    pub fn start(&self) -> usize {
        0
    }

    pub fn end(&self) -> usize {
        self.n_activities + 1
    }

    pub fn n_nodes(&self) -> usize {
        self.n_activities + 2
    }

    pub fn n_activities(&self) -> usize {
        self.n_activities
    }

    pub fn n_edges(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.succ[node]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    pub fn mean_out_degree(&self) -> f64 {
        self.n_edges() as f64 / self.n_nodes() as f64
    }

    /// Kahn's algorithm; `None` when the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.n_nodes();
        let mut indeg = vec![0usize; n];
        for (_, v) in self.edges() {
            indeg[v] += 1;
        }
        let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        ready.reverse();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = ready.pop() {
            order.push(u);
            for &v in &self.succ[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.push(v);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Every activity lies on some START→END path.
    pub fn is_sound(&self) -> bool {
        let n = self.n_nodes();
        let mut fwd = vec![false; n];
        let mut stack = vec![self.start()];
        fwd[self.start()] = true;
        while let Some(u) = stack.pop() {
            for &v in &self.succ[u] {
                if !fwd[v] {
                    fwd[v] = true;
                    stack.push(v);
                }
            }
        }
        let mut pred = vec![Vec::new(); n];
        for (u, v) in self.edges() {
            pred[v].push(u);
        }
        let mut bwd = vec![false; n];
        let mut stack = vec![self.end()];
        bwd[self.end()] = true;
        while let Some(v) = stack.pop() {
            for &u in &pred[v] {
                if !bwd[u] {
                    bwd[u] = true;
                    stack.push(u);
                }
            }
        }
        fwd.iter().zip(&bwd).all(|(&a, &b)| a && b)
    }
}

/// Enumerates all START→END paths as activity index sequences (START/END removed),
/// in lexicographic order of node indices.
pub fn enumerate_variants(graph: &ProcessGraph, cap: usize) -> Result<Vec<Vec<usize>>> {
    if graph.topological_order().is_none() {
        return Err(Error::Generation("graph has a cycle".into()));
    }
    let mut out = Vec::new();
    let mut path = Vec::new();
    // Explicit stack of (node, next successor slot).
    let mut stack = vec![(graph.start(), 0usize)];
    while let Some(top) = stack.last_mut() {
        let (node, slot) = *top;
        if node == graph.end() {
            if out.len() == cap {
                return Err(Error::Generation(format!(
                    "more than {cap} variants; graph too branchy"
                )));
            }
            out.push(path[..path.len() - 1].iter().map(|&v: &usize| v - 1).collect());
            stack.pop();
            path.pop();
            continue;
        }
        match graph.successors(node).get(slot) {
            Some(&child) => {
                top.1 += 1;
                stack.push((child, 0));
                path.push(child);
            }
            None => {
                stack.pop();
                path.pop();
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    /// Activity indices, START and END excluded.
    pub activities: Vec<usize>,
    /// Positions `(i, j)`, `i < j`, that must share a user.
    pub ltd: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessModel {
    pub name: String,
    pub activities: Vec<String>,
    pub graph: ProcessGraph,
    pub users: Vec<String>,
    /// Permitted user indices per activity, sorted; empty until users are assigned.
    pub permitted_users: Vec<Vec<usize>>,
    pub variants: Vec<Variant>,
    pub variant_probs: Vec<f64>,
}

impl ProcessModel {
    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    pub fn n_edges(&self) -> usize {
        self.graph.n_edges()
    }

    pub fn max_variant_len(&self) -> usize {
        self.variants
            .iter()
            .map(|v| v.activities.len())
            .max()
            .unwrap_or(0)
    }

    pub fn is_assigned(&self) -> bool {
        self.permitted_users.len() == self.activities.len()
            && self.permitted_users.iter().all(|p| !p.is_empty())
            && self.variants.iter().all(|v| v.ltd.is_some())
    }

    pub fn activity_index(&self, name: &str) -> Option<usize> {
        self.activities.iter().position(|a| a == name)
    }

    pub fn user_index(&self, name: &str) -> Option<usize> {
        self.users.iter().position(|u| u == name)
    }

    pub fn is_permitted(&self, activity: &str, user: &str) -> bool {
        match (self.activity_index(activity), self.user_index(user)) {
            (Some(a), Some(u)) => self.permitted_users[a].binary_search(&u).is_ok(),
            _ => false,
        }
    }

    /// Lookup from activity-name sequence to variant index.
    pub fn variant_lookup(&self) -> HashMap<Vec<&str>, usize> {
        self.variants
            .iter()
            .enumerate()
            .map(|(i, v)| {
                (
                    v.activities
                        .iter()
                        .map(|&a| self.activities[a].as_str())
                        .collect(),
                    i,
                )
            })
            .collect()
    }

    /// Index of the variant whose activity sequence equals the trace's, if any.
    pub fn variant_of(&self, trace: &Trace) -> Option<usize> {
        self.variants.iter().position(|v| {
            v.activities.len() == trace.len()
                && v
                    .activities
                    .iter()
                    .zip(trace.activities())
                    .all(|(&a, name)| self.activities[a] == name)
        })
    }

    /// Replaces the variant distribution with fresh weights drawn from
    /// `Normal(mu, sigma)`, clamped below at [`MIN_VARIANT_WEIGHT`] and normalised.
    pub fn redraw_variant_probs(&mut self, mu: f64, sigma: f64, seed: u64) -> Result<()> {
        self.variant_probs = draw_variant_probs(self.variants.len(), mu, sigma, &mut seed::rng(seed))?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

fn draw_variant_probs(n: usize, mu: f64, sigma: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    let normal =
        Normal::new(mu, sigma).map_err(|e| Error::Config(format!("variant weights: {e}")))?;
    let raw: Vec<f64> = (0..n)
        .map(|_| normal.sample(rng).max(MIN_VARIANT_WEIGHT))
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

fn activity_name(i: usize) -> String {
    // Spreadsheet-style: A..Z, AA..AZ, BA..
    let mut n = i + 1;
    let mut s = Vec::new();
    while n > 0 {
        n -= 1;
        s.push(b'A' + (n % 26) as u8);
        n /= 26;
    }
    s.reverse();
    format!("Activity {}", String::from_utf8(s).expect("ascii"))
}

fn user_name(i: usize) -> String {
    USER_NAMES
        .get(i)
        .map_or_else(|| format!("User {}", i + 1), |s| (*s).to_owned())
}

/// One layered candidate graph; `None` when the base construction already exceeds
/// the edge budget.
fn layered_candidate(cfg: &GenConfig, rng: &mut Rng) -> Option<ProcessGraph> {
    let n = cfg.n_activities;
    let n_layers = match cfg.max_variant_len {
        Some(l) => l,
        None => {
            let lo = (n / 5).max(2).min(n);
            let hi = (2 * n / 3).max(lo).min(n);
            if n < 2 {
                1
            } else {
                rng.random_range(lo..=hi.max(lo))
            }
        }
    };
    let mut widths = vec![1usize; n_layers];
    for _ in 0..n - n_layers {
        widths[rng.random_range(0..n_layers)] += 1;
    }
    // Node ids: activities numbered layer by layer starting at 1.
    let mut layers: Vec<Vec<usize>> = Vec::with_capacity(n_layers);
    let mut next = 1;
    for &w in &widths {
        layers.push((next..next + w).collect());
        next += w;
    }
    let end = n + 1;
    let mut layer_of = vec![0usize; n + 2];
    for (l, nodes) in layers.iter().enumerate() {
        for &v in nodes {
            layer_of[v] = l + 1;
        }
    }
    layer_of[end] = n_layers + 1;

    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    for &v in &layers[0] {
        edges.insert((0, v));
    }
    for l in 1..n_layers {
        for &v in &layers[l] {
            let u = *layers[l - 1].choose(rng).expect("non-empty layer");
            edges.insert((u, v));
        }
    }
    for l in 0..n_layers {
        for &u in &layers[l] {
            if !edges.iter().any(|&(a, _)| a == u) {
                let v = if l + 1 == n_layers {
                    end
                } else {
                    *layers[l + 1].choose(rng).expect("non-empty layer")
                };
                edges.insert((u, v));
            }
        }
    }
    if edges.len() > cfg.target_edges + cfg.target_edges / 10 {
        return None;
    }
    let mut guard = 0;
    while edges.len() < cfg.target_edges && guard < 100 * cfg.target_edges {
        guard += 1;
        let u = rng.random_range(0..=n);
        let v = rng.random_range(1..=end);
        if layer_of[u] < layer_of[v] && !(u == 0 && v == end) {
            edges.insert((u, v));
        }
    }
    let mut edges: Vec<_> = edges.into_iter().collect();
    edges.sort_unstable();
    ProcessGraph::new(n, &edges).ok()
}

/// Generates a random acyclic process model.
///
/// Up to a bounded number of layered candidates are drawn. A candidate is accepted
/// when its edge count is within 10% of the budget, it has at least two variants and
/// every variant has at least two activities; among accepted candidates the one
/// closest to the edge and variant targets wins. Users are not assigned yet.
pub fn generate_model(cfg: &GenConfig) -> Result<ProcessModel> {
    cfg.validate()?;
    let mut rng = seed::rng(seed::derive(cfg.seed, "procgen/graph"));
    let mut best: Option<(f64, ProcessGraph, Vec<Vec<usize>>)> = None;
    let target_e = cfg.target_edges as f64;
    for _ in 0..GENERATION_ATTEMPTS {
        let Some(graph) = layered_candidate(cfg, &mut rng) else {
            continue;
        };
        let e = graph.n_edges() as f64;
        if (e - target_e).abs() > 0.1 * target_e {
            continue;
        }
        let Ok(variants) = enumerate_variants(&graph, cfg.variant_cap) else {
            continue;
        };
        if variants.len() < 2 || variants.iter().any(|v| v.len() < 2) {
            continue;
        }
        let mut cost = (e - target_e).abs() / target_e;
        if let Some(t) = cfg.target_variants {
            cost += (variants.len() as f64 - t as f64).abs() / t as f64;
        }
        if best.as_ref().is_none_or(|(c, _, _)| cost < *c) {
            let perfect = cost == 0.0;
            best = Some((cost, graph, variants));
            if perfect {
                break;
            }
        }
    }
    let (_, graph, variant_paths) = best.ok_or_else(|| {
        Error::Generation(format!(
            "no acyclic model with {} activities, ~{} edges and at least two variants \
             after {GENERATION_ATTEMPTS} attempts",
            cfg.n_activities, cfg.target_edges
        ))
    })?;
    let n_variants = variant_paths.len();
    let mut prob_rng = seed::rng(seed::derive(cfg.seed, "procgen/probs"));
    Ok(ProcessModel {
        name: format!("generated-{}", cfg.seed),
        activities: (0..cfg.n_activities).map(activity_name).collect(),
        graph,
        users: Vec::new(),
        permitted_users: Vec::new(),
        variants: variant_paths
            .into_iter()
            .map(|activities| Variant {
                activities,
                ltd: None,
            })
            .collect(),
        variant_probs: draw_variant_probs(
            n_variants,
            cfg.variant_prob_mu,
            cfg.variant_prob_sigma,
            &mut prob_rng,
        )?,
    })
}

/// Assigns a user pool, per-activity permitted users and one long-term dependency
/// per variant.
///
/// The pool holds `n_users` users (10..=30 drawn when `None`), every activity gets
/// 1..=`max_per_activity` of them, and each variant's dependency pair is drawn
/// uniformly among position pairs whose permitted sets intersect. Assignments with a
/// variant lacking such a pair are re-drawn a bounded number of times.
pub fn assign_users(
    model: &ProcessModel,
    n_users: Option<usize>,
    max_per_activity: usize,
    seed: u64,
) -> Result<ProcessModel> {
    if model.variants.iter().any(|v| v.activities.len() < 2) {
        return Err(Error::Generation(
            "a variant with fewer than two activities cannot carry a dependency".into(),
        ));
    }
    let mut rng = seed::rng(seed);
    let pool = n_users.unwrap_or_else(|| rng.random_range(10..=30));
    if pool == 0 || max_per_activity == 0 {
        return Err(Error::Config("user pool and per-activity cap must be positive".into()));
    }
    'attempt: for _ in 0..USER_ASSIGNMENT_ATTEMPTS {
        let permitted: Vec<Vec<usize>> = (0..model.activities.len())
            .map(|_| {
                let k = rng.random_range(1..=max_per_activity.min(pool));
                let mut users = rand::seq::index::sample(&mut rng, pool, k).into_vec();
                users.sort_unstable();
                users
            })
            .collect();
        let mut variants = model.variants.clone();
        for variant in &mut variants {
            let acts = &variant.activities;
            let mut pairs = Vec::new();
            for i in 0..acts.len() {
                for j in i + 1..acts.len() {
                    if intersects(&permitted[acts[i]], &permitted[acts[j]]) {
                        pairs.push((i, j));
                    }
                }
            }
            match pairs.choose(&mut rng) {
                Some(&p) => variant.ltd = Some(p),
                None => continue 'attempt,
            }
        }
        return Ok(ProcessModel {
            users: (0..pool).map(user_name).collect(),
            permitted_users: permitted,
            variants,
            ..model.clone()
        });
    }
    Err(Error::Generation(format!(
        "no user assignment with a satisfiable dependency in every variant after \
         {USER_ASSIGNMENT_ATTEMPTS} attempts"
    )))
}

fn intersects(a: &[usize], b: &[usize]) -> bool {
    a.iter().any(|x| b.binary_search(x).is_ok())
}

fn intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

/// Samples `n_traces` traces from the model's variant distribution.
///
/// Each event's user is drawn uniformly from the activity's permitted users, except
/// at the variant's dependency pair, where one user from the intersection of both
/// permitted sets is drawn and used for both positions. Case ids are `1..=n` and
/// timestamps increase monotonically.
pub fn sample_log(model: &ProcessModel, n_traces: usize, seed: u64) -> Result<EventLog> {
    if n_traces == 0 {
        return Err(Error::Config("n_traces must be positive".into()));
    }
    if !model.is_assigned() {
        return Err(Error::Config("model has no user assignment".into()));
    }
    let chooser = WeightedIndex::new(&model.variant_probs)
        .map_err(|e| Error::Config(format!("variant distribution: {e}")))?;
    let mut rng = seed::rng(seed);
    let epoch = NaiveDate::from_ymd_opt(2020, 1, 1)
        .expect("valid date")
        .and_hms_opt(0, 0, 0)
        .expect("valid time");
    let mut traces = Vec::with_capacity(n_traces);
    for t in 0..n_traces {
        let variant = &model.variants[chooser.sample(&mut rng)];
        let mut users: Vec<usize> = variant
            .activities
            .iter()
            .map(|&a| *model.permitted_users[a].choose(&mut rng).expect("assigned"))
            .collect();
        if let Some((i, j)) = variant.ltd {
            let shared = intersection(
                &model.permitted_users[variant.activities[i]],
                &model.permitted_users[variant.activities[j]],
            );
            let u = *shared.choose(&mut rng).ok_or_else(|| {
                Error::Generation("dependency pair without a common user".into())
            })?;
            users[i] = u;
            users[j] = u;
        }
        let start = epoch + Duration::hours(t as i64);
        let events = variant
            .activities
            .iter()
            .zip(users)
            .enumerate()
            .map(|(k, (&a, u))| Event {
                activity: model.activities[a].clone(),
                timestamp: Some(
                    (start + Duration::minutes(k as i64))
                        .format("%Y-%m-%dT%H:%M:%SZ")
                        .to_string(),
                ),
                attrs: vec![model.users[u].clone()],
            })
            .collect();
        traces.push(Trace {
            case_id: (t + 1).to_string(),
            events,
        });
    }
    EventLog::new(vec![USER.to_owned()], traces)
}

/// Convenience: generate, assign users, and return a fully specified model.
pub fn generate_assigned(cfg: &GenConfig) -> Result<ProcessModel> {
    let model = generate_model(cfg)?;
    assign_users(
        &model,
        cfg.n_users,
        cfg.max_users_per_activity,
        seed::derive(cfg.seed, "procgen/users"),
    )
}

/// A simplified purchase-to-pay process.
///
/// Two entry branches (purchase requisition or shopping cart) meet at `PO Created`,
/// followed by release, an optional decrease, goods and invoice receipt and payment;
/// alternatively the order is cancelled right after creation. 14 nodes, 16 edges,
/// 6 variants, longest variant 9 events. Users and dependencies are fixed.
pub fn builtin_p2p() -> ProcessModel {
    const ACTS: [&str; 12] = [
        "PR Created",
        "PR Released",
        "SC Created",
        "SC Purchased",
        "SC Approved",
        "PO Created",
        "PO Released",
        "PO Decreased",
        "PO Cancelled",
        "Goods Receipt",
        "Invoice Receipt",
        "Pay Invoice",
    ];
    const USERS: [&str; 12] = [
        "Roy", "Earl", "James", "Ryan", "Marilyn", "Emily", "Johnny", "Craig", "Amanda", "Laura",
        "Mike", "Nina",
    ];
    const PERMITTED: [&[&str]; 12] = [
        &["Roy", "Ryan", "James"],
        &["Earl", "Laura"],
        &["Marilyn", "Emily", "Roy"],
        &["Emily", "Craig"],
        &["Roy", "Earl"],
        &["James", "Johnny", "Roy"],
        &["Roy", "Earl", "Amanda", "Nina"],
        &["Johnny", "Amanda", "James"],
        &["Roy", "Johnny"],
        &["Ryan", "Craig"],
        &["Amanda", "Laura", "Mike", "Nina", "Craig"],
        &["Amanda", "Mike"],
    ];
    const EDGES: [(&str, &str); 16] = [
        (START, "PR Created"),
        (START, "SC Created"),
        ("PR Created", "PR Released"),
        ("PR Released", "PO Created"),
        ("SC Created", "SC Purchased"),
        ("SC Purchased", "SC Approved"),
        ("SC Approved", "PO Created"),
        ("PO Created", "PO Released"),
        ("PO Created", "PO Cancelled"),
        ("PO Cancelled", END),
        ("PO Released", "PO Decreased"),
        ("PO Released", "Goods Receipt"),
        ("PO Decreased", "Goods Receipt"),
        ("Goods Receipt", "Invoice Receipt"),
        ("Invoice Receipt", "Pay Invoice"),
        ("Pay Invoice", END),
    ];
    let node = |name: &str| match name {
        START => 0,
        END => ACTS.len() + 1,
        _ => 1 + ACTS.iter().position(|a| *a == name).expect("known activity"),
    };
    let edges: Vec<_> = EDGES.iter().map(|&(u, v)| (node(u), node(v))).collect();
    let graph = ProcessGraph::new(ACTS.len(), &edges).expect("valid fixture");
    let user = |n: &str| USERS.iter().position(|u| *u == n).expect("known user");
    let permitted = PERMITTED
        .iter()
        .map(|names| {
            let mut v: Vec<usize> = names.iter().map(|n| user(n)).collect();
            v.sort_unstable();
            v
        })
        .collect();
    let paths = enumerate_variants(&graph, DEFAULT_VARIANT_CAP).expect("acyclic fixture");
    let pos = |path: &[usize], name: &str| {
        let a = ACTS.iter().position(|x| *x == name).expect("known activity");
        path.iter().position(|&x| x == a)
    };
    let variants: Vec<Variant> = paths
        .into_iter()
        .map(|path| {
            let first = if pos(&path, "PR Created").is_some() {
                "PR Created"
            } else {
                "SC Created"
            };
            let ltd = if pos(&path, "PO Decreased").is_some() {
                ("PO Decreased", "Pay Invoice")
            } else if pos(&path, "PO Cancelled").is_some() {
                (first, "PO Cancelled")
            } else if first == "PR Created" {
                ("PR Created", "PO Created")
            } else {
                ("SC Created", "SC Approved")
            };
            let ltd = (
                pos(&path, ltd.0).expect("on path"),
                pos(&path, ltd.1).expect("on path"),
            );
            Variant {
                activities: path,
                ltd: Some(ltd),
            }
        })
        .collect();
    let n = variants.len();
    ProcessModel {
        name: "p2p".into(),
        activities: ACTS.iter().map(|s| (*s).to_owned()).collect(),
        graph,
        users: USERS.iter().map(|s| (*s).to_owned()).collect(),
        permitted_users: permitted,
        variants,
        variant_probs: vec![1.0 / n as f64; n],
    }
}

/// Builds a model by name: `p2p` or one of the [`GenConfig::profile`] presets.
pub fn model_by_name(name: &str, seed: u64) -> Result<ProcessModel> {
    if name.eq_ignore_ascii_case("p2p") {
        return Ok(builtin_p2p());
    }
    let cfg = GenConfig::profile(name)
        .ok_or_else(|| Error::Config(format!("unknown model profile {name:?}")))?;
    let mut model = generate_assigned(&GenConfig { seed, ..cfg })?;
    model.name = format!("{}-{seed}", name.to_ascii_lowercase());
    Ok(model)
}

/// Serialized form of a model with names instead of indices.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    name: String,
    activities: Vec<String>,
    edges: Vec<(String, String)>,
    users: Vec<String>,
    permitted_users: BTreeMap<String, Vec<String>>,
    variants: Vec<VariantFile>,
    variant_probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariantFile {
    activities: Vec<String>,
    ltd: Option<(usize, usize)>,
}

impl From<&ProcessModel> for ModelFile {
    fn from(m: &ProcessModel) -> Self {
        let node_name = |v: usize| {
            if v == m.graph.start() {
                START.to_owned()
            } else if v == m.graph.end() {
                END.to_owned()
            } else {
                m.activities[v - 1].clone()
            }
        };
        ModelFile {
            name: m.name.clone(),
            activities: m.activities.clone(),
            edges: m.graph.edges().map(|(u, v)| (node_name(u), node_name(v))).collect(),
            users: m.users.clone(),
            permitted_users: m
                .permitted_users
                .iter()
                .enumerate()
                .map(|(a, us)| {
                    (
                        m.activities[a].clone(),
                        us.iter().map(|&u| m.users[u].clone()).collect(),
                    )
                })
                .collect(),
            variants: m
                .variants
                .iter()
                .map(|v| VariantFile {
                    activities: v.activities.iter().map(|&a| m.activities[a].clone()).collect(),
                    ltd: v.ltd,
                })
                .collect(),
            variant_probs: m.variant_probs.clone(),
        }
    }
}

impl TryFrom<ModelFile> for ProcessModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        let bad = |m: String| Error::parse("model file", m);
        let act = |name: &str| {
            f.activities
                .iter()
                .position(|a| a == name)
                .ok_or_else(|| bad(format!("unknown activity {name:?}")))
        };
        let n = f.activities.len();
        let node = |name: &str| match name {
            START => Ok(0),
            END => Ok(n + 1),
            _ => act(name).map(|a| a + 1),
        };
        let edges = f
            .edges
            .iter()
            .map(|(u, v)| Ok((node(u)?, node(v)?)))
            .collect::<Result<Vec<_>>>()?;
        let graph = ProcessGraph::new(n, &edges)?;
        if graph.topological_order().is_none() {
            return Err(bad("graph has a cycle".into()));
        }
        let user = |name: &str| {
            f.users
                .iter()
                .position(|u| u == name)
                .ok_or_else(|| bad(format!("unknown user {name:?}")))
        };
        let mut permitted = Vec::new();
        if !f.permitted_users.is_empty() {
            permitted = vec![Vec::new(); n];
            for (a, us) in &f.permitted_users {
                let mut idx = us.iter().map(|u| user(u)).collect::<Result<Vec<_>>>()?;
                idx.sort_unstable();
                permitted[act(a)?] = idx;
            }
        }
        let variants = f
            .variants
            .iter()
            .map(|v| {
                let activities = v
                    .activities
                    .iter()
                    .map(|a| act(a))
                    .collect::<Result<Vec<_>>>()?;
                if let Some((i, j)) = v.ltd {
                    if i >= j || j >= activities.len() {
                        return Err(bad(format!("invalid dependency pair ({i}, {j})")));
                    }
                }
                Ok(Variant {
                    activities,
                    ltd: v.ltd,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if f.variant_probs.len() != variants.len() {
            return Err(bad("variant_probs length differs from variants".into()));
        }
        Ok(ProcessModel {
            name: f.name,
            activities: f.activities,
            graph,
            users: f.users,
            permitted_users: permitted,
            variants,
            variant_probs: f.variant_probs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent path counter: plain recursion over successor lists.
    fn count_paths(g: &ProcessGraph, node: usize) -> usize {
        if node == g.end() {
            return 1;
        }
        g.successors(node).iter().map(|&v| count_paths(g, v)).sum()
    }

    fn diamond() -> ProcessGraph {
        ProcessGraph::new(2, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn diamond_variants() {
        assert_eq!(
            enumerate_variants(&diamond(), 10).unwrap(),
            vec![vec![0], vec![1]]
        );
    }

    #[test]
    fn variant_cap_and_cycles() {
        assert!(enumerate_variants(&diamond(), 1).is_err());
        let cyclic = ProcessGraph::new(2, &[(0, 1), (1, 2), (2, 1), (2, 3)]).unwrap();
        assert!(cyclic.topological_order().is_none());
        assert!(enumerate_variants(&cyclic, 10).is_err());
    }

    #[test]
    fn p2p_statistics() {
        let m = builtin_p2p();
        assert_eq!(m.n_nodes(), 14);
        assert_eq!(m.n_edges(), 16);
        assert_eq!(m.variants.len(), 6);
        assert_eq!(m.max_variant_len(), 9);
        assert!((m.graph.mean_out_degree() - 1.14).abs() < 0.005);
        assert!(m.is_assigned());
        assert!(!m.is_permitted("PR Created", "Craig"));
        assert!(!m.is_permitted("PR Created", "Earl"));
        for v in &m.variants {
            let (i, j) = v.ltd.unwrap();
            assert!(intersects(
                &m.permitted_users[v.activities[i]],
                &m.permitted_users[v.activities[j]]
            ));
        }
    }

    #[test]
    fn small_profile_matches_targets() {
        let cfg = GenConfig {
            seed: 7,
            ..GenConfig::profile("small").unwrap()
        };
        let m = generate_model(&cfg).unwrap();
        assert_eq!(m.n_nodes(), 22);
        let e = m.n_edges() as f64;
        assert!((e - 26.0).abs() <= 2.6, "edges {e}");
        assert!(m.graph.topological_order().is_some());
        assert!(m.graph.is_sound());
        assert_eq!(m.variants.len(), 6);
        assert_eq!(m.max_variant_len(), 10);
        assert!((m.graph.mean_out_degree() - 26.0 / 22.0).abs() < 0.15);
        assert_eq!(count_paths(&m.graph, 0), m.variants.len());
    }

    #[test]
    fn medium_profile_hits_variant_target() {
        let cfg = GenConfig {
            seed: 3,
            ..GenConfig::profile("medium").unwrap()
        };
        let m = generate_model(&cfg).unwrap();
        assert_eq!(m.variants.len(), 25);
        assert_eq!(m.n_nodes(), 34);
    }

    #[test]
    fn chain_budget_cannot_branch() {
        let chain = GenConfig {
            n_activities: 3,
            target_edges: 4,
            max_variant_len: Some(3),
            ..GenConfig::default()
        };
        assert!(matches!(generate_model(&chain), Err(Error::Generation(_))));
        let branched = GenConfig {
            target_edges: 5,
            max_variant_len: None,
            ..chain
        };
        let m = generate_model(&branched).unwrap();
        assert_eq!(m.variants.len(), 2);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GenConfig {
            seed: 11,
            ..GenConfig::profile("large").unwrap()
        };
        let a = generate_assigned(&cfg).unwrap().to_json().unwrap();
        let b = generate_assigned(&cfg).unwrap().to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn user_assignment_bounds() {
        let m = generate_model(&GenConfig {
            n_activities: 5,
            target_edges: 7,
            seed: 1,
            ..GenConfig::default()
        })
        .unwrap();
        let m = assign_users(&m, Some(10), 5, 99).unwrap();
        assert_eq!(m.users.len(), 10);
        for p in &m.permitted_users {
            assert!((1..=5).contains(&p.len()));
        }
    }

    #[test]
    fn disjoint_users_force_resample() {
        // Two-activity variants with singleton permitted sets from a large pool are
        // usually disjoint; assignment must keep drawing until they intersect.
        let g = ProcessGraph::new(3, &[(0, 1), (1, 2), (1, 3), (2, 4), (3, 4)]).unwrap();
        let variants = enumerate_variants(&g, 10).unwrap();
        let model = ProcessModel {
            name: "t".into(),
            activities: vec!["A".into(), "B".into(), "C".into()],
            graph: g,
            users: vec![],
            permitted_users: vec![],
            variants: variants
                .into_iter()
                .map(|activities| Variant { activities, ltd: None })
                .collect(),
            variant_probs: vec![0.5, 0.5],
        };
        let m = assign_users(&model, Some(3), 1, 5).unwrap();
        assert_eq!(m.permitted_users[0], m.permitted_users[1]);
        assert_eq!(m.permitted_users[0], m.permitted_users[2]);
        assert!(assign_users(&model, Some(1000), 1, 5).is_err());
    }

    #[test]
    fn sampled_traces_respect_model() {
        let m = generate_assigned(&GenConfig {
            seed: 5,
            ..GenConfig::profile("small").unwrap()
        })
        .unwrap();
        let log = sample_log(&m, 500, 1).unwrap();
        assert_eq!(log.len(), 500);
        for t in log.traces() {
            let vi = m.variant_of(t).expect("trace is a variant");
            for e in &t.events {
                assert!(m.is_permitted(&e.activity, &e.attrs[0]));
            }
            let (i, j) = m.variants[vi].ltd.unwrap();
            assert_eq!(t.events[i].attrs[0], t.events[j].attrs[0]);
        }
        assert!(sample_log(&m, 0, 1).is_err());
        assert_eq!(sample_log(&m, 50, 9).unwrap(), sample_log(&m, 50, 9).unwrap());
    }

    #[test]
    fn variant_frequencies_converge() {
        let mut m = builtin_p2p();
        m.redraw_variant_probs(1.0, 0.2, 17).unwrap();
        assert!((m.variant_probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let log = sample_log(&m, 100_000, 3).unwrap();
        let mut counts = vec![0usize; m.variants.len()];
        for t in log.traces() {
            counts[m.variant_of(t).unwrap()] += 1;
        }
        for (c, p) in counts.iter().zip(&m.variant_probs) {
            assert!((*c as f64 / 100_000.0 - p).abs() < 0.02);
        }
    }

    #[test]
    fn variant_weights_are_clamped() {
        let mut rng = seed::rng(1);
        let p = draw_variant_probs(4, 0.0, 0.01, &mut rng).unwrap();
        for x in &p {
            assert!((x - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn model_json_roundtrip() {
        let m = builtin_p2p();
        let back = ProcessModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
