//! Event-log data model and file formats.
//!
//! A log is a list of traces; each trace is an ordered list of events carrying an
//! activity label, an optional timestamp and a fixed, log-wide set of categorical
//! attributes (the toolkit uses a single `user` attribute).
//!
//! JSON Lines is the native format (one trace object per line). CSV is read and
//! written; XES is read-only and only understands `concept:name` and `time:timestamp`.

mod csv_format;
mod jsonl;
mod labels;
mod timestamp;
mod xes;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use labels::{read_labels, write_labels, Label, LabelSet, TraceLabels, TraceVerdict};

/// Name of the user attribute used by generated logs.
pub const USER: &str = "user";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub activity: String,
    pub timestamp: Option<String>,
    /// Attribute values, aligned with [`EventLog::attribute_names`].
    pub attrs: Vec<String>,
}

impl Event {
    pub fn new(activity: impl Into<String>, attrs: Vec<String>) -> Self {
        Self {
            activity: activity.into(),
            timestamp: None,
            attrs,
        }
    }

    /// Two events are the same step when activity and all attributes agree.
    pub fn same_step(&self, other: &Event) -> bool {
        self.activity == other.activity && self.attrs == other.attrs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn activities(&self) -> impl Iterator<Item = &str> {
        self.events.iter().map(|e| e.activity.as_str())
    }
}

/// Insertion-ordered set of category values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet {
    values: Vec<String>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` if absent and returns its index.
    pub fn insert(&mut self, value: &str) -> usize {
        if let Some(&i) = self.index.get(value) {
            return i;
        }
        let i = self.values.len();
        self.values.push(value.to_owned());
        self.index.insert(value.to_owned(), i);
        i
    }

    pub fn index_of(&self, value: &str) -> Option<usize> {
        self.index.get(value).copied()
    }

    pub fn get(&self, i: usize) -> Option<&str> {
        self.values.get(i).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.values.iter().map(String::as_str)
    }

    pub fn contains(&self, value: &str) -> bool {
        self.index.contains_key(value)
    }
}

impl<S: AsRef<str>> FromIterator<S> for Alphabet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut a = Alphabet::new();
        for v in iter {
            a.insert(v.as_ref());
        }
        a
    }
}

impl Serialize for Alphabet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.values.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Alphabet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<String>::deserialize(d)?;
        let alphabet: Alphabet = values.iter().collect();
        if alphabet.len() != values.len() {
            return Err(serde::de::Error::custom("duplicate value in alphabet"));
        }
        Ok(alphabet)
    }
}

/// An event log with its derived alphabets.
///
/// Alphabets are built in first-occurrence order over traces and events, so the
/// same content always yields the same alphabets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    traces: Vec<Trace>,
    attribute_names: Vec<String>,
    activity_alphabet: Alphabet,
    attribute_alphabets: Vec<Alphabet>,
    max_trace_len: usize,
}

impl EventLog {
    /// Builds a log and checks its invariants: at least one trace, no empty trace,
    /// non-empty activity labels, a uniform attribute schema.
    pub fn new(attribute_names: Vec<String>, traces: Vec<Trace>) -> Result<Self> {
        if traces.is_empty() {
            return Err(Error::EmptyLog);
        }
        let mut activity_alphabet = Alphabet::new();
        let mut attribute_alphabets = vec![Alphabet::new(); attribute_names.len()];
        let mut max_trace_len = 0;
        for trace in &traces {
            if trace.events.is_empty() {
                return Err(Error::parse(
                    format!("trace {}", trace.case_id),
                    "trace has no events",
                ));
            }
            max_trace_len = max_trace_len.max(trace.events.len());
            for (i, event) in trace.events.iter().enumerate() {
                if event.activity.is_empty() {
                    return Err(Error::parse(
                        format!("trace {} event {}", trace.case_id, i),
                        "empty activity label",
                    ));
                }
                if event.attrs.len() != attribute_names.len() {
                    return Err(Error::parse(
                        format!("trace {} event {}", trace.case_id, i),
                        format!(
                            "expected {} attributes, found {}",
                            attribute_names.len(),
                            event.attrs.len()
                        ),
                    ));
                }
                activity_alphabet.insert(&event.activity);
                for (alphabet, value) in attribute_alphabets.iter_mut().zip(&event.attrs) {
                    alphabet.insert(value);
                }
            }
        }
        Ok(Self {
            traces,
            attribute_names,
            activity_alphabet,
            attribute_alphabets,
            max_trace_len,
        })
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn into_traces(self) -> Vec<Trace> {
        self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attribute_names.iter().position(|n| n == name)
    }

    pub fn activity_alphabet(&self) -> &Alphabet {
        &self.activity_alphabet
    }

    pub fn attribute_alphabets(&self) -> &[Alphabet] {
        &self.attribute_alphabets
    }

    pub fn max_trace_len(&self) -> usize {
        self.max_trace_len
    }

    pub fn event_count(&self) -> usize {
        self.traces.iter().map(Trace::len).sum()
    }

    pub fn trace_by_id(&self, case_id: &str) -> Option<&Trace> {
        self.traces.iter().find(|t| t.case_id == case_id)
    }

    /// Keeps only traces with at most `max_len` events.
    pub fn filter_max_len(self, max_len: usize) -> Result<Self> {
        let attribute_names = self.attribute_names;
        let traces = self
            .traces
            .into_iter()
            .filter(|t| t.len() <= max_len)
            .collect();
        EventLog::new(attribute_names, traces)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogFormat {
    Jsonl,
    Csv,
    Xes,
}

impl LogFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Some(LogFormat::Jsonl),
            "csv" => Some(LogFormat::Csv),
            "xes" => Some(LogFormat::Xes),
            _ => None,
        }
    }
}

impl FromStr for LogFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(LogFormat::Jsonl),
            "csv" => Ok(LogFormat::Csv),
            "xes" => Ok(LogFormat::Xes),
            other => Err(Error::Config(format!("unknown log format {other:?}"))),
        }
    }
}

impl fmt::Display for LogFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogFormat::Jsonl => "jsonl",
            LogFormat::Csv => "csv",
            LogFormat::Xes => "xes",
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    /// Drop traces longer than this many events after import.
    pub max_trace_len: Option<usize>,
}

pub fn read_log(path: &Path, format: LogFormat) -> Result<EventLog> {
    read_log_with(path, format, ReadOptions::default())
}

pub fn read_log_with(path: &Path, format: LogFormat, options: ReadOptions) -> Result<EventLog> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let log = parse_log(&text, format)?;
    match options.max_trace_len {
        Some(n) => log.filter_max_len(n),
        None => Ok(log),
    }
}

pub fn parse_log(text: &str, format: LogFormat) -> Result<EventLog> {
    match format {
        LogFormat::Jsonl => jsonl::parse(text),
        LogFormat::Csv => csv_format::parse(text),
        LogFormat::Xes => xes::parse(text),
    }
}

pub fn write_log(log: &EventLog, path: &Path, format: LogFormat) -> Result<()> {
    let text = log_to_string(log, format)?;
    write_atomic(path, text.as_bytes())
}

pub fn log_to_string(log: &EventLog, format: LogFormat) -> Result<String> {
    match format {
        LogFormat::Jsonl => jsonl::to_string(log),
        LogFormat::Csv => csv_format::to_string(log),
        LogFormat::Xes => Err(Error::Config("XES export is not supported".into())),
    }
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Stable sort of each trace by timestamp when every event carries a parseable one.
pub(crate) fn sort_events(trace: &mut Trace, location: &str) -> Result<()> {
    if trace.events.iter().any(|e| e.timestamp.is_none()) {
        return Ok(());
    }
    let mut keyed = Vec::with_capacity(trace.events.len());
    for (i, event) in trace.events.drain(..).enumerate() {
        let ts = event.timestamp.as_deref().unwrap_or_default();
        let key = timestamp::parse(ts).ok_or_else(|| {
            Error::parse(
                format!("{location}, trace {}, event {i}", trace.case_id),
                format!("unparseable timestamp {ts:?}"),
            )
        })?;
        keyed.push((key, event));
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    trace.events = keyed.into_iter().map(|(_, e)| e).collect();
    Ok(())
}

/// Groups rows into traces keyed by case id, in order of first appearance.
pub(crate) struct TraceBuilder {
    order: Vec<Trace>,
    index: HashMap<String, usize>,
}

impl TraceBuilder {
    pub(crate) fn new() -> Self {
        Self {
            order: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub(crate) fn push(&mut self, case_id: &str, event: Event) {
        let i = match self.index.get(case_id) {
            Some(&i) => i,
            None => {
                self.order.push(Trace {
                    case_id: case_id.to_owned(),
                    events: Vec::new(),
                });
                self.index.insert(case_id.to_owned(), self.order.len() - 1);
                self.order.len() - 1
            }
        };
        self.order[i].events.push(event);
    }

    pub(crate) fn finish(self, location: &str) -> Result<Vec<Trace>> {
        let mut traces = self.order;
        for t in &mut traces {
            sort_events(t, location)?;
        }
        Ok(traces)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TABLE1_CSV: &str = "\
case_id,timestamp,activity,user
1,2015-03-21 12:38:39,PR Created,Roy
1,2015-03-28 07:09:26,PR Released,Earl
1,2015-04-07 22:36:15,PO Created,James
1,2015-04-08 22:12:08,PO Released,Roy
1,2015-04-21 16:59:49,Goods Receipt,Ryan
2,2015-05-14 11:31:53,SC Created,Marilyn
2,2015-05-21 09:21:26,SC Purchased,Emily
2,2015-05-28 18:48:27,SC Approved,Roy
2,2015-06-01 04:43:08,PO Created,Johnny
";

    #[test]
    fn alphabets_follow_first_occurrence() {
        let log = parse_log(TABLE1_CSV, LogFormat::Csv).unwrap();
        let acts: Vec<_> = log.activity_alphabet().iter().collect();
        assert_eq!(
            acts,
            [
                "PR Created",
                "PR Released",
                "PO Created",
                "PO Released",
                "Goods Receipt",
                "SC Created",
                "SC Purchased",
                "SC Approved"
            ]
        );
        let users: Vec<_> = log.attribute_alphabets()[0].iter().collect();
        assert_eq!(
            users,
            ["Roy", "Earl", "James", "Ryan", "Marilyn", "Emily", "Johnny"]
        );
        assert_eq!(log.max_trace_len(), 5);
    }

    #[test]
    fn rejects_empty_and_malformed_logs() {
        assert!(matches!(
            EventLog::new(vec![], vec![]),
            Err(Error::EmptyLog)
        ));
        let bad = Trace {
            case_id: "x".into(),
            events: vec![Event::new("", vec![])],
        };
        assert!(EventLog::new(vec![], vec![bad]).is_err());
        let ragged = Trace {
            case_id: "x".into(),
            events: vec![Event::new("A", vec!["u".into()]), Event::new("B", vec![])],
        };
        assert!(EventLog::new(vec![USER.into()], vec![ragged]).is_err());
    }

    #[test]
    fn max_len_filter() {
        let log = parse_log(TABLE1_CSV, LogFormat::Csv).unwrap();
        let short = log.filter_max_len(4).unwrap();
        assert_eq!(short.len(), 1);
        assert_eq!(short.traces()[0].case_id, "2");
        assert_eq!(short.activity_alphabet().len(), 4);
        let log = parse_log(TABLE1_CSV, LogFormat::Csv).unwrap();
        assert!(matches!(log.filter_max_len(3), Err(Error::EmptyLog)));
    }

    #[test]
    fn format_from_path() {
        assert_eq!(
            LogFormat::from_path(Path::new("a/b.XES")),
            Some(LogFormat::Xes)
        );
        assert_eq!(LogFormat::from_path(Path::new("a/b")), None);
        assert_eq!("csv".parse::<LogFormat>().unwrap(), LogFormat::Csv);
    }
}
