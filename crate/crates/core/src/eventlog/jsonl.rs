use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{sort_events, Event, EventLog, Trace};
use crate::{Error, Result};

#[derive(Serialize)]
struct TraceOut<'a> {
    case_id: &'a str,
    events: Vec<EventOut<'a>>,
}

#[derive(Serialize)]
struct EventOut<'a> {
    activity: &'a str,
    timestamp: Option<&'a str>,
    attrs: AttrsOut<'a>,
}

struct AttrsOut<'a> {
    names: &'a [String],
    values: &'a [String],
}

impl Serialize for AttrsOut<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.names.len()))?;
        for (k, v) in self.names.iter().zip(self.values) {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceIn {
    case_id: String,
    events: Vec<EventIn>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventIn {
    activity: String,
    #[serde(default)]
    timestamp: Option<String>,
    #[serde(default)]
    attrs: OrderedAttrs,
}

/// Attribute object that keeps the key order of the source document.
#[derive(Default)]
struct OrderedAttrs(Vec<(String, String)>);

impl<'de> Deserialize<'de> for OrderedAttrs {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = OrderedAttrs;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object of string attributes")
            }
            fn visit_map<A: MapAccess<'de>>(
                self,
                mut map: A,
            ) -> std::result::Result<OrderedAttrs, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, String>()? {
                    out.push((k, v));
                }
                Ok(OrderedAttrs(out))
            }
        }
        d.deserialize_map(V)
    }
}

pub(super) fn parse(text: &str) -> Result<EventLog> {
    let mut names: Option<Vec<String>> = None;
    let mut traces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let location = format!("line {}", lineno + 1);
        let raw: TraceIn =
            serde_json::from_str(line).map_err(|e| Error::parse(&location, e.to_string()))?;
        let mut events = Vec::with_capacity(raw.events.len());
        for ev in raw.events {
            let names = names.get_or_insert_with(|| ev.attrs.0.iter().map(|(k, _)| k.clone()).collect());
            let attrs = align_attrs(names, ev.attrs.0)
                .map_err(|m| Error::parse(&location, m))?;
            events.push(Event {
                activity: ev.activity,
                timestamp: ev.timestamp,
                attrs,
            });
        }
        let mut trace = Trace {
            case_id: raw.case_id,
            events,
        };
        sort_events(&mut trace, &location)?;
        traces.push(trace);
    }
    EventLog::new(names.unwrap_or_default(), traces)
}

fn align_attrs(names: &[String], attrs: Vec<(String, String)>) -> std::result::Result<Vec<String>, String> {
    if attrs.len() != names.len() {
        return Err(format!(
            "attribute schema mismatch: expected {:?}",
            names
        ));
    }
    let mut out = vec![None; names.len()];
    for (k, v) in attrs {
        let i = names
            .iter()
            .position(|n| *n == k)
            .ok_or_else(|| format!("unexpected attribute {k:?}"))?;
        if out[i].replace(v).is_some() {
            return Err(format!("duplicate attribute {k:?}"));
        }
    }
    Ok(out.into_iter().map(Option::unwrap_or_default).collect())
}

pub(super) fn to_string(log: &EventLog) -> Result<String> {
    let mut out = String::new();
    for trace in log.traces() {
        let t = TraceOut {
            case_id: &trace.case_id,
            events: trace
                .events
                .iter()
                .map(|e| EventOut {
                    activity: &e.activity,
                    timestamp: e.timestamp.as_deref(),
                    attrs: AttrsOut {
                        names: log.attribute_names(),
                        values: &e.attrs,
                    },
                })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&t)?);
        out.push('\n');
    }
    Ok(out)
}
