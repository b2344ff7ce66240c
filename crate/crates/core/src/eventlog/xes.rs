//! Read-only XES subset: trace `concept:name` as case id, event `concept:name` as
//! activity and event `time:timestamp` as timestamp. Everything else is skipped.

use quick_xml::events::{BytesStart, Event as XmlEvent};
use quick_xml::Reader;

use super::{sort_events, Event, EventLog, Trace};
use crate::{Error, Result};

const CONCEPT_NAME: &str = "concept:name";
const TIME_TIMESTAMP: &str = "time:timestamp";

#[derive(Default)]
struct EventDraft {
    activity: Option<String>,
    timestamp: Option<String>,
}

pub(super) fn parse(text: &str) -> Result<EventLog> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);

    let mut stack: Vec<Vec<u8>> = Vec::new();
    let mut traces = Vec::new();
    let mut trace: Option<(Option<String>, Vec<Event>)> = None;
    let mut event: Option<EventDraft> = None;
    let mut saw_log = false;

    loop {
        let pos = reader.buffer_position();
        let location = || format!("byte {pos}");
        let xml = reader
            .read_event()
            .map_err(|e| Error::parse(location(), e.to_string()))?;
        match xml {
            XmlEvent::Start(ref e) | XmlEvent::Empty(ref e) => {
                let is_empty = matches!(xml, XmlEvent::Empty(_));
                let name = e.name().as_ref().to_vec();
                match name.as_slice() {
                    b"log" if stack.is_empty() => saw_log = true,
                    b"trace" if stack.last().map(Vec::as_slice) == Some(b"log") => {
                        trace = Some((None, Vec::new()));
                    }
                    b"event" if stack.last().map(Vec::as_slice) == Some(b"trace") => {
                        event = Some(EventDraft::default());
                    }
                    _ => {
                        let parent = stack.last().map(Vec::as_slice);
                        if parent == Some(b"event") {
                            if let Some((key, value)) = key_value(e, &location)? {
                                let draft = event.as_mut().expect("open event");
                                match key.as_str() {
                                    CONCEPT_NAME => draft.activity = Some(value),
                                    TIME_TIMESTAMP => draft.timestamp = Some(value),
                                    _ => {}
                                }
                            }
                        } else if parent == Some(b"trace") {
                            if let Some((key, value)) = key_value(e, &location)? {
                                if key == CONCEPT_NAME {
                                    trace.as_mut().expect("open trace").0 = Some(value);
                                }
                            }
                        }
                    }
                }
                if is_empty {
                    close(&name, &mut trace, &mut event, &mut traces, &location)?;
                } else {
                    stack.push(name);
                }
            }
            XmlEvent::End(e) => {
                let name = e.name().as_ref().to_vec();
                if stack.pop().as_deref() != Some(name.as_slice()) {
                    return Err(Error::parse(location(), "mismatched closing tag"));
                }
                close(&name, &mut trace, &mut event, &mut traces, &location)?;
            }
            XmlEvent::Eof => break,
            _ => {}
        }
    }
    if !saw_log {
        return Err(Error::parse("document", "no <log> element"));
    }
    if !stack.is_empty() {
        return Err(Error::parse("end of document", "unclosed element"));
    }
    EventLog::new(Vec::new(), traces)
}

fn close(
    name: &[u8],
    trace: &mut Option<(Option<String>, Vec<Event>)>,
    event: &mut Option<EventDraft>,
    traces: &mut Vec<Trace>,
    location: &dyn Fn() -> String,
) -> Result<()> {
    match name {
        b"event" => {
            if let Some(draft) = event.take() {
                let activity = draft.activity.ok_or_else(|| {
                    Error::parse(location(), "event without concept:name")
                })?;
                let (_, events) = trace.as_mut().expect("event outside trace");
                events.push(Event {
                    activity,
                    timestamp: draft.timestamp,
                    attrs: Vec::new(),
                });
            }
        }
        b"trace" => {
            if let Some((case_id, events)) = trace.take() {
                let case_id = case_id.unwrap_or_else(|| traces.len().to_string());
                if events.is_empty() {
                    log::warn!("skipping empty XES trace {case_id}");
                    return Ok(());
                }
                let mut t = Trace { case_id, events };
                sort_events(&mut t, &location())?;
                traces.push(t);
            }
        }
        _ => {}
    }
    Ok(())
}

fn key_value(
    e: &BytesStart<'_>,
    location: &dyn Fn() -> String,
) -> Result<Option<(String, String)>> {
    let mut key = None;
    let mut value = None;
    for attr in e.attributes() {
        let attr = attr.map_err(|err| Error::parse(location(), err.to_string()))?;
        let v = attr
            .unescape_value()
            .map_err(|err| Error::parse(location(), err.to_string()))?
            .into_owned();
        match attr.key.as_ref() {
            b"key" => key = Some(v),
            b"value" => value = Some(v),
            _ => {}
        }
    }
    Ok(key.zip(value))
}
