use super::{Event, EventLog, TraceBuilder};
use crate::{Error, Result};

const CASE_ID: &str = "case_id";
const TIMESTAMP: &str = "timestamp";
const ACTIVITY: &str = "activity";

pub(super) fn parse(text: &str) -> Result<EventLog> {
    if text.trim().is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse("line 1", e.to_string()))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let case_col =
        column(CASE_ID).ok_or_else(|| Error::parse("line 1", "missing column case_id"))?;
    let act_col =
        column(ACTIVITY).ok_or_else(|| Error::parse("line 1", "missing column activity"))?;
    let ts_col = column(TIMESTAMP);
    let attr_cols: Vec<usize> = (0..headers.len())
        .filter(|&i| i != case_col && i != act_col && Some(i) != ts_col)
        .collect();
    let names = attr_cols
        .iter()
        .map(|&i| headers[i].trim().to_owned())
        .collect();

    let mut builder = TraceBuilder::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(format!("line {line}"), e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or_default();
        let case_id = field(case_col);
        if case_id.is_empty() {
            return Err(Error::parse(format!("line {line}"), "empty case_id"));
        }
        let timestamp = ts_col
            .map(|i| field(i).to_owned())
            .filter(|t| !t.is_empty());
        builder.push(
            case_id,
            Event {
                activity: field(act_col).to_owned(),
                timestamp,
                attrs: attr_cols.iter().map(|&i| field(i).to_owned()).collect(),
            },
        );
    }
    EventLog::new(names, builder.finish("csv")?)
}

pub(super) fn to_string(log: &EventLog) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::parse("csv output", e.to_string());
    let mut header = vec![CASE_ID, TIMESTAMP, ACTIVITY];
    header.extend(log.attribute_names().iter().map(String::as_str));
    writer.write_record(&header).map_err(csv_err)?;
    for trace in log.traces() {
        for e in &trace.events {
            let mut row = vec![
                trace.case_id.as_str(),
                e.timestamp.as_deref().unwrap_or(""),
                e.activity.as_str(),
            ];
            row.extend(e.attrs.iter().map(String::as_str));
            writer.write_record(&row).map_err(csv_err)?;
        }
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::parse("csv output", e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::parse("csv output", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::tests::TABLE1_CSV;

    #[test]
    fn table1_excerpt() {
        let log = parse(TABLE1_CSV).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log.activity_alphabet().len(), 8);
        assert_eq!(log.max_trace_len(), 5);
        assert_eq!(log.attribute_names(), ["user"]);
        let out = to_string(&log).unwrap();
        assert_eq!(out.lines().count(), 1 + 9);
        assert_eq!(parse(&out).unwrap(), log);
    }

    #[test]
    fn events_sorted_by_timestamp_stably() {
        let text = "case_id,timestamp,activity\n\
                    a,2020-01-02 00:00:00,B\n\
                    a,2020-01-01 00:00:00,A\n\
                    a,2020-01-02 00:00:00,C\n";
        let log = parse(text).unwrap();
        let acts: Vec<_> = log.traces()[0].activities().collect();
        assert_eq!(acts, ["A", "B", "C"]);
    }

    #[test]
    fn malformed_rows_report_position() {
        let err = parse("case_id,activity\n1,A\n2,B,extra\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = parse("id,activity\n1,A\n").unwrap_err();
        assert!(err.to_string().contains("case_id"), "{err}");
        let err = parse("case_id,timestamp,activity\n1,soon,A\n1,later,B\n").unwrap_err();
        assert!(err.to_string().contains("unparseable timestamp"), "{err}");
        assert!(matches!(parse(""), Err(Error::EmptyLog)));
        assert!(matches!(parse("case_id,activity\n"), Err(Error::EmptyLog)));
    }
}
