//! Padded one-hot encoding of traces.
//!
//! Each event becomes the concatenation of one one-hot block per field (activity
//! first, then every attribute), and a trace is the concatenation of its events,
//! zero-padded to `max_len` events. A *slot* is the column range of one
//! `(event, field)` pair.

use std::ops::Range;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::eventlog::{Alphabet, EventLog, Trace};
use crate::{Error, Result};

/// Label shown for the reserved unknown-category column.
pub const UNKNOWN: &str = "<unknown>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "LayoutFile", try_from = "LayoutFile")]
pub struct EncodingLayout {
    activities: Alphabet,
    attribute_names: Vec<String>,
    attributes: Vec<Alphabet>,
    max_len: usize,
    unknown_column: bool,
    field_widths: Vec<usize>,
    field_offsets: Vec<usize>,
    event_width: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutFile {
    activities: Alphabet,
    attribute_names: Vec<String>,
    attributes: Vec<Alphabet>,
    max_len: usize,
    unknown_column: bool,
}

impl From<EncodingLayout> for LayoutFile {
    fn from(l: EncodingLayout) -> Self {
        LayoutFile {
            activities: l.activities,
            attribute_names: l.attribute_names,
            attributes: l.attributes,
            max_len: l.max_len,
            unknown_column: l.unknown_column,
        }
    }
}

impl TryFrom<LayoutFile> for EncodingLayout {
    type Error = Error;

    fn try_from(f: LayoutFile) -> Result<Self> {
        EncodingLayout::new(
            f.activities,
            f.attribute_names,
            f.attributes,
            f.max_len,
            f.unknown_column,
        )
    }
}

/// Optional extensions applied when building a layout from a log.
#[derive(Debug, Clone, Default)]
pub struct LayoutHints<'a> {
    /// Lower bound on the padded length.
    pub min_max_len: Option<usize>,
    /// Activities to include even if the log lacks them.
    pub activities: &'a [String],
    /// Extra values per attribute name.
    pub attribute_values: Vec<(&'a str, &'a [String])>,
    /// Reserve one extra column per field for values outside the alphabet.
    pub unknown_column: bool,
}

impl EncodingLayout {
    pub fn new(
        activities: Alphabet,
        attribute_names: Vec<String>,
        attributes: Vec<Alphabet>,
        max_len: usize,
        unknown_column: bool,
    ) -> Result<Self> {
        if attribute_names.len() != attributes.len() {
            return Err(Error::Encoding("attribute names and alphabets differ in count".into()));
        }
        if max_len == 0 {
            return Err(Error::Encoding("max_len must be positive".into()));
        }
        let extra = usize::from(unknown_column);
        let field_widths: Vec<usize> = std::iter::once(activities.len())
            .chain(attributes.iter().map(Alphabet::len))
            .map(|w| w + extra)
            .collect();
        if field_widths.contains(&0) {
            return Err(Error::Encoding("empty alphabet".into()));
        }
        let mut field_offsets = Vec::with_capacity(field_widths.len());
        let mut acc = 0;
        for w in &field_widths {
            field_offsets.push(acc);
            acc += w;
        }
        Ok(Self {
            activities,
            attribute_names,
            attributes,
            max_len,
            unknown_column,
            field_widths,
            field_offsets,
            event_width: acc,
        })
    }

    pub fn activities(&self) -> &Alphabet {
        &self.activities
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn attributes(&self) -> &[Alphabet] {
        &self.attributes
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn event_width(&self) -> usize {
        self.event_width
    }

    pub fn total_width(&self) -> usize {
        self.event_width * self.max_len
    }

    /// Activity plus attributes.
    pub fn n_fields(&self) -> usize {
        self.field_widths.len()
    }

    /// Field names: `activity` followed by the attribute names.
    pub fn field_names(&self) -> Vec<&str> {
        std::iter::once("activity")
            .chain(self.attribute_names.iter().map(String::as_str))
            .collect()
    }

    pub fn field_width(&self, field: usize) -> usize {
        self.field_widths[field]
    }

    pub fn n_slots(&self) -> usize {
        self.max_len * self.n_fields()
    }

    /// Column range of slot `(event, field)`.
    pub fn slot_range(&self, event: usize, field: usize) -> Range<usize> {
        let start = event * self.event_width + self.field_offsets[field];
        start..start + self.field_widths[field]
    }

    /// Inverse of [`slot_range`](Self::slot_range): `(event, field)` owning `column`.
    pub fn slot_of_column(&self, column: usize) -> Option<(usize, usize)> {
        if column >= self.total_width() {
            return None;
        }
        let event = column / self.event_width;
        let within = column % self.event_width;
        let field = self.field_offsets.iter().rposition(|&o| o <= within)?;
        Some((event, field))
    }

    fn alphabet(&self, field: usize) -> &Alphabet {
        if field == 0 {
            &self.activities
        } else {
            &self.attributes[field - 1]
        }
    }

    /// Category index of `value` within `field`.
    pub fn category_index(&self, field: usize, value: &str) -> Option<usize> {
        let alphabet = self.alphabet(field);
        alphabet
            .index_of(value)
            .or_else(|| self.unknown_column.then_some(alphabet.len()))
    }

    /// Category label of index `k` within `field`.
    pub fn category_label(&self, field: usize, k: usize) -> &str {
        self.alphabet(field).get(k).unwrap_or(UNKNOWN)
    }

    /// Maps a trace onto per-slot category indices, checking alphabet and length.
    fn categories(&self, trace: &Trace) -> Result<Vec<usize>> {
        if trace.len() > self.max_len {
            return Err(Error::Encoding(format!(
                "trace {} has {} events, capacity is {}",
                trace.case_id,
                trace.len(),
                self.max_len
            )));
        }
        let mut out = Vec::with_capacity(trace.len() * self.n_fields());
        for (i, event) in trace.events.iter().enumerate() {
            if event.attrs.len() + 1 != self.n_fields() {
                return Err(Error::Encoding(format!(
                    "trace {} event {i}: attribute count does not match layout",
                    trace.case_id
                )));
            }
            let values = std::iter::once(&event.activity).chain(&event.attrs);
            for (field, value) in values.enumerate() {
                let k = self.category_index(field, value).ok_or_else(|| {
                    Error::Encoding(format!(
                        "trace {} event {i}: {} value {value:?} not in alphabet",
                        trace.case_id,
                        self.field_names()[field]
                    ))
                })?;
                out.push(k);
            }
        }
        Ok(out)
    }

    /// Writes the one-hot encoding of `trace` into `row` (which must be zeroed).
    pub fn encode_trace_into(&self, trace: &Trace, row: &mut [f64]) -> Result<()> {
        if row.len() != self.total_width() {
            return Err(Error::Shape {
                expected: self.total_width(),
                actual: row.len(),
            });
        }
        let cats = self.categories(trace)?;
        for (s, k) in cats.into_iter().enumerate() {
            let (event, field) = (s / self.n_fields(), s % self.n_fields());
            row[self.slot_range(event, field).start + k] = 1.0;
        }
        Ok(())
    }

    /// Decodes slot `(event, field)` of `row` by argmax: `(category, value)`.
    pub fn decode_slot(&self, row: &[f64], event: usize, field: usize) -> Result<(&str, f64)> {
        if row.len() != self.total_width() {
            return Err(Error::Shape {
                expected: self.total_width(),
                actual: row.len(),
            });
        }
        if event >= self.max_len || field >= self.n_fields() {
            return Err(Error::Encoding(format!("no slot ({event}, {field})")));
        }
        let slot = &row[self.slot_range(event, field)];
        let (k, &v) = slot
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, (k, v)| if *v > *best.1 { (k, v) } else { best });
        Ok((self.category_label(field, k), v))
    }

    /// Decodes the first `len` events of `row` back into activity/attribute values.
    pub fn decode_row(&self, row: &[f64], len: usize) -> Result<Vec<Vec<String>>> {
        (0..len.min(self.max_len))
            .map(|e| {
                (0..self.n_fields())
                    .map(|f| self.decode_slot(row, e, f).map(|(c, _)| c.to_owned()))
                    .collect()
            })
            .collect()
    }
}

pub fn build_layout(log: &EventLog) -> EncodingLayout {
    build_layout_with(log, &LayoutHints::default())
        .expect("a valid log always yields a valid layout")
}

/// Alphabets in first-occurrence order over the log, extended by the hints.
pub fn build_layout_with(log: &EventLog, hints: &LayoutHints<'_>) -> Result<EncodingLayout> {
    let mut activities = log.activity_alphabet().clone();
    for a in hints.activities {
        activities.insert(a);
    }
    let mut attributes = log.attribute_alphabets().to_vec();
    for (name, values) in &hints.attribute_values {
        let k = log
            .attribute_index(name)
            .ok_or_else(|| Error::Encoding(format!("log has no attribute {name:?}")))?;
        for v in *values {
            attributes[k].insert(v);
        }
    }
    let max_len = log.max_trace_len().max(hints.min_max_len.unwrap_or(0));
    EncodingLayout::new(
        activities,
        log.attribute_names().to_vec(),
        attributes,
        max_len,
        hints.unknown_column,
    )
}

/// Encoded traces: one row per trace, `total_width` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedBatch {
    pub matrix: Array2<f64>,
    /// Unpadded event count per row.
    pub lengths: Vec<usize>,
}

impl EncodedBatch {
    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn width(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.matrix
            .row(i)
            .to_slice()
            .expect("batch matrix is row-major")
    }
}

pub fn encode(log: &EventLog, layout: &EncodingLayout) -> Result<EncodedBatch> {
    if log.attribute_names() != layout.attribute_names() {
        return Err(Error::Encoding(format!(
            "log attributes {:?} do not match layout attributes {:?}",
            log.attribute_names(),
            layout.attribute_names()
        )));
    }
    let mut matrix = Array2::zeros((log.len(), layout.total_width()));
    for (mut row, trace) in matrix.rows_mut().into_iter().zip(log.traces()) {
        layout.encode_trace_into(trace, row.as_slice_mut().expect("row-major"))?;
    }
    Ok(EncodedBatch {
        matrix,
        lengths: log.traces().iter().map(Trace::len).collect(),
    })
}

/// Reconstruction errors of one row.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotErrors {
    /// Mean squared error over the whole row, padding included.
    pub trace: f64,
    /// Mean squared error per slot, indexed `event * n_fields + field`.
    pub slots: Vec<f64>,
}

impl SlotErrors {
    pub fn slot(&self, layout: &EncodingLayout, event: usize, field: usize) -> f64 {
        self.slots[event * layout.n_fields() + field]
    }
}

pub fn slot_errors(input: &[f64], output: &[f64], layout: &EncodingLayout) -> Result<SlotErrors> {
    let width = layout.total_width();
    for actual in [input.len(), output.len()] {
        if actual != width {
            return Err(Error::Shape {
                expected: width,
                actual,
            });
        }
    }
    let mut slots = Vec::with_capacity(layout.n_slots());
    let mut total = 0.0;
    for event in 0..layout.max_len() {
        for field in 0..layout.n_fields() {
            let r = layout.slot_range(event, field);
            let sq: f64 = input[r.clone()]
                .iter()
                .zip(&output[r.clone()])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            total += sq;
            slots.push(sq / r.len() as f64);
        }
    }
    Ok(SlotErrors {
        trace: total / width as f64,
        slots,
    })
}
