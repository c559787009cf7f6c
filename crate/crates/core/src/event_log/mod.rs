//! Sensor event logs.
//!
//! Events are parsed from CSV into an [`EventSet`], grouped into traces by a
//! partition key (by default one trace per address per calendar day), and
//! relabeled through [`Relabeling`] functions whose refinement order can be
//! checked with [`is_refinement`].

mod csv_io;
mod relabel;
mod time;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{parse_csv, write_csv, CsvSchema, CASE_ID_COLUMN, DEFAULT_TIME_FORMAT};
pub use relabel::{is_refinement, relabel, Relabeling};
pub use time::{hourfloat_radians, Hourfloat};

pub type EventId = u64;

#[derive(Debug, Error)]
pub enum EventLogError {
    #[error("row {row}: cannot parse timestamp {value:?} with format {format:?}")]
    Timestamp { row: usize, value: String, format: String },

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("duplicate event id {0}")]
    DuplicateId(EventId),

    #[error("hourfloat {0} is outside [0, 24)")]
    HourOutOfRange(f64),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Activity label of an event.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(String);

impl Label {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

/// One sensor reading. `sensor`, `value` and `address` are the raw
/// attributes; `label` is the current activity label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub timestamp: NaiveDateTime,
    pub sensor: String,
    pub value: Option<String>,
    pub address: Option<String>,
    pub label: Label,
}

impl Event {
    /// Event labelled by its sensor name.
    pub fn new(id: EventId, timestamp: NaiveDateTime, sensor: impl Into<String>) -> Self {
        let sensor = sensor.into();
        Self {
            id,
            timestamp,
            label: Label::new(sensor.clone()),
            sensor,
            value: None,
            address: None,
        }
    }

    pub fn hourfloat(&self) -> Hourfloat {
        hourfloat_radians(&self.timestamp).0
    }

    pub fn angle(&self) -> f64 {
        hourfloat_radians(&self.timestamp).1
    }
}

/// Events with pairwise distinct ids, in input order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventSet {
    events: Vec<Event>,
}

impl EventSet {
    pub fn new(events: Vec<Event>) -> Result<Self, EventLogError> {
        let mut seen = HashSet::with_capacity(events.len());
        for e in &events {
            if !seen.insert(e.id) {
                return Err(EventLogError::DuplicateId(e.id));
            }
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }
}

/// Events sharing one trace-attribute value, ordered by time then id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.events.iter().map(|e| &e.label)
    }
}

/// Built-in event partitioning functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionKey {
    /// Address and calendar day (midnight to midnight).
    #[default]
    AddressDay,
    /// Calendar day only.
    Day,
    /// Address only.
    Address,
}

impl PartitionKey {
    pub fn case_id(&self, e: &Event) -> String {
        let day = e.timestamp.date().format("%Y-%m-%d");
        let addr = e.address.as_deref().unwrap_or("");
        match self {
            Self::AddressDay if addr.is_empty() => day.to_string(),
            Self::AddressDay => format!("{addr}/{day}"),
            Self::Day => day.to_string(),
            Self::Address => addr.to_string(),
        }
    }
}

/// Groups events into traces by `key`.
///
/// Each trace is the maximal set of events sharing one key value, sorted by
/// timestamp with equal timestamps ordered by id. Traces are returned in
/// ascending key order.
pub fn partition<F>(events: &EventSet, key: F) -> Vec<Trace>
where
    F: Fn(&Event) -> String,
{
    let mut groups: BTreeMap<String, Vec<Event>> = BTreeMap::new();
    for e in events.events() {
        groups.entry(key(e)).or_default().push(e.clone());
    }
    groups
        .into_iter()
        .map(|(case_id, mut events)| {
            events.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.id.cmp(&b.id)));
            Trace { case_id, events }
        })
        .collect()
}

/// A finite set of traces plus the alphabet of labels occurring in them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    traces: Vec<Trace>,
    alphabet: BTreeSet<Label>,
}

impl EventLog {
    /// Fails if an event id occurs twice across traces.
    pub fn from_traces(traces: Vec<Trace>) -> Result<Self, EventLogError> {
        let mut seen = HashSet::new();
        for e in traces.iter().flat_map(|t| &t.events) {
            if !seen.insert(e.id) {
                return Err(EventLogError::DuplicateId(e.id));
            }
        }
        Ok(Self::from_traces_unchecked(traces))
    }

    pub(crate) fn from_traces_unchecked(traces: Vec<Trace>) -> Self {
        let alphabet = traces.iter().flat_map(|t| t.labels().cloned()).collect();
        Self { traces, alphabet }
    }

    pub fn from_events(events: &EventSet, key: PartitionKey) -> Self {
        Self::from_traces_unchecked(partition(events, |e| key.case_id(e)))
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn alphabet(&self) -> &BTreeSet<Label> {
        &self.alphabet
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.traces.iter().flat_map(|t| &t.events)
    }

    pub fn event_count(&self) -> usize {
        self.traces.iter().map(|t| t.events.len()).sum()
    }

    /// Events carrying `label`, in ascending id order.
    pub fn events_with_label(&self, label: &Label) -> Vec<&Event> {
        let mut v: Vec<&Event> = self.events().filter(|e| &e.label == label).collect();
        v.sort_by_key(|e| e.id);
        v
    }

    /// Number of events per label.
    pub fn label_counts(&self) -> BTreeMap<Label, usize> {
        let mut counts = BTreeMap::new();
        for e in self.events() {
            *counts.entry(e.label.clone()).or_insert(0) += 1;
        }
        counts
    }
}
