use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::{Event, EventId, EventLog, Label, Trace};

/// A total, deterministic map from events to labels.
#[derive(Clone)]
pub struct Relabeling {
    name: String,
    f: Arc<dyn Fn(&Event) -> Label + Send + Sync>,
}

impl fmt::Debug for Relabeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Relabeling").field(&self.name).finish()
    }
}

impl Relabeling {
    pub fn new(name: impl Into<String>, f: impl Fn(&Event) -> Label + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, e: &Event) -> Label {
        (self.f)(e)
    }

    /// Keeps the current label.
    pub fn identity() -> Self {
        Self::new("identity", |e| e.label.clone())
    }

    pub fn sensor_only() -> Self {
        Self::new("sensor", |e| Label::new(e.sensor.clone()))
    }

    /// Sensor name and sensor value.
    pub fn sensor_value() -> Self {
        Self::new("sensor+value", |e| match &e.value {
            Some(v) => Label::new(format!("{} = {v}", e.sensor)),
            None => Label::new(e.sensor.clone()),
        })
    }

    /// Every raw attribute including the event id, so no two events share a label.
    pub fn full_attributes() -> Self {
        Self::new("full", |e| {
            Label::new(format!(
                "{}|{}|{}|{}|{}",
                e.id,
                e.timestamp,
                e.sensor,
                e.value.as_deref().unwrap_or(""),
                e.address.as_deref().unwrap_or("")
            ))
        })
    }

    pub fn constant(label: impl Into<String>) -> Self {
        let label = Label::new(label);
        Self::new("constant", move |_| label.clone())
    }

    /// Looks labels up by event id; events missing from the table keep their label.
    pub fn from_table(name: impl Into<String>, table: HashMap<EventId, Label>) -> Self {
        Self::new(name, move |e| table.get(&e.id).cloned().unwrap_or_else(|| e.label.clone()))
    }

    /// The labeling carried by `log`.
    pub fn from_log(name: impl Into<String>, log: &EventLog) -> Self {
        Self::from_table(name, log.events().map(|e| (e.id, e.label.clone())).collect())
    }
}

/// Replaces every event label by `l(event)` and recomputes the alphabet.
pub fn relabel(log: &EventLog, l: &Relabeling) -> EventLog {
    let traces = log
        .traces()
        .iter()
        .map(|t| Trace {
            case_id: t.case_id.clone(),
            events: t
                .events
                .iter()
                .map(|e| Event { label: l.apply(e), ..e.clone() })
                .collect(),
        })
        .collect();
    EventLog::from_traces_unchecked(traces)
}

/// Whether `l1` refines `l2` on `events`: events equal under `l1` are equal under `l2`.
pub fn is_refinement<'a>(l1: &Relabeling, l2: &Relabeling, events: impl IntoIterator<Item = &'a Event>) -> bool {
    let mut coarse: HashMap<Label, Label> = HashMap::new();
    for e in events {
        let image = l2.apply(e);
        match coarse.entry(l1.apply(e)) {
            std::collections::hash_map::Entry::Occupied(o) if *o.get() != image => return false,
            std::collections::hash_map::Entry::Occupied(_) => {}
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(image);
            }
        }
    }
    true
}
