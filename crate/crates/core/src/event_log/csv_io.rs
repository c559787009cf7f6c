//! CSV ingestion and export.

use std::io::{Read, Write};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::{Event, EventLog, EventLogError, EventSet, Label};

/// US-style date and 24-hour time, e.g. `03/11/2015 09:12:01`.
pub const DEFAULT_TIME_FORMAT: &str = "%m/%d/%Y %H:%M:%S";

/// Column names and timestamp format of an event CSV.
///
/// `timestamp` and `sensor` are mandatory. The optional columns are read
/// when the header contains them and ignored otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub timestamp: String,
    pub sensor: String,
    pub value: Option<String>,
    pub address: Option<String>,
    /// Current activity label; when absent the sensor name is the label.
    pub label: Option<String>,
    pub time_format: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            sensor: "sensor".into(),
            value: Some("value".into()),
            address: Some("address".into()),
            label: Some("label".into()),
            time_format: DEFAULT_TIME_FORMAT.into(),
        }
    }
}

pub const CASE_ID_COLUMN: &str = "case_id";

/// Reads every row as an event with ids `1, 2, ...` in row order.
pub fn parse_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<EventSet, EventLogError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| find(name).ok_or_else(|| EventLogError::MissingColumn(name.into()));
    let ts_col = required(&schema.timestamp)?;
    let sensor_col = required(&schema.sensor)?;
    let value_col = schema.value.as_deref().and_then(find);
    let address_col = schema.address.as_deref().and_then(find);
    let label_col = schema.label.as_deref().and_then(find);

    let mut events = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // header is row 1
        let row = i + 2;
        let field = |c: usize| record.get(c).unwrap_or("");
        let optional = |c: Option<usize>| c.map(field).filter(|v| !v.is_empty()).map(str::to_string);
        let raw_ts = field(ts_col);
        let timestamp = NaiveDateTime::parse_from_str(raw_ts, &schema.time_format).map_err(|_| {
            EventLogError::Timestamp {
                row,
                value: raw_ts.into(),
                format: schema.time_format.clone(),
            }
        })?;
        let sensor = field(sensor_col);
        if sensor.is_empty() {
            return Err(EventLogError::Row {
                row,
                message: format!("empty {:?} field", schema.sensor),
            });
        }
        let label = optional(label_col).unwrap_or_else(|| sensor.to_string());
        events.push(Event {
            id: i as u64 + 1,
            timestamp,
            sensor: sensor.into(),
            value: optional(value_col),
            address: optional(address_col),
            label: Label::new(label),
        });
    }
    EventSet::new(events)
}

/// Writes the log in event-id order with `case_id` and `label` columns appended.
///
/// The optional value and address columns are written when at least one
/// event carries that attribute.
pub fn write_csv<W: Write>(log: &EventLog, writer: W, schema: &CsvSchema) -> Result<(), EventLogError> {
    let mut rows: Vec<(&str, &Event)> = log
        .traces()
        .iter()
        .flat_map(|t| t.events.iter().map(move |e| (t.case_id.as_str(), e)))
        .collect();
    rows.sort_by_key(|(_, e)| e.id);
    let with_address = schema.address.is_some() && rows.iter().any(|(_, e)| e.address.is_some());
    let with_value = schema.value.is_some() && rows.iter().any(|(_, e)| e.value.is_some());
    let label_header = schema.label.as_deref().unwrap_or("label");

    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![schema.timestamp.as_str()];
    if with_address {
        header.push(schema.address.as_deref().unwrap_or_default());
    }
    header.push(&schema.sensor);
    if with_value {
        header.push(schema.value.as_deref().unwrap_or_default());
    }
    header.push(CASE_ID_COLUMN);
    header.push(label_header);
    w.write_record(&header)?;

    for (case_id, e) in rows {
        let ts = e.timestamp.format(&schema.time_format).to_string();
        let mut rec = vec![ts.as_str()];
        if with_address {
            rec.push(e.address.as_deref().unwrap_or(""));
        }
        rec.push(&e.sensor);
        if with_value {
            rec.push(e.value.as_deref().unwrap_or(""));
        }
        rec.push(case_id);
        rec.push(e.label.as_str());
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
