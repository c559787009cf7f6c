//! Time of day as hours and as an angle on the clock.

use std::f64::consts::PI;

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::EventLogError;

/// Time of day in hours, `0 <= value < 24`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Hourfloat(f64);

impl Hourfloat {
    pub fn new(value: f64) -> Result<Self, EventLogError> {
        if !(0.0..24.0).contains(&value) {
            return Err(EventLogError::HourOutOfRange(value));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Angle on the 24-hour clock, midnight at 0.
    pub fn radians(self) -> f64 {
        self.0 * PI / 12.0
    }
}

impl TryFrom<f64> for Hourfloat {
    type Error = EventLogError;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<Hourfloat> for f64 {
    fn from(h: Hourfloat) -> f64 {
        h.0
    }
}

/// Hours since midnight (fractional seconds included) and the matching angle.
pub fn hourfloat_radians(timestamp: &NaiveDateTime) -> (Hourfloat, f64) {
    let t = timestamp.time();
    let seconds = f64::from(t.num_seconds_from_midnight()) + f64::from(t.nanosecond().min(999_999_999)) * 1e-9;
    let hours = (seconds / 3600.0).min(24.0 - 1e-12);
    let h = Hourfloat(hours);
    (h, h.radians())
}
