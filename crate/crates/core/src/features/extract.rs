use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate, NaiveTime, Weekday};
use rayon::prelude::*;

use super::{idx, BehaviorVector, EventKind, LogEvent};
use crate::error::{Error, Result};

/// Working-time window `[start, end)` in local time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WorkingHours {
    pub start: NaiveTime,
    pub end: NaiveTime,
}

impl Default for WorkingHours {
    fn default() -> Self {
        Self {
            start: NaiveTime::from_hms_opt(8, 0, 0).unwrap(),
            end: NaiveTime::from_hms_opt(18, 0, 0).unwrap(),
        }
    }
}

impl WorkingHours {
    pub fn new(start: NaiveTime, end: NaiveTime) -> Result<Self> {
        if start >= end {
            return Err(Error::Config(format!(
                "working hours start {start} must precede end {end}"
            )));
        }
        Ok(Self { start, end })
    }

    /// Parses `HH:MM-HH:MM`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("working hours '{s}' not in HH:MM-HH:MM form"));
        let (a, b) = s.split_once('-').ok_or_else(bad)?;
        let t = |v: &str| NaiveTime::parse_from_str(v.trim(), "%H:%M").map_err(|_| bad());
        Self::new(t(a)?, t(b)?)
    }

    pub fn contains(&self, t: NaiveTime) -> bool {
        self.start <= t && t < self.end
    }

    pub fn to_config_string(&self) -> String {
        format!("{}-{}", self.start.format("%H:%M"), self.end.format("%H:%M"))
    }
}

/// Feature index counting `kind` inside (`on`) or outside working hours.
pub(crate) fn slot(kind: EventKind, on: bool) -> usize {
    match (kind, on) {
        (EventKind::Login, true) => idx::LOGIN_ON,
        (EventKind::Login, false) => idx::LOGIN_OUT,
        (EventKind::Logoff, true) => idx::LOGOFF_ON,
        (EventKind::Logoff, false) => idx::LOGOFF_OUT,
        (EventKind::Http, true) => idx::HTTP_ON,
        (EventKind::Http, false) => idx::HTTP_OUT,
        (EventKind::DeviceConnect, true) => idx::CONNECT_ON,
        (EventKind::DeviceConnect, false) => idx::CONNECT_OUT,
        (EventKind::DeviceDisconnect, true) => idx::DISCONNECT_ON,
        (EventKind::DeviceDisconnect, false) => idx::DISCONNECT_OUT,
        (EventKind::EmailSend, true) => idx::SEND_ON,
        (EventKind::EmailSend, false) => idx::SEND_OUT,
        (EventKind::FileOp, true) => idx::FILE_ON,
        (EventKind::FileOp, false) => idx::FILE_OFF,
    }
}

fn add_event(v: &mut BehaviorVector, e: &LogEvent, on: bool) {
    v.features[slot(e.kind, on)] += 1.0;
    if matches!(e.kind, EventKind::DeviceConnect | EventKind::DeviceDisconnect) {
        v.features[idx::SIZE] += e.size.unwrap_or(0) as f64;
    }
}

fn is_weekend(day: NaiveDate) -> bool {
    matches!(day.weekday(), Weekday::Sat | Weekday::Sun)
}

/// One vector per `(user, day)` with any activity, sorted by user then day.
/// Users are processed in parallel.
pub fn extract_daily(events: &[LogEvent], hours: WorkingHours) -> Vec<BehaviorVector> {
    let mut by_user: BTreeMap<&str, Vec<&LogEvent>> = BTreeMap::new();
    for e in events {
        by_user.entry(e.user.as_str()).or_default().push(e);
    }
    let per_user: Vec<Vec<BehaviorVector>> = by_user
        .into_par_iter()
        .map(|(user, evs)| {
            let mut days: BTreeMap<NaiveDate, BehaviorVector> = BTreeMap::new();
            for e in evs {
                let day = e.timestamp.date();
                let v = days.entry(day).or_insert_with(|| {
                    let mut v = BehaviorVector::empty(user, day);
                    v.features[idx::WEEKEND] = if is_weekend(day) { 1.0 } else { 0.0 };
                    v
                });
                add_event(v, e, hours.contains(e.timestamp.time()));
            }
            days.into_values().collect()
        })
        .collect();
    per_user.into_iter().flatten().collect()
}
