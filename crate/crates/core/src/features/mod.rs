//! Log ingestion and per-user daily behavior features.
//!
//! Input files follow the CERT insider-threat layout: `login.csv`,
//! `http.csv`, `device.csv`, `email.csv` and `file.csv`, each with an
//! `id,date,user,...` header and `MM/DD/YYYY HH:MM:SS` timestamps.
//!
//! | file       | required columns              | optional columns      |
//! |------------|-------------------------------|-----------------------|
//! | login.csv  | id, date, user, activity      | pc                    |
//! | http.csv   | id, date, user                | pc, url, activity     |
//! | device.csv | id, date, user, activity      | pc, size (bytes)      |
//! | email.csv  | id, date, user                | pc, to, activity      |
//! | file.csv   | id, date, user                | pc, filename, activity|
//!
//! Each day is summarized by sixteen counts ([`FEATURE_NAMES`]).

mod extract;
mod io;
mod normalize;
mod parse;
mod synth;

use std::fmt;

use chrono::{NaiveDate, NaiveDateTime};

pub use extract::{extract_daily, WorkingHours};
pub use io::{read_features, read_labels, write_features, write_labels};
pub use normalize::{split, to_simplex, Dataset, MinMax, NormalizedRow, SimplexPoint};
pub use parse::{parse_file, parse_logs, FileReport, LogFile, ParseReport, RowError};
pub use synth::{synth_events, synth_generate, SynthConfig, SynthData};

pub const TIMESTAMP_FORMAT: &str = "%m/%d/%Y %H:%M:%S";

pub const N_FEATURES: usize = 16;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "login_on",
    "loginoff_on",
    "login_out",
    "loginoff_out",
    "weekend",
    "http_on",
    "http_out",
    "connect_on",
    "disconnect_on",
    "connect_out",
    "disconnect_out",
    "size",
    "send_on",
    "send_out",
    "file_on",
    "file_off",
];

pub(crate) mod idx {
    pub const LOGIN_ON: usize = 0;
    pub const LOGOFF_ON: usize = 1;
    pub const LOGIN_OUT: usize = 2;
    pub const LOGOFF_OUT: usize = 3;
    pub const WEEKEND: usize = 4;
    pub const HTTP_ON: usize = 5;
    pub const HTTP_OUT: usize = 6;
    pub const CONNECT_ON: usize = 7;
    pub const DISCONNECT_ON: usize = 8;
    pub const CONNECT_OUT: usize = 9;
    pub const DISCONNECT_OUT: usize = 10;
    pub const SIZE: usize = 11;
    pub const SEND_ON: usize = 12;
    pub const SEND_OUT: usize = 13;
    pub const FILE_ON: usize = 14;
    pub const FILE_OFF: usize = 15;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Login,
    Logoff,
    Http,
    DeviceConnect,
    DeviceDisconnect,
    EmailSend,
    FileOp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogEvent {
    pub timestamp: NaiveDateTime,
    pub user: String,
    pub kind: EventKind,
    /// Bytes moved, for device events that carry a size.
    pub size: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Normal,
    Abnormal,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Abnormal => "abnormal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "0" => Some(Label::Normal),
            "abnormal" | "malicious" | "1" => Some(Label::Abnormal),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Raw daily counts for one user.
#[derive(Clone, Debug, PartialEq)]
pub struct BehaviorVector {
    pub user: String,
    pub day: NaiveDate,
    pub features: [f64; N_FEATURES],
    pub label: Option<Label>,
}

impl BehaviorVector {
    pub fn empty(user: impl Into<String>, day: NaiveDate) -> Self {
        Self {
            user: user.into(),
            day,
            features: [0.0; N_FEATURES],
            label: None,
        }
    }

    pub fn is_abnormal(&self) -> bool {
        self.label == Some(Label::Abnormal)
    }
}

/// Attaches labels keyed by `(user, day)`; rows without a label keep `None`.
pub fn attach_labels(
    rows: &mut [BehaviorVector],
    labels: &std::collections::BTreeMap<(String, NaiveDate), Label>,
) {
    for r in rows {
        if let Some(l) = labels.get(&(r.user.clone(), r.day)) {
            r.label = Some(*l);
        }
    }
}
