use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDateTime;

use super::{EventKind, LogEvent, TIMESTAMP_FORMAT};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogFile {
    Login,
    Http,
    Device,
    Email,
    File,
}

impl LogFile {
    pub const ALL: [LogFile; 5] = [
        LogFile::Login,
        LogFile::Http,
        LogFile::Device,
        LogFile::Email,
        LogFile::File,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            LogFile::Login => "login.csv",
            LogFile::Http => "http.csv",
            LogFile::Device => "device.csv",
            LogFile::Email => "email.csv",
            LogFile::File => "file.csv",
        }
    }

    fn activity_required(self) -> bool {
        matches!(self, LogFile::Login | LogFile::Device)
    }

    /// Maps an activity value to an event kind; `None` for values outside the
    /// closed set (those rows are skipped and counted).
    fn kind_for(self, activity: Option<&str>) -> Option<EventKind> {
        let a = activity.map(|s| s.trim().to_ascii_lowercase());
        match (self, a.as_deref()) {
            (LogFile::Login, Some("logon")) => Some(EventKind::Login),
            (LogFile::Login, Some("logoff")) => Some(EventKind::Logoff),
            (LogFile::Device, Some("connect")) => Some(EventKind::DeviceConnect),
            (LogFile::Device, Some("disconnect")) => Some(EventKind::DeviceDisconnect),
            (LogFile::Http, None | Some("" | "http" | "www visit" | "www download" | "www upload")) => {
                Some(EventKind::Http)
            }
            (LogFile::Email, None | Some("" | "send")) => Some(EventKind::EmailSend),
            (
                LogFile::File,
                None | Some(
                    "" | "file open" | "file write" | "file copy" | "file delete" | "open" | "write"
                    | "copy" | "delete",
                ),
            ) => Some(EventKind::FileOp),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileReport {
    pub file: String,
    pub rows: usize,
    pub events: usize,
    pub unknown_activity: usize,
    pub errors: Vec<RowError>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub files: Vec<FileReport>,
}

impl ParseReport {
    pub fn total_events(&self) -> usize {
        self.files.iter().map(|f| f.events).sum()
    }

    pub fn total_errors(&self) -> usize {
        self.files.iter().map(|f| f.errors.len()).sum()
    }

    pub fn total_unknown(&self) -> usize {
        self.files.iter().map(|f| f.unknown_activity).sum()
    }

    /// One `file` line per input, one `error` line per bad row, then totals.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for f in &self.files {
            let _ = writeln!(
                s,
                "file {} rows={} events={} unknown_activity={} errors={}",
                f.file,
                f.rows,
                f.events,
                f.unknown_activity,
                f.errors.len()
            );
        }
        for f in &self.files {
            for e in &f.errors {
                let _ = writeln!(s, "error {}:{}: {}", f.file, e.line, e.message);
            }
        }
        let _ = writeln!(
            s,
            "total rows={} events={} unknown_activity={} errors={}",
            self.files.iter().map(|f| f.rows).sum::<usize>(),
            self.total_events(),
            self.total_unknown(),
            self.total_errors()
        );
        s
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name))
}

/// Parses one log file. Rows with an unknown activity are skipped and
/// counted; rows with a bad timestamp or missing fields are reported.
pub fn parse_file(kind: LogFile, path: &Path) -> Result<(Vec<LogEvent>, FileReport)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let find = |name: &str| column(&headers, name);
    let (Some(date_col), Some(user_col), Some(_)) = (find("date"), find("user"), find("id")) else {
        return Err(Error::schema(path, 1, "header must name id, date and user"));
    };
    let activity_col = find("activity");
    if kind.activity_required() && activity_col.is_none() {
        return Err(Error::schema(path, 1, "header must name an activity column"));
    }
    let size_col = find("size").filter(|_| kind == LogFile::Device);

    let mut report = FileReport {
        file: kind.file_name().to_string(),
        rows: 0,
        events: 0,
        unknown_activity: 0,
        errors: Vec::new(),
    };
    let mut events = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                report.rows += 1;
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                report.errors.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        }
        report.rows += 1;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut fail = |msg: String| report.errors.push(RowError { line, message: msg });
        let (Some(date), Some(user)) = (record.get(date_col), record.get(user_col)) else {
            fail("missing date or user field".into());
            continue;
        };
        let timestamp = match NaiveDateTime::parse_from_str(date.trim(), TIMESTAMP_FORMAT) {
            Ok(t) => t,
            Err(_) => {
                fail(format!("bad timestamp '{date}'"));
                continue;
            }
        };
        let user = user.trim();
        if user.is_empty() {
            fail("empty user".into());
            continue;
        }
        let Some(event_kind) = kind.kind_for(activity_col.and_then(|c| record.get(c))) else {
            report.unknown_activity += 1;
            continue;
        };
        let size = match size_col.and_then(|c| record.get(c)).map(str::trim) {
            None | Some("") => None,
            Some(s) => match s.parse::<u64>() {
                Ok(v) => Some(v),
                Err(_) => {
                    fail(format!("bad size '{s}'"));
                    continue;
                }
            },
        };
        events.push(LogEvent {
            timestamp,
            user: user.to_string(),
            kind: event_kind,
            size,
        });
        report.events += 1;
    }
    Ok((events, report))
}

/// Parses the five log files found in `dir`.
pub fn parse_logs(dir: &Path) -> Result<(Vec<LogEvent>, ParseReport)> {
    let mut events = Vec::new();
    let mut report = ParseReport::default();
    for kind in LogFile::ALL {
        let (mut ev, fr) = parse_file(kind, &dir.join(kind.file_name()))?;
        events.append(&mut ev);
        report.files.push(fr);
    }
    Ok((events, report))
}
