//! Synthetic CERT-style logs with injected anomalous days.
//!
//! Each user works on consecutive weekdays starting at `start`. Normal days
//! follow a per-user Poisson profile concentrated in 08:00-18:00 with rare
//! short evening sessions and sparse off-hours noise; anomalous days add out-of-hours logons, large device transfers and bursts of
//! out-of-hours file, mail and web activity.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, NaiveTime, Weekday};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{
    extract::{self, WorkingHours}, idx, write_labels, BehaviorVector, EventKind, Label, LogEvent, LogFile,
    TIMESTAMP_FORMAT,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_days: usize,
    pub anomaly_rate: f64,
    pub seed: u64,
    pub start: NaiveDate,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 1,
            n_days: 300,
            anomaly_rate: 0.05,
            seed: 0,
            start: NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.2).contains(&self.anomaly_rate) {
            return Err(Error::Config(format!(
                "anomaly rate {} outside [0, 0.2]",
                self.anomaly_rate
            )));
        }
        if self.n_users == 0 || self.n_days == 0 {
            return Err(Error::Config("need at least one user and one day".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthData {
    /// All events, sorted by timestamp then user.
    pub events: Vec<LogEvent>,
    pub labels: BTreeMap<(String, NaiveDate), Label>,
    /// Per-day counts as generated, labeled.
    pub counts: Vec<BehaviorVector>,
}

pub fn user_name(i: usize) -> String {
    format!("U{:03}", i + 1)
}

fn weekdays(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

struct DayBuilder<'a> {
    user: &'a str,
    day: NaiveDate,
    events: Vec<LogEvent>,
    counts: BehaviorVector,
}

impl DayBuilder<'_> {
    fn at(&self, secs: u32) -> NaiveDateTime {
        self.day
            .and_time(NaiveTime::from_num_seconds_from_midnight_opt(secs, 0).unwrap())
    }

    fn push(&mut self, secs: u32, kind: EventKind, size: Option<u64>) {
        let ts = self.at(secs);
        let on = WorkingHours::default().contains(ts.time());
        let slot = extract::slot(kind, on);
        self.counts.features[slot] += 1.0;
        self.counts.features[idx::SIZE] += size.unwrap_or(0) as f64;
        self.events.push(LogEvent {
            timestamp: ts,
            user: self.user.to_string(),
            kind,
            size,
        });
    }
}

const H: u32 = 3600;

fn on_time(rng: &mut ChaCha8Rng) -> u32 {
    rng.random_range(8 * H..18 * H)
}

fn off_time(rng: &mut ChaCha8Rng) -> u32 {
    let s = rng.random_range(0..14 * H);
    if s < 8 * H {
        s
    } else {
        s - 8 * H + 18 * H
    }
}

fn poisson(rng: &mut ChaCha8Rng, rate: f64) -> u64 {
    Poisson::new(rate).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

struct Profile {
    http: f64,
    send: f64,
    file: f64,
    device: f64,
}

fn normal_day(b: &mut DayBuilder, p: &Profile, rng: &mut ChaCha8Rng) {
    let logon = rng.random_range(8 * H..9 * H + H / 2);
    let logoff = rng.random_range(16 * H + H / 2..18 * H);
    b.push(logon, EventKind::Login, None);
    b.push(logoff, EventKind::Logoff, None);
    // rare short evening sessions keep the out-of-hours features from
    // being constant on ordinary days
    if rng.random_bool(0.02) {
        let t = rng.random_range(19 * H..21 * H);
        b.push(t, EventKind::Login, None);
        b.push(t + rng.random_range(300..1800), EventKind::Logoff, None);
    }
    for _ in 0..poisson(rng, p.http) {
        let t = on_time(rng);
        b.push(t, EventKind::Http, None);
    }
    for _ in 0..poisson(rng, 0.04) {
        let t = off_time(rng);
        b.push(t, EventKind::Http, None);
    }
    for _ in 0..poisson(rng, p.device) {
        let t = rng.random_range(8 * H..17 * H);
        let size = rng.random_range(1_000_000..50_000_000u64);
        b.push(t, EventKind::DeviceConnect, Some(size));
        b.push(t + rng.random_range(60..H), EventKind::DeviceDisconnect, None);
    }
    if rng.random_bool(0.02) {
        let t = rng.random_range(19 * H..21 * H);
        let size = rng.random_range(1_000_000..50_000_000u64);
        b.push(t, EventKind::DeviceConnect, Some(size));
        b.push(t + rng.random_range(60..20 * 60), EventKind::DeviceDisconnect, None);
    }
    for _ in 0..poisson(rng, p.send) {
        let t = on_time(rng);
        b.push(t, EventKind::EmailSend, None);
    }
    for _ in 0..poisson(rng, 0.02) {
        let t = off_time(rng);
        b.push(t, EventKind::EmailSend, None);
    }
    for _ in 0..poisson(rng, p.file) {
        let t = on_time(rng);
        b.push(t, EventKind::FileOp, None);
    }
    for _ in 0..poisson(rng, 0.02) {
        let t = off_time(rng);
        b.push(t, EventKind::FileOp, None);
    }
}

fn inject_anomaly(b: &mut DayBuilder, rng: &mut ChaCha8Rng) {
    for _ in 0..rng.random_range(1..=3) {
        let t = rng.random_range(19 * H..22 * H);
        b.push(t, EventKind::Login, None);
        b.push(t + rng.random_range(600..90 * 60), EventKind::Logoff, None);
    }
    for _ in 0..rng.random_range(2..=5) {
        let t = rng.random_range(19 * H..22 * H + H / 2);
        let size = rng.random_range(500_000_000..2_000_000_000u64);
        b.push(t, EventKind::DeviceConnect, Some(size));
        b.push(t + rng.random_range(60..30 * 60), EventKind::DeviceDisconnect, None);
    }
    for (kind, lo, hi) in [
        (EventKind::Http, 10, 30),
        (EventKind::EmailSend, 5, 15),
        (EventKind::FileOp, 15, 40),
    ] {
        for _ in 0..rng.random_range(lo..=hi) {
            let t = off_time(rng);
            b.push(t, kind, None);
        }
    }
}

/// Generates events, labels and the per-day counts they imply.
pub fn synth_events(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let days = weekdays(cfg.start, cfg.n_days);
    let mut events = Vec::new();
    let mut labels = BTreeMap::new();
    let mut counts = Vec::new();
    for u in 0..cfg.n_users {
        let user = user_name(u);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(u as u64 + 1);
        let profile = Profile {
            http: rng.random_range(30.0..60.0),
            send: rng.random_range(10.0..20.0),
            file: rng.random_range(10.0..20.0),
            device: rng.random_range(5.0..10.0),
        };
        for &day in &days {
            let abnormal = rng.random_bool(cfg.anomaly_rate);
            let mut b = DayBuilder {
                user: &user,
                day,
                events: Vec::new(),
                counts: BehaviorVector::empty(user.clone(), day),
            };
            normal_day(&mut b, &profile, &mut rng);
            if abnormal {
                inject_anomaly(&mut b, &mut rng);
            }
            let label = if abnormal { Label::Abnormal } else { Label::Normal };
            b.counts.label = Some(label);
            labels.insert((user.clone(), day), label);
            events.append(&mut b.events);
            counts.push(b.counts);
        }
    }
    events.sort_by(|a, b| (a.timestamp, &a.user).cmp(&(b.timestamp, &b.user)));
    Ok(SynthData {
        events,
        labels,
        counts,
    })
}

fn file_for(kind: EventKind) -> LogFile {
    match kind {
        EventKind::Login | EventKind::Logoff => LogFile::Login,
        EventKind::Http => LogFile::Http,
        EventKind::DeviceConnect | EventKind::DeviceDisconnect => LogFile::Device,
        EventKind::EmailSend => LogFile::Email,
        EventKind::FileOp => LogFile::File,
    }
}

fn header(file: LogFile) -> &'static [&'static str] {
    match file {
        LogFile::Login => &["id", "date", "user", "pc", "activity"],
        LogFile::Http => &["id", "date", "user", "pc", "url", "activity"],
        LogFile::Device => &["id", "date", "user", "pc", "activity", "size"],
        LogFile::Email => &["id", "date", "user", "pc", "to", "activity"],
        LogFile::File => &["id", "date", "user", "pc", "filename", "activity"],
    }
}

fn record(file: LogFile, n: usize, e: &LogEvent) -> Vec<String> {
    let id = format!("{{{}{:07}}}", file.file_name()[..1].to_ascii_uppercase(), n);
    let date = e.timestamp.format(TIMESTAMP_FORMAT).to_string();
    let pc = format!("PC-{}", &e.user[1..]);
    let mut rec = vec![id, date, e.user.clone(), pc];
    match e.kind {
        EventKind::Login => rec.push("Logon".into()),
        EventKind::Logoff => rec.push("Logoff".into()),
        EventKind::Http => {
            rec.push(format!("http://site{}.example.com/page", n % 97));
            rec.push("WWW Visit".into());
        }
        EventKind::DeviceConnect | EventKind::DeviceDisconnect => {
            let a = if e.kind == EventKind::DeviceConnect { "Connect" } else { "Disconnect" };
            rec.push(a.into());
            rec.push(e.size.map(|s| s.to_string()).unwrap_or_default());
        }
        EventKind::EmailSend => {
            rec.push(format!("colleague{}@example.com", n % 53));
            rec.push("Send".into());
        }
        EventKind::FileOp => {
            rec.push(format!("doc{}.docx", n % 71));
            rec.push("File Open".into());
        }
    }
    rec
}

/// Writes the five log files and `labels.csv` into `dir`.
pub fn synth_generate(cfg: &SynthConfig, dir: &Path, notes: &[String]) -> Result<SynthData> {
    let data = synth_events(cfg)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for file in LogFile::ALL {
        let path = dir.join(file.file_name());
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        w.write_record(header(file)).map_err(|e| Error::csv(&path, e))?;
        let rows = data.events.iter().filter(|e| file_for(e.kind) == file);
        for (n, e) in rows.enumerate() {
            w.write_record(record(file, n + 1, e))
                .map_err(|e| Error::csv(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    write_labels(&dir.join("labels.csv"), &data.labels, notes)?;
    Ok(data)
}
