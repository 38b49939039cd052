use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;

use super::{BehaviorVector, Label, FEATURE_NAMES, N_FEATURES};
use crate::error::{Error, Result};

const DAY_FORMAT: &str = "%Y-%m-%d";

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_notes(out: &mut impl Write, path: &Path, notes: &[String]) -> Result<()> {
    for n in notes {
        writeln!(out, "# {n}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::csv(path, e))
}

fn parse_day(path: &Path, line: usize, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), DAY_FORMAT)
        .map_err(|_| Error::schema(path, line, format!("bad day '{s}'")))
}

/// Features CSV: `user,day,<16 features>,label`, preceded by `#` note lines.
pub fn write_features(path: &Path, rows: &[BehaviorVector], notes: &[String]) -> Result<()> {
    let mut out = create(path)?;
    write_notes(&mut out, path, notes)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["user", "day"];
    header.extend(FEATURE_NAMES);
    header.push("label");
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        let mut rec = vec![r.user.clone(), r.day.format(DAY_FORMAT).to_string()];
        rec.extend(r.features.iter().map(|v| v.to_string()));
        rec.push(r.label.map(|l| l.as_str().to_string()).unwrap_or_default());
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_features(path: &Path) -> Result<Vec<BehaviorVector>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let expected: Vec<&str> = ["user", "day"]
        .into_iter()
        .chain(FEATURE_NAMES)
        .chain(["label"])
        .collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::schema(path, 1, "unexpected features header"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut features = [0.0; N_FEATURES];
        for (j, f) in features.iter_mut().enumerate() {
            let s = &rec[j + 2];
            *f = s
                .trim()
                .parse()
                .map_err(|_| Error::schema(path, line, format!("bad value '{s}' for {}", FEATURE_NAMES[j])))?;
        }
        let label = match rec[N_FEATURES + 2].trim() {
            "" => None,
            s => Some(
                Label::parse(s).ok_or_else(|| Error::schema(path, line, format!("bad label '{s}'")))?,
            ),
        };
        rows.push(BehaviorVector {
            user: rec[0].to_string(),
            day: parse_day(path, line, &rec[1])?,
            features,
            label,
        });
    }
    Ok(rows)
}

/// Labels CSV: `user,day,label`.
pub fn write_labels(
    path: &Path,
    labels: &BTreeMap<(String, NaiveDate), Label>,
    notes: &[String],
) -> Result<()> {
    let mut out = create(path)?;
    write_notes(&mut out, path, notes)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user", "day", "label"])
        .map_err(|e| Error::csv(path, e))?;
    for ((user, day), label) in labels {
        w.write_record([user.as_str(), &day.format(DAY_FORMAT).to_string(), label.as_str()])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_labels(path: &Path) -> Result<BTreeMap<(String, NaiveDate), Label>> {
    let mut rdr = reader(path)?;
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != 3 {
            return Err(Error::schema(path, line, "expected user,day,label"));
        }
        let label = Label::parse(&rec[2])
            .ok_or_else(|| Error::schema(path, line, format!("bad label '{}'", &rec[2])))?;
        out.insert((rec[0].to_string(), parse_day(path, line, &rec[1])?), label);
    }
    Ok(out)
}
