//! End-to-end runs: synthesize or ingest logs, train the generator, score
//! and classify days, and summarize results. Every file written here starts
//! with a `# config-digest <sha256>` line.
//!
//! Layout under `out_dir`:
//!
//! | file                    | written by |
//! |-------------------------|------------|
//! | `logs/*.csv`            | synth      |
//! | `features.csv`          | ingest     |
//! | `parse_report.txt`      | ingest     |
//! | `checkpoint_k<K>.qbde`  | train      |
//! | `losses_k<K>.csv`       | train      |
//! | `detection.csv`         | detect     |
//! | `summary.txt`           | detect     |

mod config;
mod detect;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

pub use config::{ReferenceMode, RunConfig};
pub use detect::{detect_dataset, references, Detection, ScoredRow, Split};

use crate::bde::{Thresholds, Verdict};
use crate::error::{arg_err, Error, Result};
use crate::features::{
    attach_labels, extract_daily, parse_logs, read_features, read_labels, split, synth_generate,
    BehaviorVector, Dataset, Label, ParseReport, SynthData,
};
use crate::qgan::{Checkpoint, EpochStats, Trainer};
use crate::qsim::GeneratorParams;

pub const FEATURES_FILE: &str = "features.csv";
pub const PARSE_REPORT_FILE: &str = "parse_report.txt";
pub const DETECTION_FILE: &str = "detection.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
const DAY_FORMAT: &str = "%Y-%m-%d";
const LOSS_HEADER: &str = "epoch,loss_g,loss_d,cross_entropy";
const DETECTION_HEADER: [&str; 11] = [
    "split", "user", "day", "R_d", "R_n", "d", "Th_d", "Th_f", "verdict", "label", "preclip_max",
];

pub fn loss_path(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir.join(format!("losses_k{}.csv", cfg.depth))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn header_notes(cfg: &RunConfig) -> String {
    cfg.notes().iter().map(|n| format!("# {n}\n")).collect()
}

/// Writes synthetic logs and labels into the input directory.
pub fn cmd_synth(cfg: &RunConfig) -> Result<SynthData> {
    cfg.validate()?;
    synth_generate(&cfg.synth_config(), &cfg.input_dir(), &cfg.notes())
}

#[derive(Clone, Debug)]
pub struct IngestOutcome {
    pub rows: Vec<BehaviorVector>,
    pub report: ParseReport,
}

/// Parses the log directory into daily feature vectors. `labels.csv` in
/// the same directory, when present, supplies ground truth.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<IngestOutcome> {
    cfg.validate()?;
    let dir = cfg.input_dir();
    let (events, report) = parse_logs(&dir)?;
    let mut rows = extract_daily(&events, cfg.working_hours);
    let labels_path = dir.join("labels.csv");
    if labels_path.exists() {
        attach_labels(&mut rows, &read_labels(&labels_path)?);
    }
    ensure_dir(&cfg.out_dir)?;
    crate::features::write_features(&cfg.out_dir.join(FEATURES_FILE), &rows, &cfg.notes())?;
    write_text(
        &cfg.out_dir.join(PARSE_REPORT_FILE),
        &(header_notes(cfg) + &report.to_text()),
    )?;
    Ok(IngestOutcome { rows, report })
}

/// Rows of the configured user, or of the first user in sorted order.
pub fn select_user(rows: &[BehaviorVector], user: Option<&str>) -> Result<Vec<BehaviorVector>> {
    let user = match user {
        Some(u) => u.to_string(),
        None => rows
            .iter()
            .map(|r| r.user.as_str())
            .min()
            .ok_or_else(|| arg_err!("feature file has no rows"))?
            .to_string(),
    };
    let picked: Vec<BehaviorVector> = rows.iter().filter(|r| r.user == user).cloned().collect();
    if picked.is_empty() {
        return Err(arg_err!("user '{user}' has no feature rows"));
    }
    Ok(picked)
}

/// Loads `features.csv`, picks the user and splits train/test.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let rows = read_features(&cfg.out_dir.join(FEATURES_FILE))?;
    let rows = select_user(&rows, cfg.user.as_deref())?;
    split(&rows, cfg.train_days, cfg.test_days)
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Every epoch of the run so far, including epochs restored on resume.
    pub epochs: Vec<EpochStats>,
    pub params: GeneratorParams,
    pub checkpoint: PathBuf,
    pub losses: PathBuf,
}

fn write_losses(path: &Path, cfg: &RunConfig, epochs: &[EpochStats]) -> Result<()> {
    let mut s = header_notes(cfg);
    s.push_str(LOSS_HEADER);
    s.push('\n');
    for e in epochs {
        let _ = writeln!(s, "{},{},{},{}", e.epoch, e.loss_g, e.loss_d, e.cross_entropy);
    }
    write_text(path, &s)
}

/// Reads a loss CSV written by [`cmd_train`].
pub fn read_losses(path: &Path) -> Result<Vec<EpochStats>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !seen_header {
            if line != LOSS_HEADER {
                return Err(Error::schema(path, ln, format!("expected header '{LOSS_HEADER}'")));
            }
            seen_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::schema(path, ln, format!("malformed loss row '{line}'"));
        if f.len() != 4 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        out.push(EpochStats {
            epoch: f[0].parse().map_err(|_| bad())?,
            loss_g: num(f[1])?,
            loss_d: num(f[2])?,
            cross_entropy: num(f[3])?,
        });
    }
    if !seen_header {
        return Err(Error::schema(path, 1, "missing header"));
    }
    Ok(out)
}

/// Trains the generator on the training window for `epochs` epochs in
/// total. With `resume`, an existing checkpoint is continued up to that
/// total; training hyperparameters must match the checkpoint.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    let data = ds.train_simplex();
    let ckpt_path = cfg.checkpoint_path();
    let losses = loss_path(cfg);
    let (mut trainer, mut history) = if cfg.resume && ckpt_path.exists() {
        let (mut ckpt, _) = Checkpoint::load(&ckpt_path)?;
        ckpt.cfg.epochs = cfg.epochs;
        if ckpt.cfg != cfg.train_config() {
            return Err(Error::Config(format!(
                "{} was trained with different hyperparameters",
                ckpt_path.display()
            )));
        }
        let done = ckpt.epochs_done;
        let history: Vec<EpochStats> = read_losses(&losses)?
            .into_iter()
            .filter(|e| e.epoch <= done)
            .collect();
        if history.len() != done {
            return Err(arg_err!(
                "{} holds {} epochs but the checkpoint has {done}",
                losses.display(),
                history.len()
            ));
        }
        (Trainer::resume(data, ckpt)?, history)
    } else {
        (Trainer::new(data, cfg.train_config())?, Vec::new())
    };
    let remaining = cfg.epochs.saturating_sub(trainer.epochs_done());
    history.extend(trainer.run(remaining)?);

    ensure_dir(&cfg.out_dir)?;
    if let Some(parent) = ckpt_path.parent() {
        ensure_dir(parent)?;
    }
    trainer.checkpoint().save(&ckpt_path, &cfg.notes())?;
    write_losses(&losses, cfg, &history)?;
    Ok(TrainOutcome {
        epochs: history,
        params: trainer.params().clone(),
        checkpoint: ckpt_path,
        losses,
    })
}

fn fmt_label(l: Option<Label>) -> &'static str {
    l.map(|l| l.as_str()).unwrap_or("")
}

fn write_detection(path: &Path, cfg: &RunConfig, det: &Detection) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    out.write_all(header_notes(cfg).as_bytes())
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DETECTION_HEADER).map_err(|e| Error::csv(path, e))?;
    let th = &det.thresholds;
    for r in &det.rows {
        w.write_record([
            r.split.as_str().to_string(),
            r.user.clone(),
            r.day.format(DAY_FORMAT).to_string(),
            r.r_d.to_string(),
            r.r_n.to_string(),
            r.d.to_string(),
            th.th_d.to_string(),
            th.th_f.to_string(),
            r.verdict.as_str().to_string(),
            fmt_label(r.label).to_string(),
            r.preclip_max.to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn summary_text(cfg: &RunConfig, det: &Detection) -> String {
    let mut s = header_notes(cfg);
    let user = det.rows.first().map(|r| r.user.as_str()).unwrap_or("");
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("user", user.to_string());
    kv("train_records", det.rows.iter().filter(|r| r.split == Split::Train).count().to_string());
    kv("excluded_abnormal_train", det.excluded.to_string());
    kv("test_records", det.test_rows().count().to_string());
    kv("lambda", det.thresholds.lambda.to_string());
    kv("th_d", det.thresholds.th_d.to_string());
    kv("th_f", det.thresholds.th_f.to_string());
    for v in Verdict::ALL {
        kv(&format!("count_{}", v.as_str()), det.verdict_count(v).to_string());
    }
    kv("train_abnormal_verdicts", det.train_abnormal().to_string());
    match det.confusion {
        Some(c) => {
            kv("tp", c.tp.to_string());
            kv("tn", c.tn.to_string());
            kv("fp", c.fp.to_string());
            kv("fn", c.fn_.to_string());
            kv("accuracy", c.accuracy().to_string());
        }
        None => kv("accuracy", "unlabeled".to_string()),
    }
    kv("bde_accuracy", det.bde_accuracy.to_string());
    kv(
        "bde_final_loss",
        det.bde_losses.last().map(|l| l.to_string()).unwrap_or_default(),
    );
    s
}

/// Scores every day against the trained generator and writes the
/// per-day detection table and a summary.
pub fn cmd_detect(cfg: &RunConfig) -> Result<Detection> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    let (ckpt, _) = Checkpoint::load(&cfg.checkpoint_path())?;
    let det = detect_dataset(&ds, &ckpt.params, ckpt.cfg.entangler, cfg)?;
    ensure_dir(&cfg.out_dir)?;
    write_detection(&cfg.out_dir.join(DETECTION_FILE), cfg, &det)?;
    write_text(&cfg.out_dir.join(SUMMARY_FILE), &summary_text(cfg, &det))?;
    Ok(det)
}

/// Reads a detection table written by [`cmd_detect`]. Thresholds come from
/// the first row; `None` when the table has no rows.
pub fn read_detection(path: &Path) -> Result<(Vec<ScoredRow>, Option<Thresholds>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let header = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.iter().ne(DETECTION_HEADER) {
        return Err(Error::schema(
            path,
            header.position().map_or(1, |p| p.line() as usize),
            format!("expected header '{}'", DETECTION_HEADER.join(",")),
        ));
    }
    let mut rows = Vec::new();
    let mut th = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::schema(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |field: &str, v: &str| Error::schema(path, line, format!("bad {field} '{v}'"));
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| bad(DETECTION_HEADER[i], &rec[i]))
        };
        let label = match &rec[9] {
            "" => None,
            s => Some(Label::parse(s).ok_or_else(|| bad("label", s))?),
        };
        let row = ScoredRow {
            split: Split::parse(&rec[0]).ok_or_else(|| bad("split", &rec[0]))?,
            user: rec[1].to_string(),
            day: NaiveDate::parse_from_str(&rec[2], DAY_FORMAT).map_err(|_| bad("day", &rec[2]))?,
            r_d: num(3)?,
            r_n: num(4)?,
            d: num(5)?,
            verdict: Verdict::parse(&rec[8]).ok_or_else(|| bad("verdict", &rec[8]))?,
            label,
            preclip_max: num(10)?,
        };
        if th.is_none() {
            th = Some(Thresholds {
                th_d: num(6)?,
                th_f: num(7)?,
                lambda: f64::NAN,
            });
        }
        rows.push(row);
    }
    Ok((rows, th))
}

/// Human-readable digest of the detection table: verdict counts, accuracy,
/// thresholds and the ten highest-scoring test days.
pub fn cmd_report(cfg: &RunConfig) -> Result<String> {
    let (rows, th) = read_detection(&cfg.out_dir.join(DETECTION_FILE))?;
    let test: Vec<&ScoredRow> = rows.iter().filter(|r| r.split == Split::Test).collect();
    if test.is_empty() {
        return Ok("no test records\n".to_string());
    }
    let mut s = String::new();
    let _ = writeln!(s, "user {}", test[0].user);
    let _ = writeln!(s, "test records {}", test.len());
    for v in Verdict::ALL {
        let n = test.iter().filter(|r| r.verdict == v).count();
        let _ = writeln!(s, "{:<12}{n}", v.as_str());
    }
    match detect::confusion_of(test.iter().copied())? {
        Some(c) => {
            let _ = writeln!(
                s,
                "accuracy {:.4} (tp {}, tn {}, fp {}, fn {})",
                c.accuracy(),
                c.tp,
                c.tn,
                c.fp,
                c.fn_
            );
        }
        None => s.push_str("accuracy n/a (unlabeled test rows)\n"),
    }
    if let Some(th) = th {
        let _ = writeln!(s, "Th_d {:.6}  Th_f {:.6}", th.th_d, th.th_f);
    }
    let mut top = test.clone();
    top.sort_by(|a, b| b.d.total_cmp(&a.d).then(a.day.cmp(&b.day)));
    s.push_str("top days by score:\n");
    for r in top.iter().take(10) {
        let _ = writeln!(
            s,
            "  {}  d {:.6}  {:<12}{}",
            r.day.format(DAY_FORMAT),
            r.d,
            r.verdict.as_str(),
            fmt_label(r.label)
        );
    }
    Ok(s)
}
