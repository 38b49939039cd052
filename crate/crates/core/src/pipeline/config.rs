use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::bde::{BdeConfig, DEFAULT_LAMBDA};
use crate::error::{Error, Result};
use crate::features::{SynthConfig, WorkingHours, N_FEATURES};
use crate::qgan::TrainConfig;
use crate::qsim::Entangler;

/// How the generator's normal-behavior reference is formed at scoring time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceMode {
    /// The exact output distribution `p_θ`.
    Exact,
    /// The closest of `samples` measured histograms of `shots` shots each.
    Nearest,
}

impl ReferenceMode {
    fn name(self) -> &'static str {
        match self {
            ReferenceMode::Exact => "exact",
            ReferenceMode::Nearest => "nearest",
        }
    }
}

/// Every knob of a pipeline run. Read from a flat `key = value` file; CLI
/// flags override file values.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    /// Log directory; defaults to `<out_dir>/logs`.
    pub input_dir: Option<PathBuf>,
    /// Checkpoint file; defaults to `<out_dir>/checkpoint_k<K>.qbde`.
    pub checkpoint: Option<PathBuf>,
    pub n_qubits: usize,
    pub depth: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr_generator: f64,
    pub lr_discriminator: f64,
    pub hidden: (usize, usize),
    pub entangler: Entangler,
    pub resume: bool,
    pub lambda: f64,
    pub working_hours: WorkingHours,
    pub seed: u64,
    pub reference: ReferenceMode,
    pub samples: usize,
    pub shots: usize,
    pub user: Option<String>,
    pub train_days: usize,
    pub test_days: usize,
    pub bde_epochs: usize,
    pub bde_batch_size: usize,
    pub bde_lr: f64,
    pub synth_users: usize,
    pub synth_days: usize,
    pub anomaly_rate: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let b = BdeConfig::default();
        let s = SynthConfig::default();
        Self {
            out_dir: PathBuf::from("out"),
            input_dir: None,
            checkpoint: None,
            n_qubits: 4,
            depth: t.depth,
            batch_size: t.batch_size,
            epochs: t.epochs,
            lr_generator: t.lr_generator,
            lr_discriminator: t.lr_discriminator,
            hidden: t.hidden,
            entangler: t.entangler,
            resume: false,
            lambda: DEFAULT_LAMBDA,
            working_hours: WorkingHours::default(),
            seed: 0,
            reference: ReferenceMode::Exact,
            samples: 16,
            shots: 1024,
            user: None,
            train_days: 200,
            test_days: 100,
            bde_epochs: b.epochs,
            bde_batch_size: b.batch_size,
            bde_lr: b.lr,
            synth_users: s.n_users,
            synth_days: s.n_days,
            anomaly_rate: s.anomaly_rate,
        }
    }
}

fn cfg_err(line: usize, key: &str, v: &str) -> Error {
    Error::Config(format!("line {line}: bad value '{v}' for '{key}'"))
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.set_at(0, key, value)
    }

    fn set_at(&mut self, line: usize, key: &str, v: &str) -> Result<()> {
        let bad = || cfg_err(line, key, v);
        macro_rules! num {
            () => {
                v.parse().map_err(|_| bad())?
            };
        }
        match key {
            "out_dir" => self.out_dir = PathBuf::from(v),
            "input_dir" => self.input_dir = Some(PathBuf::from(v)),
            "checkpoint" => self.checkpoint = Some(PathBuf::from(v)),
            "n_qubits" => self.n_qubits = num!(),
            "k" | "depth" => self.depth = num!(),
            "batch_size" => self.batch_size = num!(),
            "epochs" => self.epochs = num!(),
            "lr_generator" => self.lr_generator = num!(),
            "lr_discriminator" => self.lr_discriminator = num!(),
            "hidden" => {
                let (a, b) = v.split_once(',').ok_or_else(bad)?;
                self.hidden = (
                    a.trim().parse().map_err(|_| bad())?,
                    b.trim().parse().map_err(|_| bad())?,
                );
            }
            "entangler" => self.entangler = Entangler::parse(v)?,
            "resume" => self.resume = parse_bool(v).ok_or_else(bad)?,
            "lambda" => self.lambda = num!(),
            "working_hours" => self.working_hours = WorkingHours::parse(v)?,
            "seed" => self.seed = num!(),
            "reference" => {
                self.reference = match v {
                    "exact" => ReferenceMode::Exact,
                    "nearest" => ReferenceMode::Nearest,
                    _ => return Err(bad()),
                }
            }
            "samples" => self.samples = num!(),
            "shots" => self.shots = num!(),
            "user" => self.user = if v.is_empty() { None } else { Some(v.to_string()) },
            "train_days" => self.train_days = num!(),
            "test_days" => self.test_days = num!(),
            "bde_epochs" => self.bde_epochs = num!(),
            "bde_batch_size" => self.bde_batch_size = num!(),
            "bde_lr" => self.bde_lr = num!(),
            "synth_users" => self.synth_users = num!(),
            "synth_days" => self.synth_days = num!(),
            "anomaly_rate" => self.anomaly_rate = num!(),
            _ => return Err(Error::Config(format!("line {line}: unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Parses a config document: `key = value` per line, `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set_at(i + 1, k.trim(), v.trim().trim_matches('"'))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if self.n_qubits == 0 || self.n_qubits > 12 || 1usize << self.n_qubits != N_FEATURES {
            return Err(Error::Config(format!(
                "2^n_qubits must equal the {N_FEATURES} behavior features (n_qubits = {})",
                self.n_qubits
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if self.batch_size == 0 || self.bde_batch_size == 0 {
            return Err(Error::Config("batch sizes must be at least 1".into()));
        }
        if !(self.lr_generator > 0.0 && self.lr_discriminator > 0.0 && self.bde_lr > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if self.reference == ReferenceMode::Nearest && (self.samples == 0 || self.shots == 0) {
            return Err(Error::Config("nearest reference needs samples and shots >= 1".into()));
        }
        Ok(())
    }

    pub fn input_dir(&self) -> PathBuf {
        self.input_dir.clone().unwrap_or_else(|| self.out_dir.join("logs"))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.out_dir.join(format!("checkpoint_k{}.qbde", self.depth)))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            lr_generator: self.lr_generator,
            lr_discriminator: self.lr_discriminator,
            depth: self.depth,
            seed: self.seed,
            hidden: self.hidden,
            entangler: self.entangler,
            ..TrainConfig::default()
        }
    }

    pub fn bde_config(&self) -> BdeConfig {
        BdeConfig {
            epochs: self.bde_epochs,
            batch_size: self.bde_batch_size,
            lr: self.bde_lr,
            seed: self.seed,
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            n_users: self.synth_users,
            n_days: self.synth_days,
            anomaly_rate: self.anomaly_rate,
            seed: self.seed,
            ..SynthConfig::default()
        }
    }

    /// Canonical `key = value` listing of every parameter, paths excluded.
    /// Floats use shortest round-trip formatting.
    pub fn canonical_params(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("n_qubits", self.n_qubits.to_string());
        kv("k", self.depth.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("epochs", self.epochs.to_string());
        kv("lr_generator", self.lr_generator.to_string());
        kv("lr_discriminator", self.lr_discriminator.to_string());
        kv("hidden", format!("{},{}", self.hidden.0, self.hidden.1));
        kv("entangler", self.entangler.name().to_string());
        kv("lambda", self.lambda.to_string());
        kv("working_hours", self.working_hours.to_config_string());
        kv("seed", self.seed.to_string());
        kv("reference", self.reference.name().to_string());
        kv("samples", self.samples.to_string());
        kv("shots", self.shots.to_string());
        kv("user", self.user.clone().unwrap_or_default());
        kv("train_days", self.train_days.to_string());
        kv("test_days", self.test_days.to_string());
        kv("bde_epochs", self.bde_epochs.to_string());
        kv("bde_batch_size", self.bde_batch_size.to_string());
        kv("bde_lr", self.bde_lr.to_string());
        kv("synth_users", self.synth_users.to_string());
        kv("synth_days", self.synth_days.to_string());
        kv("anomaly_rate", self.anomaly_rate.to_string());
        s
    }

    /// SHA-256 of [`RunConfig::canonical_params`], hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_params().as_bytes()))
    }

    pub(crate) fn notes(&self) -> Vec<String> {
        vec![format!("config-digest {}", self.digest())]
    }
}
