//! Text checkpoint of a training run.
//!
//! Line-oriented `key value…` records after a version line. Every float is
//! written as the 16-hex-digit IEEE-754 bit pattern, so a save/load cycle
//! restores values bit-for-bit. Lines starting with `#` are notes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::optim::Adam;
use crate::qsim::{Entangler, GeneratorParams};

use super::{DiscriminatorNet, TrainConfig};

pub const CHECKPOINT_HEADER: &str = "qbde-ckpt-v1";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub cfg: TrainConfig,
    pub params: GeneratorParams,
    pub net: DiscriminatorNet,
    pub opt_g: Adam,
    pub opt_d: Adam,
    pub rng_word_pos: u128,
    pub epochs_done: usize,
}

fn hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn hex_list(vals: &[f64]) -> String {
    let mut s = vals.len().to_string();
    for v in vals {
        s.push(' ');
        s.push_str(&hex(*v));
    }
    s
}

impl Checkpoint {
    pub fn to_text(&self, notes: &[String]) -> String {
        let c = &self.cfg;
        let mut out = format!("{CHECKPOINT_HEADER}\n");
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} {v}");
        };
        for n in notes {
            line("#", n.clone());
        }
        line("n_qubits", self.params.n_qubits().to_string());
        line("depth", c.depth.to_string());
        line("entangler", c.entangler.name().to_string());
        line("seed", c.seed.to_string());
        line("batch_size", c.batch_size.to_string());
        line("epochs", c.epochs.to_string());
        line("lr_generator", hex(c.lr_generator));
        line("lr_discriminator", hex(c.lr_discriminator));
        line("beta1", hex(c.beta1));
        line("beta2", hex(c.beta2));
        line("adam_eps", hex(c.adam_eps));
        line("hidden", format!("{} {}", c.hidden.0, c.hidden.1));
        line("epochs_done", self.epochs_done.to_string());
        line("rng_word_pos", self.rng_word_pos.to_string());
        line("generator.angles", hex_list(self.params.angles()));
        let sizes: Vec<String> = self.net.sizes().iter().map(|s| s.to_string()).collect();
        line("disc.sizes", sizes.join(" "));
        line("disc.params", hex_list(self.net.params()));
        for (name, opt) in [("adam_g", &self.opt_g), ("adam_d", &self.opt_d)] {
            line(&format!("{name}.step"), opt.step.to_string());
            line(&format!("{name}.m"), hex_list(&opt.m));
            line(&format!("{name}.v"), hex_list(&opt.v));
        }
        out.push_str("end\n");
        out
    }

    /// Parses [`Checkpoint::to_text`] output; returns the checkpoint and its
    /// notes. `origin` is only used in error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<(Self, Vec<String>)> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim_end() == CHECKPOINT_HEADER => {}
            _ => {
                return Err(Error::schema(
                    origin,
                    1,
                    format!("missing '{CHECKPOINT_HEADER}' header"),
                ))
            }
        }
        let mut notes = Vec::new();
        let mut fields: Vec<(usize, String, String)> = Vec::new();
        let mut ended = false;
        for (i, raw) in lines {
            let l = raw.trim_end();
            if l.is_empty() {
                continue;
            }
            if let Some(n) = l.strip_prefix("# ") {
                notes.push(n.to_string());
                continue;
            }
            let (k, v) = l.split_once(' ').unwrap_or((l, ""));
            if k == "end" {
                ended = true;
                break;
            }
            fields.push((i + 1, k.to_string(), v.to_string()));
        }
        if !ended {
            return Err(Error::schema(origin, text.lines().count(), "truncated checkpoint: no 'end' record"));
        }
        let r = Reader { origin, fields };

        let n_qubits: usize = r.int("n_qubits")?;
        let depth: usize = r.int("depth")?;
        let hidden: Vec<usize> = r.ints("hidden")?;
        if hidden.len() != 2 {
            return Err(r.err("hidden", "expected two widths"));
        }
        let cfg = TrainConfig {
            batch_size: r.int("batch_size")?,
            epochs: r.int("epochs")?,
            lr_generator: r.float("lr_generator")?,
            lr_discriminator: r.float("lr_discriminator")?,
            depth,
            seed: r.int("seed")?,
            beta1: r.float("beta1")?,
            beta2: r.float("beta2")?,
            adam_eps: r.float("adam_eps")?,
            hidden: (hidden[0], hidden[1]),
            entangler: Entangler::parse(r.get("entangler")?.1)
                .map_err(|e| r.err("entangler", &e.to_string()))?,
        };
        let params = GeneratorParams::new(n_qubits, depth, r.floats("generator.angles")?)
            .map_err(|e| r.err("generator.angles", &e.to_string()))?;
        let net = DiscriminatorNet::from_parts(r.ints("disc.sizes")?, r.floats("disc.params")?)
            .map_err(|e| r.err("disc.params", &e.to_string()))?;
        let adam = |name: &str, len: usize, lr: f64| -> Result<Adam> {
            let mut opt = Adam::new(len, lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
            opt.step = r.int(&format!("{name}.step"))?;
            opt.m = r.floats(&format!("{name}.m"))?;
            opt.v = r.floats(&format!("{name}.v"))?;
            if opt.m.len() != len || opt.v.len() != len {
                return Err(r.err(&format!("{name}.m"), "optimizer state length mismatch"));
            }
            Ok(opt)
        };
        let opt_g = adam("adam_g", params.len(), cfg.lr_generator)?;
        let opt_d = adam("adam_d", net.params().len(), cfg.lr_discriminator)?;
        let ckpt = Checkpoint {
            rng_word_pos: r.int("rng_word_pos")?,
            epochs_done: r.int("epochs_done")?,
            cfg,
            params,
            net,
            opt_g,
            opt_d,
        };
        Ok((ckpt, notes))
    }

    pub fn save(&self, path: &Path, notes: &[String]) -> Result<()> {
        std::fs::write(path, self.to_text(notes)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<String>)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

struct Reader<'a> {
    origin: &'a Path,
    fields: Vec<(usize, String, String)>,
}

impl Reader<'_> {
    fn get(&self, key: &str) -> Result<(usize, &str)> {
        self.fields
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(l, _, v)| (*l, v.as_str()))
            .ok_or_else(|| Error::schema(self.origin, 0, format!("missing record '{key}'")))
    }

    fn err(&self, key: &str, msg: &str) -> Error {
        let line = self.get(key).map(|(l, _)| l).unwrap_or(0);
        Error::schema(self.origin, line, format!("{key}: {msg}"))
    }

    fn int<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let (line, v) = self.get(key)?;
        v.trim()
            .parse()
            .map_err(|_| Error::schema(self.origin, line, format!("{key}: bad integer '{v}'")))
    }

    fn ints(&self, key: &str) -> Result<Vec<usize>> {
        let (line, v) = self.get(key)?;
        v.split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::schema(self.origin, line, format!("{key}: bad integer '{t}'")))
            })
            .collect()
    }

    fn parse_hex(&self, key: &str, line: usize, t: &str) -> Result<f64> {
        u64::from_str_radix(t, 16)
            .ok()
            .filter(|_| t.len() == 16)
            .map(f64::from_bits)
            .ok_or_else(|| Error::schema(self.origin, line, format!("{key}: bad float word '{t}'")))
    }

    fn float(&self, key: &str) -> Result<f64> {
        let (line, v) = self.get(key)?;
        self.parse_hex(key, line, v.trim())
    }

    fn floats(&self, key: &str) -> Result<Vec<f64>> {
        let (line, v) = self.get(key)?;
        let mut toks = v.split_whitespace();
        let count: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::schema(self.origin, line, format!("{key}: missing length")))?;
        let vals = toks
            .map(|t| self.parse_hex(key, line, t))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != count {
            return Err(Error::schema(
                self.origin,
                line,
                format!("{key}: declared {count} values, found {}", vals.len()),
            ));
        }
        Ok(vals)
    }
}
