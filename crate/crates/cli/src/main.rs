use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qbde_core::bde::Verdict;
use qbde_core::pipeline::{self, RunConfig};
use qbde_core::Result;

#[derive(Parser)]
#[command(name = "qbde", version, about = "Quantum-generator behavior modeling and insider-threat scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic CERT-style logs and ground-truth labels
    Synth(Common),
    /// Parse logs into daily behavior vectors
    Ingest(Common),
    /// Train the quantum generator adversarially
    Train(Common),
    /// Score days, fit thresholds and classify
    Detect(Common),
    /// Print a summary of the last detection run
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Circuit depth K
    #[arg(long)]
    k: Option<usize>,
    /// Weight of the embedding error in the behavior score
    #[arg(long)]
    lambda: Option<f64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(k) = self.k {
            cfg.depth = k;
        }
        if let Some(l) = self.lambda {
            cfg.lambda = l;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(c) => {
            let cfg = c.resolve()?;
            let data = pipeline::cmd_synth(&cfg)?;
            let abnormal = data.counts.iter().filter(|r| r.is_abnormal()).count();
            println!(
                "wrote {} events, {} user-days ({abnormal} abnormal) to {}",
                data.events.len(),
                data.counts.len(),
                cfg.input_dir().display()
            );
        }
        Command::Ingest(c) => {
            let cfg = c.resolve()?;
            let out = pipeline::cmd_ingest(&cfg)?;
            print!("{}", out.report.to_text());
            println!("{} user-days written to {}", out.rows.len(), cfg.out_dir.display());
        }
        Command::Train(c) => {
            let cfg = c.resolve()?;
            let out = pipeline::cmd_train(&cfg)?;
            match out.epochs.last() {
                Some(e) => println!(
                    "epoch {}: L_G {:.6} L_D {:.6} cross-entropy {:.6}",
                    e.epoch, e.loss_g, e.loss_d, e.cross_entropy
                ),
                None => println!("no epochs run; checkpoint holds initial parameters"),
            }
            println!("checkpoint {}", out.checkpoint.display());
            println!("losses {}", out.losses.display());
        }
        Command::Detect(c) => {
            let cfg = c.resolve()?;
            let det = pipeline::cmd_detect(&cfg)?;
            println!(
                "Th_d {:.6} Th_f {:.6} lambda {}",
                det.thresholds.th_d, det.thresholds.th_f, det.thresholds.lambda
            );
            for v in Verdict::ALL {
                println!("{:<12}{}", v.as_str(), det.verdict_count(v));
            }
            if let Some(c) = det.confusion {
                println!("accuracy {:.4}", c.accuracy());
            }
        }
        Command::Report(c) => {
            let cfg = c.resolve()?;
            print!("{}", pipeline::cmd_report(&cfg)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
