use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ReferenceMode, RunConfig};
use crate::bde::{
    behavior_score, classify, fit_thresholds, recon_errors_nearest, train_bde, BdeNet, Confusion,
    Thresholds, Verdict,
};
use crate::error::Result;
use crate::features::{Dataset, Label, NormalizedRow};
use crate::qsim::{generator_probs, run_generator_circuit, Entangler, GeneratorParams, ProbVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredRow {
    pub split: Split,
    pub user: String,
    pub day: NaiveDate,
    pub r_d: f64,
    pub r_n: f64,
    pub d: f64,
    pub verdict: Verdict,
    pub label: Option<Label>,
    pub preclip_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    /// Training rows first, then test rows, each in day order.
    pub rows: Vec<ScoredRow>,
    pub thresholds: Thresholds,
    pub net: BdeNet,
    /// Scoring-network loss after each epoch.
    pub bde_losses: Vec<f64>,
    pub bde_accuracy: f64,
    /// Over test rows; `None` when any test row is unlabeled.
    pub confusion: Option<Confusion>,
    pub excluded: usize,
}

impl Detection {
    pub fn test_rows(&self) -> impl Iterator<Item = &ScoredRow> {
        self.rows.iter().filter(|r| r.split == Split::Test)
    }

    pub fn train_abnormal(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.split == Split::Train && r.verdict.is_abnormal())
            .count()
    }

    pub fn verdict_count(&self, v: Verdict) -> usize {
        self.test_rows().filter(|r| r.verdict == v).count()
    }
}

/// Reference distributions: `p_θ` itself, or `samples` measured histograms.
pub fn references(
    params: &GeneratorParams,
    entangler: Entangler,
    cfg: &RunConfig,
) -> Result<Vec<ProbVector>> {
    match cfg.reference {
        ReferenceMode::Exact => Ok(vec![generator_probs(params, entangler)]),
        ReferenceMode::Nearest => {
            let state = run_generator_circuit(params, entangler);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(7);
            (0..cfg.samples)
                .map(|_| ProbVector::from_counts(&state.sample(cfg.shots, &mut rng)?))
                .collect()
        }
    }
}

/// Trains the scoring network, fits thresholds on the training rows and
/// assigns verdicts to every row.
pub fn detect_dataset(
    ds: &Dataset,
    params: &GeneratorParams,
    entangler: Entangler,
    cfg: &RunConfig,
) -> Result<Detection> {
    let real = ds.train_simplex();
    let refs = references(params, entangler, cfg)?;
    let generated = match cfg.reference {
        ReferenceMode::Exact => vec![refs[0].clone(); real.len()],
        ReferenceMode::Nearest => refs.clone(),
    };
    let fit = train_bde(&real, &generated, &cfg.bde_config())?;

    let score = |row: &NormalizedRow| -> Result<(f64, f64, f64)> {
        let (r_d, r_n) = recon_errors_nearest(&row.simplex().probs, &refs, &fit.net)?;
        Ok((r_d, r_n, behavior_score(r_d, r_n, cfg.lambda)))
    };
    let train_scores = ds.train.iter().map(&score).collect::<Result<Vec<_>>>()?;
    let test_scores = ds.test.iter().map(&score).collect::<Result<Vec<_>>>()?;
    let ds_only: Vec<f64> = train_scores.iter().map(|s| s.2).collect();
    let thresholds = fit_thresholds(&ds_only, cfg.lambda)?;

    let mk = |split, row: &NormalizedRow, (r_d, r_n, d): (f64, f64, f64)| ScoredRow {
        split,
        user: row.user.clone(),
        day: row.day,
        r_d,
        r_n,
        d,
        verdict: classify(d, &thresholds),
        label: row.label,
        preclip_max: row.preclip_max(),
    };
    let mut rows: Vec<ScoredRow> = ds
        .train
        .iter()
        .zip(train_scores)
        .map(|(r, s)| mk(Split::Train, r, s))
        .collect();
    rows.extend(ds.test.iter().zip(test_scores).map(|(r, s)| mk(Split::Test, r, s)));

    let confusion = confusion_of(rows.iter().filter(|r| r.split == Split::Test))?;
    Ok(Detection {
        rows,
        thresholds,
        net: fit.net,
        bde_losses: fit.losses,
        bde_accuracy: fit.accuracy,
        confusion,
        excluded: ds.excluded.len(),
    })
}

pub(crate) fn confusion_of<'a>(rows: impl Iterator<Item = &'a ScoredRow>) -> Result<Option<Confusion>> {
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    for r in rows {
        match r.label {
            Some(l) => {
                pred.push(r.verdict.is_abnormal());
                truth.push(l == Label::Abnormal);
            }
            None => return Ok(None),
        }
    }
    Confusion::from_pairs(&pred, &truth).map(Some)
}
