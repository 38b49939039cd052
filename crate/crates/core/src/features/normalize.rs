use chrono::NaiveDate;

use super::{BehaviorVector, Label, N_FEATURES};
use crate::error::{arg_err, Result};
use crate::qsim::ProbVector;

/// Per-feature minimum and maximum of the training rows.
#[derive(Clone, Debug, PartialEq)]
pub struct MinMax {
    pub min: [f64; N_FEATURES],
    pub max: [f64; N_FEATURES],
}

impl MinMax {
    pub fn fit(rows: &[BehaviorVector]) -> Result<Self> {
        if rows.is_empty() {
            return Err(arg_err!("cannot fit normalization on zero rows"));
        }
        let mut min = [f64::INFINITY; N_FEATURES];
        let mut max = [f64::NEG_INFINITY; N_FEATURES];
        for r in rows {
            for j in 0..N_FEATURES {
                min[j] = min[j].min(r.features[j]);
                max[j] = max[j].max(r.features[j]);
            }
        }
        Ok(Self { min, max })
    }

    /// `(x − min) / (max − min)` without clipping; constant features map to 0.
    pub fn scale(&self, features: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        let mut out = [0.0; N_FEATURES];
        for j in 0..N_FEATURES {
            let range = self.max[j] - self.min[j];
            out[j] = if range > 0.0 {
                (features[j] - self.min[j]) / range
            } else {
                0.0
            };
        }
        out
    }

    pub fn apply(&self, row: &BehaviorVector) -> NormalizedRow {
        let preclip = self.scale(&row.features);
        let mut values = preclip;
        for v in &mut values {
            *v = v.clamp(0.0, 1.0);
        }
        NormalizedRow {
            user: row.user.clone(),
            day: row.day,
            values,
            preclip,
            label: row.label,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedRow {
    pub user: String,
    pub day: NaiveDate,
    /// Normalized and clipped to `[0, 1]`.
    pub values: [f64; N_FEATURES],
    /// Normalized with training statistics, before clipping.
    pub preclip: [f64; N_FEATURES],
    pub label: Option<Label>,
}

impl NormalizedRow {
    pub fn preclip_max(&self) -> f64 {
        self.preclip.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn simplex(&self) -> SimplexPoint {
        to_simplex(&self.values)
    }
}

/// A feature vector projected onto the probability simplex, with the L1
/// scale it was divided by.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexPoint {
    pub probs: ProbVector,
    pub scale: f64,
}

/// `v / Σv`, or the uniform distribution when `Σv = 0`.
pub fn to_simplex(values: &[f64]) -> SimplexPoint {
    let scale: f64 = values.iter().sum();
    let probs = if scale > 0.0 {
        values.iter().map(|v| v / scale).collect()
    } else {
        vec![1.0 / values.len() as f64; values.len()]
    };
    SimplexPoint {
        probs: ProbVector::new(probs).expect("non-negative input normalizes onto the simplex"),
        scale,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// Normal rows of the training window.
    pub train: Vec<NormalizedRow>,
    pub test: Vec<NormalizedRow>,
    /// Abnormal-labeled rows dropped from the training window.
    pub excluded: Vec<(String, NaiveDate)>,
    pub scaler: MinMax,
}

impl Dataset {
    pub fn train_simplex(&self) -> Vec<ProbVector> {
        self.train.iter().map(|r| r.simplex().probs).collect()
    }
}

/// Chronological split of one user's rows: the first `train_days` rows form
/// the training window (abnormal rows excluded), the next `test_days` the
/// test set. Normalization is fit on the training rows only.
pub fn split(rows: &[BehaviorVector], train_days: usize, test_days: usize) -> Result<Dataset> {
    if train_days == 0 {
        return Err(arg_err!("training window must contain at least one day"));
    }
    if rows.len() < train_days + test_days {
        return Err(arg_err!(
            "{} rows cannot fill {train_days} training + {test_days} test days",
            rows.len()
        ));
    }
    let mut sorted: Vec<&BehaviorVector> = rows.iter().collect();
    sorted.sort_by(|a, b| (a.day, &a.user).cmp(&(b.day, &b.user)));
    let (window, rest) = sorted.split_at(train_days);
    let (train, excluded): (Vec<&BehaviorVector>, Vec<&BehaviorVector>) =
        window.iter().partition(|r| !r.is_abnormal());
    if train.is_empty() {
        return Err(arg_err!("training window contains no normal rows"));
    }
    let train_rows: Vec<BehaviorVector> = train.into_iter().cloned().collect();
    let scaler = MinMax::fit(&train_rows)?;
    Ok(Dataset {
        train: train_rows.iter().map(|r| scaler.apply(r)).collect(),
        test: rest[..test_days].iter().map(|r| scaler.apply(r)).collect(),
        excluded: excluded.iter().map(|r| (r.user.clone(), r.day)).collect(),
        scaler,
    })
}
