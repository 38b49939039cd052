//! Behavior detection and evaluation: reconstruction errors against the
//! generator's learned profile, the weighted behavior score, thresholds and
//! three-level verdicts.

mod net;

use std::fmt;

pub use net::{
    bce_loss, bde_accuracy, train_bde, BdeConfig, BdeFit, BdeNet, EMBED_LEN, INPUT_LEN, N_PARAMS,
};

use crate::error::{arg_err, Result};
use crate::qsim::ProbVector;

/// Default weight of the embedding-space error in the behavior score.
pub const DEFAULT_LAMBDA: f64 = 0.1;

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `(R_d, R_n)`: L1 distance to the reference in input space and in the
/// scoring network's embedding space.
pub fn recon_errors(x: &ProbVector, reference: &ProbVector, net: &BdeNet) -> Result<(f64, f64)> {
    if x.len() != reference.len() {
        return Err(arg_err!("vector lengths differ: {} vs {}", x.len(), reference.len()));
    }
    let r_d = l1(x.as_slice(), reference.as_slice());
    let r_n = l1(
        &net.embedding(x.as_slice())?,
        &net.embedding(reference.as_slice())?,
    );
    Ok((r_d, r_n))
}

/// Reconstruction errors against the candidate closest to `x` in L1.
pub fn recon_errors_nearest(
    x: &ProbVector,
    candidates: &[ProbVector],
    net: &BdeNet,
) -> Result<(f64, f64)> {
    let best = candidates
        .iter()
        .map(|c| (l1(x.as_slice(), c.as_slice()), c))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| arg_err!("no reference candidates"))?
        .1;
    recon_errors(x, best, net)
}

/// `d = (1 − λ)·R_d + λ·R_n`.
pub fn behavior_score(r_d: f64, r_n: f64, lambda: f64) -> f64 {
    (1.0 - lambda) * r_d + lambda * r_n
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub th_d: f64,
    pub th_f: f64,
    pub lambda: f64,
}

/// `Th_d` is the largest training score and `Th_f = 2·Th_d`.
pub fn fit_thresholds(train_scores: &[f64], lambda: f64) -> Result<Thresholds> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(arg_err!("lambda {lambda} outside [0, 1]"));
    }
    let th_d = train_scores
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or_else(|| arg_err!("cannot fit thresholds on zero scores"))?;
    Ok(Thresholds {
        th_d,
        th_f: 2.0 * th_d,
        lambda,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Normal,
    LowThreat,
    HighThreat,
}

impl Verdict {
    pub const ALL: [Verdict; 3] = [Verdict::Normal, Verdict::LowThreat, Verdict::HighThreat];

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Normal => "Normal",
            Verdict::LowThreat => "Low_threat",
            Verdict::HighThreat => "High_threat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Verdict::ALL.into_iter().find(|v| v.as_str() == s)
    }

    pub fn is_abnormal(self) -> bool {
        self != Verdict::Normal
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `d ≤ Th_d` is Normal, `Th_d < d ≤ Th_f` Low_threat, above that
/// High_threat.
pub fn classify(d: f64, th: &Thresholds) -> Verdict {
    if d <= th.th_d {
        Verdict::Normal
    } else if d <= th.th_f {
        Verdict::LowThreat
    } else {
        Verdict::HighThreat
    }
}

/// Binary confusion counts with "abnormal" as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_pairs(predicted_abnormal: &[bool], truly_abnormal: &[bool]) -> Result<Self> {
        if predicted_abnormal.len() != truly_abnormal.len() {
            return Err(arg_err!(
                "{} verdicts vs {} labels",
                predicted_abnormal.len(),
                truly_abnormal.len()
            ));
        }
        let mut c = Confusion::default();
        for (&p, &t) in predicted_abnormal.iter().zip(truly_abnormal) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// `(TP + TN) / (TP + TN + FP + FN)`; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            (self.tp + self.tn) as f64 / self.total() as f64
        }
    }
}

/// Binary accuracy of verdicts (Low and High both count as abnormal).
pub fn accuracy(verdicts: &[Verdict], truly_abnormal: &[bool]) -> Result<f64> {
    let pred: Vec<bool> = verdicts.iter().map(|v| v.is_abnormal()).collect();
    Ok(Confusion::from_pairs(&pred, truly_abnormal)?.accuracy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recon_error_cases() {
        let net = BdeNet::init(&mut ChaCha8Rng::seed_from_u64(0));
        let x = ProbVector::new((1..=16).map(|i| i as f64 / 136.0).collect()).unwrap();
        assert_eq!(recon_errors(&x, &x, &net).unwrap(), (0.0, 0.0));
        let (r_d, _) = recon_errors(
            &ProbVector::point_mass(16, 0),
            &ProbVector::point_mass(16, 1),
            &net,
        )
        .unwrap();
        assert_eq!(r_d, 2.0);
        let (r_d, r_n) = recon_errors(&x, &ProbVector::uniform(16), &BdeNet::zeros()).unwrap();
        assert!(r_d > 0.0);
        assert_eq!(r_n, 0.0);
    }

    #[test]
    fn nearest_reference_picks_closest() {
        let net = BdeNet::zeros();
        let x = ProbVector::point_mass(16, 3);
        let cands = [ProbVector::uniform(16), ProbVector::point_mass(16, 3)];
        assert_eq!(recon_errors_nearest(&x, &cands, &net).unwrap().0, 0.0);
        assert!(recon_errors_nearest(&x, &[], &net).is_err());
    }

    #[test]
    fn score_cases() {
        assert_eq!(behavior_score(0.4, 0.8, 0.0), 0.4);
        assert_eq!(behavior_score(0.4, 0.8, 1.0), 0.8);
        assert!((behavior_score(0.4, 0.8, 0.1) - 0.44).abs() < 1e-15);
    }

    #[test]
    fn threshold_cases() {
        let t = fit_thresholds(&[0.1, 0.3, 0.2], 0.1).unwrap();
        assert_eq!((t.th_d, t.th_f), (0.3, 0.6));
        let t = fit_thresholds(&[0.0], 0.1).unwrap();
        assert_eq!((t.th_d, t.th_f), (0.0, 0.0));
        let t = fit_thresholds(&[0.7; 4], 0.1).unwrap();
        assert_eq!((t.th_d, t.th_f), (0.7, 1.4));
        assert!(fit_thresholds(&[], 0.1).is_err());
        assert!(fit_thresholds(&[1.0], 1.5).is_err());
    }

    #[test]
    fn classification_bands() {
        let t = fit_thresholds(&[0.2], 0.1).unwrap();
        assert_eq!(classify(0.2, &t), Verdict::Normal);
        assert_eq!(classify(0.3, &t), Verdict::LowThreat);
        assert_eq!(classify(0.4, &t), Verdict::LowThreat);
        assert_eq!(classify(0.6, &t), Verdict::HighThreat);
    }

    #[test]
    fn accuracy_cases() {
        let v = [Verdict::Normal, Verdict::HighThreat, Verdict::LowThreat];
        assert_eq!(accuracy(&v, &[false, true, true]).unwrap(), 1.0);
        let c = Confusion::from_pairs(&[true, false, true, false], &[true, false, false, true]).unwrap();
        assert_eq!((c.tp, c.tn, c.fp, c.fn_), (1, 1, 1, 1));
        assert_eq!(c.accuracy(), 0.5);
        assert!(accuracy(&v, &[true]).is_err());
    }

    #[test]
    fn verdict_names_round_trip() {
        for v in Verdict::ALL {
            assert_eq!(Verdict::parse(v.as_str()), Some(v));
        }
        assert_eq!(Verdict::parse("normal"), None);
    }
}
