//! One-dimensional convolutional classifier over 16-feature vectors.
//!
//! ```text
//! x[16] → conv(1→4, k3, pad1) → relu → maxpool2 → [4×8]
//!       → conv(4→8, k3, pad1) → relu → maxpool2 → [8×4] = embedding[32]
//!       → dense(32→1) → sigmoid
//! ```

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{arg_err, Result};
use crate::optim::Adam;
use crate::qgan::OUTPUT_EPS;
use crate::qsim::ProbVector;

pub const INPUT_LEN: usize = 16;
pub const EMBED_LEN: usize = 32;

const C1: usize = 4;
const C2: usize = 8;
const KW: usize = 3;
const L1: usize = INPUT_LEN; // conv1 output length
const P1: usize = L1 / 2;
const P2: usize = P1 / 2;

// flat parameter layout
const W1: usize = 0;
const B1: usize = W1 + C1 * KW;
const W2: usize = B1 + C1;
const B2: usize = W2 + C2 * C1 * KW;
const W3: usize = B2 + C2;
const B3: usize = W3 + EMBED_LEN;
pub const N_PARAMS: usize = B3 + 1;

#[derive(Clone, Debug, PartialEq)]
pub struct BdeNet {
    params: Vec<f64>,
}

/// Intermediate values of one forward pass.
struct Trace {
    c1: [[f64; L1]; C1],
    p1: [[f64; P1]; C1],
    a1: [[usize; P1]; C1],
    c2: [[f64; P1]; C2],
    a2: [[usize; P2]; C2],
    embedding: [f64; EMBED_LEN],
    logit: f64,
}

fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

impl BdeNet {
    pub fn zeros() -> Self {
        Self {
            params: vec![0.0; N_PARAMS],
        }
    }

    /// Uniform He initialization of all weights, zero biases.
    pub fn init<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut net = Self::zeros();
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize| {
            let limit = (6.0 / fan_in as f64).sqrt();
            for p in &mut net.params[range] {
                *p = rng.random_range(-limit..=limit);
            }
        };
        fill(W1..B1, KW);
        fill(W2..B2, C1 * KW);
        fill(W3..B3, EMBED_LEN);
        net
    }

    pub fn from_params(params: Vec<f64>) -> Result<Self> {
        if params.len() != N_PARAMS {
            return Err(arg_err!("scoring network needs {N_PARAMS} parameters, got {}", params.len()));
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Weight of conv layer 1: output channel `o`, tap `k`.
    pub fn w1(&self, o: usize, k: usize) -> f64 {
        self.params[W1 + o * KW + k]
    }

    /// Weight of conv layer 2: output channel `o`, input channel `c`, tap `k`.
    pub fn w2(&self, o: usize, c: usize, k: usize) -> f64 {
        self.params[W2 + (o * C1 + c) * KW + k]
    }

    pub fn b1(&self, o: usize) -> f64 {
        self.params[B1 + o]
    }

    pub fn b2(&self, o: usize) -> f64 {
        self.params[B2 + o]
    }

    pub fn w3(&self, i: usize) -> f64 {
        self.params[W3 + i]
    }

    pub fn b3(&self) -> f64 {
        self.params[B3]
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let mut c1 = [[0.0; L1]; C1];
        for (o, row) in c1.iter_mut().enumerate() {
            for (t, out) in row.iter_mut().enumerate() {
                let mut s = self.b1(o);
                for k in 0..KW {
                    let pos = t + k;
                    if (1..=L1).contains(&pos) {
                        s += self.w1(o, k) * x[pos - 1];
                    }
                }
                *out = s;
            }
        }
        let mut p1 = [[0.0; P1]; C1];
        let mut a1 = [[0usize; P1]; C1];
        for o in 0..C1 {
            for t in 0..P1 {
                let (l, r) = (relu(c1[o][2 * t]), relu(c1[o][2 * t + 1]));
                (p1[o][t], a1[o][t]) = if l >= r { (l, 2 * t) } else { (r, 2 * t + 1) };
            }
        }
        let mut c2 = [[0.0; P1]; C2];
        for (o, row) in c2.iter_mut().enumerate() {
            for (t, out) in row.iter_mut().enumerate() {
                let mut s = self.b2(o);
                for (c, input) in p1.iter().enumerate() {
                    for k in 0..KW {
                        let pos = t + k;
                        if (1..=P1).contains(&pos) {
                            s += self.w2(o, c, k) * input[pos - 1];
                        }
                    }
                }
                *out = s;
            }
        }
        let mut embedding = [0.0; EMBED_LEN];
        let mut a2 = [[0usize; P2]; C2];
        for o in 0..C2 {
            for t in 0..P2 {
                let (l, r) = (relu(c2[o][2 * t]), relu(c2[o][2 * t + 1]));
                (embedding[o * P2 + t], a2[o][t]) = if l >= r { (l, 2 * t) } else { (r, 2 * t + 1) };
            }
        }
        let logit = self.b3()
            + embedding
                .iter()
                .enumerate()
                .map(|(i, f)| self.w3(i) * f)
                .sum::<f64>();
        Trace {
            c1,
            p1,
            a1,
            c2,
            a2,
            embedding,
            logit,
        }
    }

    fn check(x: &[f64]) -> Result<()> {
        if x.len() != INPUT_LEN {
            return Err(arg_err!("scoring network expects {INPUT_LEN} inputs, got {}", x.len()));
        }
        Ok(())
    }

    /// Sigmoid score and the 32-value embedding (second pooling output,
    /// channel-major).
    pub fn forward(&self, x: &[f64]) -> Result<(f64, [f64; EMBED_LEN])> {
        Self::check(x)?;
        let t = self.trace(x);
        Ok((crate::qgan::sigmoid(t.logit), t.embedding))
    }

    pub fn embedding(&self, x: &[f64]) -> Result<[f64; EMBED_LEN]> {
        Ok(self.forward(x)?.1)
    }

    /// Accumulates `d_logit · ∂logit/∂params` into `grad`.
    fn backward(&self, x: &[f64], d_logit: f64, grad: &mut [f64]) {
        let t = self.trace(x);
        grad[B3] += d_logit;
        let mut d_c2 = [[0.0; P1]; C2];
        for o in 0..C2 {
            for s in 0..P2 {
                let i = o * P2 + s;
                grad[W3 + i] += d_logit * t.embedding[i];
                let pos = t.a2[o][s];
                if t.c2[o][pos] > 0.0 {
                    d_c2[o][pos] += d_logit * self.w3(i);
                }
            }
        }
        let mut d_p1 = [[0.0; P1]; C1];
        for o in 0..C2 {
            for s in 0..P1 {
                let d = d_c2[o][s];
                if d == 0.0 {
                    continue;
                }
                grad[B2 + o] += d;
                for c in 0..C1 {
                    for k in 0..KW {
                        let pos = s + k;
                        if (1..=P1).contains(&pos) {
                            grad[W2 + (o * C1 + c) * KW + k] += d * t.p1[c][pos - 1];
                            d_p1[c][pos - 1] += d * self.w2(o, c, k);
                        }
                    }
                }
            }
        }
        let mut d_c1 = [[0.0; L1]; C1];
        for c in 0..C1 {
            for s in 0..P1 {
                let pos = t.a1[c][s];
                if t.c1[c][pos] > 0.0 {
                    d_c1[c][pos] += d_p1[c][s];
                }
            }
        }
        for o in 0..C1 {
            for s in 0..L1 {
                let d = d_c1[o][s];
                if d == 0.0 {
                    continue;
                }
                grad[B1 + o] += d;
                for k in 0..KW {
                    let pos = s + k;
                    if (1..=L1).contains(&pos) {
                        grad[W1 + o * KW + k] += d * x[pos - 1];
                    }
                }
            }
        }
    }

    /// Gradient of the mean binary cross-entropy over `(x, y)` pairs.
    pub fn loss_grad(&self, xs: &[&[f64]], ys: &[f64]) -> Result<Vec<f64>> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(arg_err!("need matching non-empty inputs and labels"));
        }
        let mut grad = vec![0.0; N_PARAMS];
        let m = xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            Self::check(x)?;
            let (p, dp) = crate::qgan::clamped_sigmoid(self.trace(x).logit);
            // d/dz of −[y log p + (1 − y) log(1 − p)]
            let d = (-y / p + (1.0 - y) / (1.0 - p)) * dp;
            self.backward(x, d / m, &mut grad);
        }
        Ok(grad)
    }
}

/// Mean binary cross-entropy `J(w, b)` with outputs clamped to `[ε, 1 − ε]`.
pub fn bce_loss(net: &BdeNet, xs: &[&[f64]], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(arg_err!("need matching non-empty inputs and labels"));
    }
    let mut sum = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let p = net.forward(x)?.0.clamp(OUTPUT_EPS, 1.0 - OUTPUT_EPS);
        sum -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    Ok(sum / xs.len() as f64)
}

/// Fraction of inputs whose thresholded score (`≥ 0.5` means real) matches
/// the label.
pub fn bde_accuracy(net: &BdeNet, xs: &[&[f64]], ys: &[f64]) -> Result<f64> {
    let mut correct = 0usize;
    for (x, &y) in xs.iter().zip(ys) {
        let pred = if net.forward(x)?.0 >= 0.5 { 1.0 } else { 0.0 };
        if pred == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / xs.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BdeConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for BdeConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            lr: 0.01,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BdeFit {
    pub net: BdeNet,
    /// `J(w, b)` over the full training set after each epoch.
    pub losses: Vec<f64>,
    pub accuracy: f64,
}

/// Trains the scoring network to output 1 on real vectors and 0 on
/// generated ones.
pub fn train_bde(real: &[ProbVector], generated: &[ProbVector], cfg: &BdeConfig) -> Result<BdeFit> {
    if real.is_empty() || generated.is_empty() {
        return Err(arg_err!("scoring network needs non-empty real and generated sets"));
    }
    if cfg.batch_size == 0 || !(cfg.lr > 0.0) {
        return Err(arg_err!("batch size and learning rate must be positive"));
    }
    let xs: Vec<&[f64]> = real
        .iter()
        .chain(generated)
        .map(|v| v.as_slice())
        .collect();
    let ys: Vec<f64> = std::iter::repeat_n(1.0, real.len())
        .chain(std::iter::repeat_n(0.0, generated.len()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = BdeNet::init(&mut rng);
    let mut opt = Adam::new(N_PARAMS, cfg.lr, 0.9, 0.999, 1e-8);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let bx: Vec<&[f64]> = chunk.iter().map(|&i| xs[i]).collect();
            let by: Vec<f64> = chunk.iter().map(|&i| ys[i]).collect();
            let g = net.loss_grad(&bx, &by)?;
            opt.step(net.params_mut(), &g);
        }
        losses.push(bce_loss(&net, &xs, &ys)?);
    }
    let accuracy = bde_accuracy(&net, &xs, &ys)?;
    Ok(BdeFit {
        net,
        losses,
        accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_net() {
        let (s, e) = BdeNet::zeros().forward(&[0.3; 16]).unwrap();
        assert_eq!(s, 0.5);
        assert!(e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn length_checked() {
        assert!(BdeNet::zeros().forward(&[0.0; 15]).is_err());
        assert!(BdeNet::from_params(vec![0.0; 3]).is_err());
    }

    #[test]
    fn deterministic_forward() {
        let net = BdeNet::init(&mut ChaCha8Rng::seed_from_u64(1));
        let x: Vec<f64> = (0..16).map(|i| i as f64 / 120.0).collect();
        assert_eq!(net.forward(&x).unwrap(), net.forward(&x).unwrap());
    }

    #[test]
    fn param_count() {
        assert_eq!(N_PARAMS, 12 + 4 + 96 + 8 + 32 + 1);
    }

    #[test]
    fn training_rejects_empty_sets() {
        let cfg = BdeConfig::default();
        assert!(train_bde(&[], &[ProbVector::uniform(16)], &cfg).is_err());
        assert!(train_bde(&[ProbVector::uniform(16)], &[], &cfg).is_err());
    }

    #[test]
    fn same_seed_same_weights() {
        let real = vec![ProbVector::point_mass(16, 2), ProbVector::uniform(16)];
        let gen = vec![ProbVector::point_mass(16, 9)];
        let cfg = BdeConfig {
            epochs: 5,
            ..BdeConfig::default()
        };
        let a = train_bde(&real, &gen, &cfg).unwrap();
        let b = train_bde(&real, &gen, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
