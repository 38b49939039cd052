//! Hybrid adversarial training: the RY/CZ circuit generates a distribution
//! over `2^n` outcomes and a small fully connected network tries to tell it
//! apart from real simplex vectors.
//!
//! The circuit has no latent input, so every generated sample in a batch is
//! the same exact probability vector `p_θ`.

mod checkpoint;
mod discriminator;

pub use checkpoint::{Checkpoint, CHECKPOINT_HEADER};
pub use discriminator::{DiscGrads, DiscriminatorNet, OUTPUT_EPS};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{arg_err, Result};
use crate::optim::Adam;
use crate::qsim::{generator_probs, prob_jacobian, Entangler, GeneratorParams, ProbVector};
pub(crate) use discriminator::{clamped_sigmoid, sigmoid};

/// Clamp used by [`cross_entropy_to_target`].
pub const CE_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr_generator: f64,
    pub lr_discriminator: f64,
    /// Number of entangle-and-rotate layers `K`.
    pub depth: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub hidden: (usize, usize),
    pub entangler: Entangler,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            epochs: 300,
            lr_generator: 0.05,
            lr_discriminator: 1e-4,
            depth: 8,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            hidden: (64, 32),
            entangler: Entangler::Ring,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(arg_err!("batch size must be at least 1"));
        }
        if !(self.lr_generator > 0.0 && self.lr_discriminator > 0.0) {
            return Err(arg_err!("learning rates must be positive"));
        }
        if self.depth == 0 {
            return Err(arg_err!("circuit depth K must be at least 1"));
        }
        if self.hidden.0 == 0 || self.hidden.1 == 0 {
            return Err(arg_err!("hidden layer widths must be non-zero"));
        }
        Ok(())
    }

    pub fn disc_sizes(&self, input: usize) -> [usize; 4] {
        [input, self.hidden.0, self.hidden.1, 1]
    }
}

/// Exact generator output; this vector is the generated sample.
pub fn generator_output(params: &GeneratorParams, entangler: Entangler) -> ProbVector {
    generator_probs(params, entangler)
}

/// `D_φ(x)` clamped to `[ε, 1 − ε]`.
pub fn disc_forward(net: &DiscriminatorNet, x: &[f64]) -> Result<f64> {
    net.forward(x)
}

/// Non-saturating generator loss `−(1/m) Σ log D(g^l)`.
pub fn loss_g(net: &DiscriminatorNet, generated: &[ProbVector]) -> Result<f64> {
    if generated.is_empty() {
        return Err(arg_err!("generated batch is empty"));
    }
    let mut sum = 0.0;
    for g in generated {
        sum -= net.forward(g.as_slice())?.ln();
    }
    Ok(sum / generated.len() as f64)
}

/// `−(1/m) Σ [log D(x^l) + log(1 − D(g^l))]`.
pub fn loss_d(net: &DiscriminatorNet, real: &[ProbVector], generated: &[ProbVector]) -> Result<f64> {
    check_batches(real, generated)?;
    let mut sum = 0.0;
    for (x, g) in real.iter().zip(generated) {
        sum -= net.forward(x.as_slice())?.ln();
        sum -= (1.0 - net.forward(g.as_slice())?).ln();
    }
    Ok(sum / real.len() as f64)
}

fn check_batches(real: &[ProbVector], generated: &[ProbVector]) -> Result<()> {
    if real.is_empty() {
        return Err(arg_err!("real batch is empty"));
    }
    if real.len() != generated.len() {
        return Err(arg_err!(
            "batch size mismatch: {} real vs {} generated",
            real.len(),
            generated.len()
        ));
    }
    Ok(())
}

/// Backpropagation gradient of [`loss_d`] w.r.t. every discriminator
/// parameter.
pub fn disc_grads(
    net: &DiscriminatorNet,
    real: &[ProbVector],
    generated: &[ProbVector],
) -> Result<DiscGrads> {
    check_batches(real, generated)?;
    let m = real.len() as f64;
    let mut grad = vec![0.0; net.params().len()];
    for (x, g) in real.iter().zip(generated) {
        // −log D(x): d/dz = −D'(z)/D
        let (y, dy) = clamped_sigmoid(net.logit(x.as_slice())?);
        net.backward(x.as_slice(), -dy / y / m, &mut grad);
        // −log(1 − D(g)): d/dz = D'(z)/(1 − D)
        let (y, dy) = clamped_sigmoid(net.logit(g.as_slice())?);
        net.backward(g.as_slice(), dy / (1.0 - y) / m, &mut grad);
    }
    Ok(DiscGrads(grad))
}

/// `∂L_G/∂p` at the discriminator input: backpropagates `−log D(p)`.
pub fn loss_g_input_grad(net: &DiscriminatorNet, p: &ProbVector) -> Result<Vec<f64>> {
    let (y, dy) = clamped_sigmoid(net.logit(p.as_slice())?);
    net.input_gradient(p.as_slice(), -dy / y)
}

/// Generator gradient by the chain rule: `(∂L_G/∂p) · ∂p/∂θ`, with the
/// Jacobian from the parameter-shift rule.
pub fn gen_grads(
    params: &GeneratorParams,
    entangler: Entangler,
    net: &DiscriminatorNet,
) -> Result<Vec<f64>> {
    let p = generator_probs(params, entangler);
    let upstream = loss_g_input_grad(net, &p)?;
    Ok(prob_jacobian(params, entangler).vjp(&upstream))
}

/// `−Σ_j target_j · log(max(generated_j, 1e-12))`.
pub fn cross_entropy_to_target(generated: &ProbVector, target: &ProbVector) -> f64 {
    -target
        .as_slice()
        .iter()
        .zip(generated.as_slice())
        .map(|(t, g)| t * g.max(CE_EPS).ln())
        .sum::<f64>()
}

/// Component-wise mean of simplex vectors.
pub fn mean_distribution(data: &[ProbVector]) -> Result<ProbVector> {
    let first = data.first().ok_or_else(|| arg_err!("no vectors to average"))?;
    let mut acc = vec![0.0; first.len()];
    for v in data {
        if v.len() != acc.len() {
            return Err(arg_err!("vectors of different lengths"));
        }
        for (a, x) in acc.iter_mut().zip(v.as_slice()) {
            *a += x;
        }
    }
    let n = data.len() as f64;
    let mut mean: Vec<f64> = acc.into_iter().map(|a| a / n).collect();
    let s: f64 = mean.iter().sum();
    mean.iter_mut().for_each(|v| *v /= s);
    ProbVector::new(mean)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss_g: f64,
    pub loss_d: f64,
    pub cross_entropy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainTrace {
    pub epochs: Vec<EpochStats>,
    pub params: GeneratorParams,
    pub net: DiscriminatorNet,
}

/// Resumable alternating trainer. Every random draw comes from one ChaCha
/// stream seeded by `cfg.seed`, so a run is reproducible bit-for-bit and a
/// checkpointed run continues exactly where it stopped.
#[derive(Clone, Debug)]
pub struct Trainer {
    cfg: TrainConfig,
    data: Vec<ProbVector>,
    target: ProbVector,
    params: GeneratorParams,
    net: DiscriminatorNet,
    opt_g: Adam,
    opt_d: Adam,
    rng: ChaCha8Rng,
    epochs_done: usize,
}

impl Trainer {
    pub fn new(data: Vec<ProbVector>, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let n_qubits = check_data(&data)?;
        let target = mean_distribution(&data)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let params = GeneratorParams::init(n_qubits, cfg.depth, &mut rng)?;
        let net = DiscriminatorNet::init(&cfg.disc_sizes(1 << n_qubits), &mut rng)?;
        let opt_g = Adam::new(params.len(), cfg.lr_generator, cfg.beta1, cfg.beta2, cfg.adam_eps);
        let opt_d = Adam::new(
            net.params().len(),
            cfg.lr_discriminator,
            cfg.beta1,
            cfg.beta2,
            cfg.adam_eps,
        );
        Ok(Self {
            cfg,
            data,
            target,
            params,
            net,
            opt_g,
            opt_d,
            rng,
            epochs_done: 0,
        })
    }

    /// Restores a trainer from a checkpoint; `data` must be the set the
    /// checkpointed run was trained on.
    pub fn resume(data: Vec<ProbVector>, ckpt: Checkpoint) -> Result<Self> {
        ckpt.cfg.validate()?;
        let n_qubits = check_data(&data)?;
        if n_qubits != ckpt.params.n_qubits() {
            return Err(arg_err!(
                "checkpoint has {} qubits but data needs {n_qubits}",
                ckpt.params.n_qubits()
            ));
        }
        let target = mean_distribution(&data)?;
        let mut rng = ChaCha8Rng::seed_from_u64(ckpt.cfg.seed);
        rng.set_word_pos(ckpt.rng_word_pos);
        Ok(Self {
            cfg: ckpt.cfg,
            data,
            target,
            params: ckpt.params,
            net: ckpt.net,
            opt_g: ckpt.opt_g,
            opt_d: ckpt.opt_d,
            rng,
            epochs_done: ckpt.epochs_done,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn params(&self) -> &GeneratorParams {
        &self.params
    }

    pub fn net(&self) -> &DiscriminatorNet {
        &self.net
    }

    pub fn target(&self) -> &ProbVector {
        &self.target
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            cfg: self.cfg.clone(),
            params: self.params.clone(),
            net: self.net.clone(),
            opt_g: self.opt_g.clone(),
            opt_d: self.opt_d.clone(),
            rng_word_pos: self.rng.get_word_pos(),
            epochs_done: self.epochs_done,
        }
    }

    /// One pass over the shuffled data in batches of `m`: a discriminator
    /// step, then a generator step against the updated discriminator.
    pub fn run_epoch(&mut self) -> Result<EpochStats> {
        let entangler = self.cfg.entangler;
        let mut order: Vec<usize> = (0..self.data.len()).collect();
        order.shuffle(&mut self.rng);
        let mut sum_g = 0.0;
        let mut sum_d = 0.0;
        let mut iters = 0usize;
        for chunk in order.chunks(self.cfg.batch_size) {
            let real: Vec<ProbVector> = chunk.iter().map(|&i| self.data[i].clone()).collect();
            let g = generator_probs(&self.params, entangler);
            let generated = vec![g; real.len()];

            sum_d += loss_d(&self.net, &real, &generated)?;
            let dg = disc_grads(&self.net, &real, &generated)?;
            self.opt_d.step(self.net.params_mut(), &dg.0);

            sum_g += loss_g(&self.net, &generated[..1])?;
            let gg = gen_grads(&self.params, entangler, &self.net)?;
            self.opt_g.step(self.params.angles_mut(), &gg);
            iters += 1;
        }
        self.epochs_done += 1;
        let ce = cross_entropy_to_target(&generator_probs(&self.params, entangler), &self.target);
        Ok(EpochStats {
            epoch: self.epochs_done,
            loss_g: sum_g / iters as f64,
            loss_d: sum_d / iters as f64,
            cross_entropy: ce,
        })
    }

    pub fn run(&mut self, epochs: usize) -> Result<Vec<EpochStats>> {
        (0..epochs).map(|_| self.run_epoch()).collect()
    }

    pub fn into_trace(self, epochs: Vec<EpochStats>) -> TrainTrace {
        TrainTrace {
            epochs,
            params: self.params,
            net: self.net,
        }
    }
}

fn check_data(data: &[ProbVector]) -> Result<usize> {
    let first = data.first().ok_or_else(|| arg_err!("training data is empty"))?;
    let len = first.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(arg_err!("vector length {len} is not 2^n with n >= 1"));
    }
    if data.iter().any(|v| v.len() != len) {
        return Err(arg_err!("training vectors have different lengths"));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Trains from scratch for `cfg.epochs` epochs.
pub fn train(data: &[ProbVector], cfg: &TrainConfig) -> Result<TrainTrace> {
    let mut trainer = Trainer::new(data.to_vec(), cfg.clone())?;
    let epochs = trainer.run(cfg.epochs)?;
    Ok(trainer.into_trace(epochs))
}
