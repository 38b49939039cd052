use rand::Rng;

use crate::error::{arg_err, Result};

/// Output clamp applied before any logarithm.
pub const OUTPUT_EPS: f64 = 1e-7;

const LEAKY_SLOPE: f64 = 0.01;

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Clamped output and the derivative of the clamped output w.r.t. the logit.
pub(crate) fn clamped_sigmoid(z: f64) -> (f64, f64) {
    let s = sigmoid(z);
    if s < OUTPUT_EPS {
        (OUTPUT_EPS, 0.0)
    } else if s > 1.0 - OUTPUT_EPS {
        (1.0 - OUTPUT_EPS, 0.0)
    } else {
        (s, s * (1.0 - s))
    }
}

/// Fully connected classifier `in → h1 → h2 → 1` with leaky-rectifier hidden
/// units and a logistic output.
///
/// All weights and biases live in one flat vector; layer `l` stores its
/// `out × in` weight matrix (row-major) followed by its `out` biases. The
/// same layout is used for gradients, so an optimizer can treat the network
/// as a plain slice.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorNet {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Gradient of a scalar loss with the same layout as [`DiscriminatorNet`].
#[derive(Clone, Debug, PartialEq)]
pub struct DiscGrads(pub Vec<f64>);

struct Cache {
    // activations[0] is the input; activations[l + 1] is layer l's output
    // (pre-activation for the last layer)
    activations: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl DiscriminatorNet {
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        check_sizes(sizes)?;
        Ok(Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; param_count(sizes)],
        })
    }

    /// Uniform Glorot initialization for weights, zero biases.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for l in 0..net.n_layers() {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let (w, _) = net.layer_range(l);
            for p in &mut net.params[w] {
                *p = rng.random_range(-limit..=limit);
            }
        }
        Ok(net)
    }

    pub fn from_parts(sizes: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        check_sizes(&sizes)?;
        if params.len() != param_count(&sizes) {
            return Err(arg_err!(
                "discriminator with sizes {sizes:?} needs {} parameters, got {}",
                param_count(&sizes),
                params.len()
            ));
        }
        Ok(Self { sizes, params })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layer_range(&self, l: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let mut off = 0;
        for k in 0..l {
            off += self.sizes[k + 1] * (self.sizes[k] + 1);
        }
        let w_len = self.sizes[l + 1] * self.sizes[l];
        (off..off + w_len, off + w_len..off + w_len + self.sizes[l + 1])
    }

    /// Row-major `out × in` weights of layer `l`.
    pub fn weights(&self, l: usize) -> &[f64] {
        &self.params[self.layer_range(l).0]
    }

    pub fn bias(&self, l: usize) -> &[f64] {
        &self.params[self.layer_range(l).1]
    }

    pub fn weights_mut(&mut self, l: usize) -> &mut [f64] {
        let r = self.layer_range(l).0;
        &mut self.params[r]
    }

    pub fn bias_mut(&mut self, l: usize) -> &mut [f64] {
        let r = self.layer_range(l).1;
        &mut self.params[r]
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_len() {
            return Err(arg_err!(
                "discriminator expects {} inputs, got {}",
                self.input_len(),
                x.len()
            ));
        }
        Ok(())
    }

    fn forward_cached(&self, x: &[f64]) -> Cache {
        let mut activations = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(self.n_layers());
        for l in 0..self.n_layers() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = self.weights(l);
            let b = self.bias(l);
            let input = activations.last().unwrap();
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    b[o] + row.iter().zip(input).map(|(a, c)| a * c).sum::<f64>()
                })
                .collect();
            let a = if l + 1 < self.n_layers() {
                z.iter()
                    .map(|&v| if v > 0.0 { v } else { LEAKY_SLOPE * v })
                    .collect()
            } else {
                z.clone()
            };
            pre.push(z);
            activations.push(a);
        }
        Cache { activations, pre }
    }

    /// Output logit (before the sigmoid).
    pub fn logit(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.forward_cached(x).pre.last().unwrap()[0])
    }

    /// `D(x)`, clamped to `[ε, 1 − ε]`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        Ok(clamped_sigmoid(self.logit(x)?).0)
    }

    /// Backpropagates `d_logit = ∂L/∂z_out` for input `x`, accumulating
    /// parameter gradients into `grad` and returning `∂L/∂x`.
    pub(crate) fn backward(&self, x: &[f64], d_logit: f64, grad: &mut [f64]) -> Vec<f64> {
        let cache = self.forward_cached(x);
        let mut delta = vec![d_logit];
        for l in (0..self.n_layers()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (wr, br) = self.layer_range(l);
            let input = &cache.activations[l];
            for o in 0..n_out {
                grad[br.start + o] += delta[o];
                let row = wr.start + o * n_in;
                for i in 0..n_in {
                    grad[row + i] += delta[o] * input[i];
                }
            }
            let w = &self.params[wr];
            let mut d_in = vec![0.0; n_in];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    d_in[i] += delta[o] * row[i];
                }
            }
            if l > 0 {
                for (d, z) in d_in.iter_mut().zip(&cache.pre[l - 1]) {
                    if *z <= 0.0 {
                        *d *= LEAKY_SLOPE;
                    }
                }
            }
            delta = d_in;
        }
        delta
    }

    /// `∂D_clamped(x)/∂x` scaled by `upstream`, without touching parameter
    /// gradients.
    pub fn input_gradient(&self, x: &[f64], d_logit: f64) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut scratch = vec![0.0; self.params.len()];
        Ok(self.backward(x, d_logit, &mut scratch))
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) || *sizes.last().unwrap() != 1 {
        return Err(arg_err!(
            "discriminator sizes {sizes:?} must be non-zero and end in a single output"
        ));
    }
    Ok(())
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}
