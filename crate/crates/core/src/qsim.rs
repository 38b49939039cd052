//! Dense state-vector simulation of the RY/CZ generator circuit.
//!
//! Basis ordering: qubit 1 is the most significant bit of the basis index,
//! so on four qubits `|0001⟩` is index 1 and `|1000⟩` is index 8. Gate
//! methods take 1-based qubit indices.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{arg_err, Error, Result};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros computational basis state on `n` qubits.
    pub fn new_zero_state(n: usize) -> Result<Self> {
        check_qubit_count(n)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits: n,
            amplitudes,
        })
    }

    /// Builds a state from raw amplitudes. The length must be a power of two
    /// within the qubit cap; normalization is not enforced.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(arg_err!("amplitude count {len} is not a power of two >= 2"));
        }
        let n = len.trailing_zeros() as usize;
        check_qubit_count(n)?;
        Ok(Self {
            n_qubits: n,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, qubit: usize) -> Result<usize> {
        if qubit == 0 || qubit > self.n_qubits {
            return Err(arg_err!(
                "qubit {qubit} out of range 1..={}",
                self.n_qubits
            ));
        }
        Ok(1 << (self.n_qubits - qubit))
    }

    /// Applies `RY(angle) = [[cos(a/2), -sin(a/2)], [sin(a/2), cos(a/2)]]`.
    pub fn apply_ry(&mut self, qubit: usize, angle: f64) -> Result<()> {
        let mask = self.mask(qubit)?;
        let (s, c) = (angle / 2.0).sin_cos();
        for i in 0..self.amplitudes.len() {
            if i & mask != 0 {
                continue;
            }
            let a0 = self.amplitudes[i];
            let a1 = self.amplitudes[i | mask];
            self.amplitudes[i] = a0 * c - a1 * s;
            self.amplitudes[i | mask] = a0 * s + a1 * c;
        }
        Ok(())
    }

    /// Controlled-Z: negates every amplitude whose basis index has both
    /// qubits set. Symmetric in its arguments.
    pub fn apply_cz(&mut self, qubit_a: usize, qubit_b: usize) -> Result<()> {
        if qubit_a == qubit_b {
            return Err(arg_err!("controlled-Z needs two distinct qubits, got {qubit_a} twice"));
        }
        let both = self.mask(qubit_a)? | self.mask(qubit_b)?;
        for (i, amp) in self.amplitudes.iter_mut().enumerate() {
            if i & both == both {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    pub fn probabilities(&self) -> ProbVector {
        ProbVector(self.amplitudes.iter().map(|a| a.norm_sqr()).collect())
    }

    /// Draws `shots` computational-basis measurements and returns the count
    /// per outcome.
    pub fn sample<R: Rng + ?Sized>(&self, shots: usize, rng: &mut R) -> Result<Vec<u64>> {
        if shots == 0 {
            return Err(arg_err!("shots must be at least 1"));
        }
        let probs = self.probabilities();
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in probs.as_slice() {
            acc += p;
            cdf.push(acc);
        }
        let total = acc;
        let mut counts = vec![0u64; probs.len()];
        for _ in 0..shots {
            let u = rng.random::<f64>() * total;
            let idx = cdf.partition_point(|&c| c <= u).min(counts.len() - 1);
            counts[idx] += 1;
        }
        Ok(counts)
    }
}

fn check_qubit_count(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Config(format!(
            "qubit count {n} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// Probability distribution over the `2^n` computational basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Wraps `probs` after checking it lies on the simplex (tolerance 1e-9).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(arg_err!("empty probability vector"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(arg_err!("probabilities must be finite and non-negative"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(arg_err!("probabilities sum to {sum}, expected 1"));
        }
        Ok(Self(probs))
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    pub fn point_mass(len: usize, index: usize) -> Self {
        let mut v = vec![0.0; len];
        v[index] = 1.0;
        Self(v)
    }

    /// Normalizes a histogram of counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(arg_err!("histogram has no counts"));
        }
        Ok(Self(
            counts.iter().map(|&c| c as f64 / total as f64).collect(),
        ))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Total-variation distance, `0.5 * Σ|p - q|`.
    pub fn total_variation(&self, other: &ProbVector) -> f64 {
        0.5 * self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Wiring of the fixed entangling block between rotation layers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Entangler {
    /// CZ(1,2), …, CZ(n−1,n) followed by the wrap-around CZ(n,1).
    #[default]
    Ring,
    /// CZ(1,2), …, CZ(n−1,n).
    Linear,
}

impl Entangler {
    /// Qubit pairs in application order. Each edge appears once, so the
    /// two-qubit ring is a single CZ(1,2).
    pub fn pairs(self, n: usize) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = (1..n).map(|q| (q, q + 1)).collect();
        if self == Entangler::Ring && n > 2 {
            pairs.push((n, 1));
        }
        pairs
    }

    pub fn name(self) -> &'static str {
        match self {
            Entangler::Ring => "ring",
            Entangler::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(Entangler::Ring),
            "linear" => Ok(Entangler::Linear),
            other => Err(Error::Config(format!("unknown entangler '{other}'"))),
        }
    }
}

/// Rotation angles of the generator: `depth + 1` layers of `n_qubits`
/// angles, row-major. Layer 0 prepares the input state; layers `1..=depth`
/// each follow one entangling block.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    n_qubits: usize,
    depth: usize,
    angles: Vec<f64>,
}

impl GeneratorParams {
    pub fn new(n_qubits: usize, depth: usize, angles: Vec<f64>) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let expected = (depth + 1) * n_qubits;
        if angles.len() != expected {
            return Err(arg_err!(
                "expected {expected} angles for n={n_qubits}, K={depth}, got {}",
                angles.len()
            ));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(arg_err!("generator angles must be finite"));
        }
        Ok(Self {
            n_qubits,
            depth,
            angles,
        })
    }

    pub fn zeros(n_qubits: usize, depth: usize) -> Result<Self> {
        Self::new(n_qubits, depth, vec![0.0; (depth + 1) * n_qubits])
    }

    /// Layer 0 at π/2 (uniform superposition), deeper layers uniform in
    /// [−0.1, 0.1].
    pub fn init<R: Rng + ?Sized>(n_qubits: usize, depth: usize, rng: &mut R) -> Result<Self> {
        let mut angles = vec![FRAC_PI_2; n_qubits];
        angles.extend((0..depth * n_qubits).map(|_| rng.random_range(-0.1..=0.1)));
        Self::new(n_qubits, depth, angles)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Angle of `qubit` (0-based column) in `layer`.
    pub fn angle(&self, layer: usize, qubit: usize) -> f64 {
        self.angles[layer * self.n_qubits + qubit]
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Adds `delta` to the flat parameter `index`.
    pub fn shifted(&self, index: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.angles[index] += delta;
        out
    }

    pub(crate) fn angles_mut(&mut self) -> &mut [f64] {
        &mut self.angles
    }
}

/// Prepares `RY(θ^0)|0…0⟩`, then applies `entangler` followed by the RY
/// layer `j` for each `j` in `1..=K`.
pub fn run_generator_circuit(params: &GeneratorParams, entangler: Entangler) -> StateVector {
    let n = params.n_qubits;
    let pairs = entangler.pairs(n);
    let mut state = StateVector::new_zero_state(n).expect("qubit count validated by params");
    for layer in 0..=params.depth {
        if layer > 0 {
            for &(a, b) in &pairs {
                state.apply_cz(a, b).expect("entangler pairs are in range");
            }
        }
        for q in 0..n {
            state
                .apply_ry(q + 1, params.angle(layer, q))
                .expect("qubit index in range");
        }
    }
    state
}

/// Exact output distribution of the generator circuit.
pub fn generator_probs(params: &GeneratorParams, entangler: Entangler) -> ProbVector {
    run_generator_circuit(params, entangler).probabilities()
}

/// `∂p_j/∂θ_k` for every outcome `j` and flat parameter `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbJacobian {
    rows: usize,
    cols: usize,
    // column-major: one contiguous column per parameter
    data: Vec<f64>,
}

impl ProbJacobian {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, outcome: usize, param: usize) -> f64 {
        self.data[param * self.rows + outcome]
    }

    pub fn column(&self, param: usize) -> &[f64] {
        &self.data[param * self.rows..(param + 1) * self.rows]
    }

    /// Pulls an upstream gradient over outcomes back to the parameters.
    pub fn vjp(&self, upstream: &[f64]) -> Vec<f64> {
        assert_eq!(upstream.len(), self.rows, "upstream gradient length");
        (0..self.cols)
            .map(|k| {
                self.column(k)
                    .iter()
                    .zip(upstream)
                    .map(|(j, u)| j * u)
                    .sum()
            })
            .collect()
    }
}

/// Parameter-shift Jacobian: `[p(θ_k + π/2) − p(θ_k − π/2)] / 2`, exact for
/// RY rotations. Columns are evaluated in parallel; each column is an
/// independent computation, so the result does not depend on scheduling.
pub fn prob_jacobian(params: &GeneratorParams, entangler: Entangler) -> ProbJacobian {
    let rows = 1 << params.n_qubits;
    let cols = params.len();
    let columns: Vec<Vec<f64>> = (0..cols)
        .into_par_iter()
        .map(|k| {
            let plus = generator_probs(&params.shifted(k, FRAC_PI_2), entangler);
            let minus = generator_probs(&params.shifted(k, -FRAC_PI_2), entangler);
            plus.as_slice()
                .iter()
                .zip(minus.as_slice())
                .map(|(p, m)| (p - m) / 2.0)
                .collect()
        })
        .collect();
    ProbJacobian {
        rows,
        cols,
        data: columns.concat(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn amp_re(state: &StateVector) -> Vec<f64> {
        state.amplitudes().iter().map(|a| a.re).collect()
    }

    #[test]
    fn zero_state_layout() {
        let s = StateVector::new_zero_state(4).unwrap();
        assert_eq!(s.amplitudes().len(), 16);
        assert_eq!(s.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(s.amplitudes()[1..].iter().all(|a| a.norm_sqr() == 0.0));
        assert_eq!(amp_re(&StateVector::new_zero_state(1).unwrap()), vec![1.0, 0.0]);
        let p = StateVector::new_zero_state(2).unwrap().probabilities();
        assert_eq!(p.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn qubit_count_bounds() {
        assert!(matches!(StateVector::new_zero_state(0), Err(Error::Config(_))));
        assert!(matches!(StateVector::new_zero_state(13), Err(Error::Config(_))));
        assert!(StateVector::new_zero_state(12).is_ok());
    }

    #[test]
    fn ry_matrix_cases() {
        let mut s = StateVector::new_zero_state(1).unwrap();
        s.apply_ry(1, PI).unwrap();
        assert!((s.amplitudes()[0].re).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - 1.0).abs() < 1e-15);

        let mut s = StateVector::new_zero_state(1).unwrap();
        s.apply_ry(1, PI / 2.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0].re - h).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - h).abs() < 1e-15);

        let mut s = StateVector::new_zero_state(3).unwrap();
        s.apply_ry(2, 0.7).unwrap();
        let before = s.clone();
        s.apply_ry(3, 0.0).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn ry_targets_msb_for_qubit_one() {
        let mut s = StateVector::new_zero_state(2).unwrap();
        s.apply_ry(1, PI).unwrap();
        // |10⟩ is index 2
        assert!((s.amplitudes()[2].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gate_argument_errors() {
        let mut s = StateVector::new_zero_state(2).unwrap();
        assert!(matches!(s.apply_ry(0, 0.1), Err(Error::Argument(_))));
        assert!(matches!(s.apply_ry(3, 0.1), Err(Error::Argument(_))));
        assert!(matches!(s.apply_cz(1, 1), Err(Error::Argument(_))));
        assert!(matches!(s.apply_cz(1, 3), Err(Error::Argument(_))));
    }

    #[test]
    fn cz_cases() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut s = StateVector::from_amplitudes(vec![zero, zero, zero, one]).unwrap();
        s.apply_cz(1, 2).unwrap();
        assert_eq!(s.amplitudes()[3], -one);

        let mut s = StateVector::from_amplitudes(vec![zero, one, zero, zero]).unwrap();
        s.apply_cz(2, 1).unwrap();
        assert_eq!(s.amplitudes()[1], one);

        let mut s = StateVector::new_zero_state(3).unwrap();
        for q in 1..=3 {
            s.apply_ry(q, 0.3 * q as f64).unwrap();
        }
        let before = s.clone();
        s.apply_cz(1, 3).unwrap();
        assert_ne!(s, before);
        s.apply_cz(3, 1).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn entangler_pairs() {
        assert_eq!(Entangler::Ring.pairs(4), vec![(1, 2), (2, 3), (3, 4), (4, 1)]);
        assert_eq!(Entangler::Linear.pairs(4), vec![(1, 2), (2, 3), (3, 4)]);
        assert_eq!(Entangler::Ring.pairs(2), vec![(1, 2)]);
        assert!(Entangler::Ring.pairs(1).is_empty());
    }

    #[test]
    fn circuit_trivial_cases() {
        let p = generator_probs(&GeneratorParams::zeros(4, 3).unwrap(), Entangler::Ring);
        assert_eq!(p, ProbVector::point_mass(16, 0));

        let params = GeneratorParams::new(4, 0, vec![PI / 2.0; 4]).unwrap();
        let p = generator_probs(&params, Entangler::Ring);
        for v in p.as_slice() {
            assert!((v - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn params_shape_checked() {
        assert!(GeneratorParams::new(3, 2, vec![0.0; 8]).is_err());
        assert!(GeneratorParams::new(3, 2, vec![f64::NAN; 9]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = GeneratorParams::init(4, 8, &mut rng).unwrap();
        assert_eq!(p.len(), 36);
        assert!(p.angles()[..4].iter().all(|&a| a == FRAC_PI_2));
        assert!(p.angles()[4..].iter().all(|a| a.abs() <= 0.1));
    }

    #[test]
    fn jacobian_single_qubit_analytic() {
        let j = prob_jacobian(&GeneratorParams::zeros(1, 0).unwrap(), Entangler::Ring);
        assert!(j.get(1, 0).abs() < 1e-15);
        let j = prob_jacobian(
            &GeneratorParams::new(1, 0, vec![PI / 2.0]).unwrap(),
            Entangler::Ring,
        );
        assert!((j.get(1, 0) - 0.5).abs() < 1e-15);
        assert!((j.get(0, 0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn sampling_contracts() {
        let s = StateVector::new_zero_state(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let counts = s.sample(100, &mut rng).unwrap();
        assert_eq!(counts[0], 100);
        assert!(matches!(s.sample(0, &mut rng), Err(Error::Argument(_))));

        let params = GeneratorParams::new(2, 1, vec![0.4, 1.1, -0.3, 2.0]).unwrap();
        let s = run_generator_circuit(&params, Entangler::Ring);
        let a = s.sample(500, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = s.sample(500, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().sum::<u64>(), 500);
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![1.5, -0.5]).is_err());
        let tv = ProbVector::point_mass(4, 0).total_variation(&ProbVector::point_mass(4, 1));
        assert_eq!(tv, 1.0);
    }
}
