//! Benchmark fixtures.

use qbde_core::bde::{BdeNet, INPUT_LEN, N_PARAMS};
use qbde_core::GeneratorParams;

/// Deterministic angles spread over `(-π, π)`.
pub fn params(n_qubits: usize, depth: usize) -> GeneratorParams {
    let angles = (0..(depth + 1) * n_qubits)
        .map(|i| std::f64::consts::PI * (i as f64 * 0.7).sin())
        .collect();
    GeneratorParams::new(n_qubits, depth, angles).expect("valid shape")
}

pub fn bde_net() -> BdeNet {
    BdeNet::from_params((0..N_PARAMS).map(|i| 0.3 * (i as f64 * 1.3).cos()).collect())
        .expect("valid length")
}

/// A normalized input with uneven mass.
pub fn bde_input() -> Vec<f64> {
    let raw: Vec<f64> = (0..INPUT_LEN).map(|i| 1.0 + (i as f64).sin()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}
