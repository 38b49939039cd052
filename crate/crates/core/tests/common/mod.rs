//! Independent reference implementations shared by the integration tests
//! and the acceptance runner.
#![allow(dead_code)]

use num_complex::Complex64;
use qbde_core::bde::{BdeNet, EMBED_LEN, INPUT_LEN};
use qbde_core::{Entangler, GeneratorParams};

pub type Matrix = Vec<Vec<Complex64>>;

pub fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0.into() } else { 0.0.into() }).collect())
        .collect()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n * m]; n * m];
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn ry_matrix(theta: f64) -> Matrix {
    let (s, c) = (theta / 2.0).sin_cos();
    vec![vec![c.into(), (-s).into()], vec![s.into(), c.into()]]
}

/// `I ⊗ … ⊗ U ⊗ … ⊗ I` with qubit 1 as the most significant factor.
pub fn embed_single(n: usize, qubit: usize, u: &Matrix) -> Matrix {
    let mut m = identity(1);
    for q in 1..=n {
        m = kron(&m, &if q == qubit { u.clone() } else { identity(2) });
    }
    m
}

pub fn cz_matrix(n: usize, a: usize, b: usize) -> Matrix {
    let dim = 1 << n;
    let mut m = identity(dim);
    for (i, row) in m.iter_mut().enumerate() {
        let bit = |q: usize| (i >> (n - q)) & 1;
        if bit(a) == 1 && bit(b) == 1 {
            row[i] = (-1.0).into();
        }
    }
    m
}

/// The generator circuit as one dense unitary.
pub fn dense_unitary(params: &GeneratorParams, entangler: Entangler) -> Matrix {
    let n = params.n_qubits();
    let mut u = identity(1 << n);
    let ry_layer = |u: &mut Matrix, layer: usize| {
        for q in 0..n {
            let g = embed_single(n, q + 1, &ry_matrix(params.angle(layer, q)));
            *u = matmul(&g, u);
        }
    };
    ry_layer(&mut u, 0);
    for layer in 1..=params.depth() {
        let mut pairs: Vec<(usize, usize)> = (1..n).map(|q| (q, q + 1)).collect();
        if entangler == Entangler::Ring && n > 2 {
            pairs.push((n, 1));
        }
        for (a, b) in pairs {
            u = matmul(&cz_matrix(n, a, b), &u);
        }
        ry_layer(&mut u, layer);
    }
    u
}

/// First column of the dense unitary: the state reached from `|0…0⟩`.
pub fn dense_state(params: &GeneratorParams, entangler: Entangler) -> Vec<Complex64> {
    dense_unitary(params, entangler).iter().map(|row| row[0]).collect()
}

pub fn dense_probs(params: &GeneratorParams, entangler: Entangler) -> Vec<f64> {
    dense_state(params, entangler).iter().map(|a| a.norm_sqr()).collect()
}

/// Central finite difference of `f` at `x` for every coordinate.
pub fn finite_diff(x: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut buf = x.to_vec();
    (0..x.len())
        .map(|i| {
            buf[i] = x[i] + h;
            let up = f(&buf);
            buf[i] = x[i] - h;
            let down = f(&buf);
            buf[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Direct nested-loop forward pass of the scoring network over an
/// explicitly zero-padded input.
pub fn bde_reference(net: &BdeNet, x: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(x.len(), INPUT_LEN);
    let conv = |input: &[Vec<f64>], out_ch: usize, w: &dyn Fn(usize, usize, usize) -> f64, b: &dyn Fn(usize) -> f64| {
        let len = input[0].len();
        let padded: Vec<Vec<f64>> = input
            .iter()
            .map(|ch| {
                let mut p = vec![0.0];
                p.extend(ch);
                p.push(0.0);
                p
            })
            .collect();
        let mut out = vec![vec![0.0; len]; out_ch];
        for (o, row) in out.iter_mut().enumerate() {
            for (t, v) in row.iter_mut().enumerate() {
                let mut s = b(o);
                for (c, ch) in padded.iter().enumerate() {
                    for k in 0..3 {
                        s += w(o, c, k) * ch[t + k];
                    }
                }
                *v = s.max(0.0);
            }
        }
        out
    };
    let pool = |input: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        input
            .into_iter()
            .map(|ch| ch.chunks(2).map(|p| p[0].max(p[1])).collect())
            .collect()
    };
    let h1 = pool(conv(&[x.to_vec()], 4, &|o, _, k| net.w1(o, k), &|o| net.b1(o)));
    let h2 = pool(conv(&h1, 8, &|o, c, k| net.w2(o, c, k), &|o| net.b2(o)));
    let emb: Vec<f64> = h2.concat();
    assert_eq!(emb.len(), EMBED_LEN);
    let z = net.b3() + emb.iter().enumerate().map(|(i, e)| net.w3(i) * e).sum::<f64>();
    (1.0 / (1.0 + (-z).exp()), emb)
}
