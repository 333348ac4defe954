#![allow(dead_code)]

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shor_mps::mps::{MpsState, SiteLabel, UnitaryGate};
use shor_mps::tensor::{svd_truncated, Matrix};

pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn bell() -> MpsState {
    let mut s = MpsState::new_product_state(&[2, 2], &[0, 0]).unwrap();
    s.apply_single_qudit_gate(0, &UnitaryGate::hadamard()).unwrap();
    s.apply_two_site_gate(0, &UnitaryGate::cnot()).unwrap();
    s
}

pub fn ghz(n: usize) -> MpsState {
    let mut s = MpsState::new_product_state(&vec![2; n], &vec![0; n]).unwrap();
    s.apply_single_qudit_gate(0, &UnitaryGate::hadamard()).unwrap();
    for m in 0..n - 1 {
        s.apply_two_site_gate(m, &UnitaryGate::cnot()).unwrap();
    }
    s
}

fn rotation(theta: f64) -> UnitaryGate {
    let (s, c) = theta.sin_cos();
    UnitaryGate::new(Matrix::<f64>::from_vec(2, 2, vec![c, -s, s, c]).unwrap()).unwrap()
}

/// Real `n`-qubit state from a few brickwork layers of rotations and CNOTs.
pub fn random_circuit_state(n: usize, seed: u64) -> MpsState {
    random_circuit_state_labeled(n, seed, (0..n).map(SiteLabel::Qudit).collect())
}

pub fn random_circuit_state_labeled(n: usize, seed: u64, labels: Vec<SiteLabel>) -> MpsState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = MpsState::new_product_state_labeled(&vec![2; n], &vec![0; n], labels).unwrap();
    for layer in 0..n {
        for m in 0..n {
            s.apply_single_qudit_gate(m, &rotation(rng.random::<f64>() * 6.3)).unwrap();
        }
        for m in (layer % 2..n.saturating_sub(1)).step_by(2) {
            s.apply_two_site_gate(m, &UnitaryGate::cnot()).unwrap();
        }
    }
    s
}

/// Dense reduced density matrix of qudit `m`.
pub fn dense_density(v: &[C64], dims: &[usize], m: usize) -> Matrix<C64> {
    let d = dims[m];
    let outer: usize = dims[..m].iter().product();
    let inner: usize = dims[m + 1..].iter().product();
    Matrix::from_fn(d, d, |p, q| {
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..outer {
            for b in 0..inner {
                acc += v[(a * d + p) * inner + b] * v[(a * d + q) * inner + b].conj();
            }
        }
        acc
    })
}

pub fn dense_singular_values(v: &[C64], rows: usize, cols: usize) -> Vec<f64> {
    let m = Matrix::from_vec(rows, cols, v.to_vec()).unwrap();
    svd_truncated(&m, 1e-12).unwrap().weights
}
