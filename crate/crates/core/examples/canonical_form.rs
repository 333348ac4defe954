//! Build an entangled state gate by gate, restore canonical form with a double
//! sweep and read Schmidt coefficients straight from the bonds.
//!
//!     cargo run --release --example canonical_form

use shor_mps::mps::{Direction, MpsState, UnitaryGate};

fn main() {
    let n = 5;
    let mut state = MpsState::new_product_state(&vec![2; n], &vec![0; n]).unwrap();
    state.apply_single_qudit_gate(0, &UnitaryGate::hadamard()).unwrap();
    for m in 0..n - 1 {
        state.apply_two_site_gate(m, &UnitaryGate::cnot()).unwrap();
    }
    state.promote_to_complex().unwrap();
    state.apply_single_qudit_gate(2, &UnitaryGate::hadamard()).unwrap();
    state.apply_two_site_gate_then_swap(1, &UnitaryGate::controlled_phase(2)).unwrap();

    println!("before sweep: bond dims {:?}, canonical {}", state.bond_dims(), state.is_canonical());
    state.canonicalize().unwrap();
    println!("after sweep:  bond dims {:?}, canonical {}", state.bond_dims(), state.is_canonical());
    for k in 0..state.bond_count() {
        let w = state.bond_weights(k).as_slice();
        let entropy: f64 = w.iter().map(|x| x * x).filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum();
        println!("  bond {k}: weights {w:.4?}, entropy {entropy:.4} bits");
    }

    for m in 0..n {
        let p = state.outcome_probabilities(m).unwrap();
        println!("  qubit {m}: P(0) = {:.4}", p[0]);
    }
    state.sweep(Direction::Left, 0..n - 1).unwrap();
    println!("norm {:.15}", state.norm());
}
