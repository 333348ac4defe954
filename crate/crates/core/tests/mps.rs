mod common;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shor_mps::mps::{Direction, MpsError, MpsState, SiteLabel, Side, SplitMethod, UnitaryGate};
use shor_mps::tensor::{svd_truncated, Matrix, ScalarMode};

use common::{bell, dense_density, dense_singular_values, ghz, max_diff, random_circuit_state};

const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[test]
fn product_state_examples() {
    let s = MpsState::new_product_state(&[2, 2], &[0, 0]).unwrap();
    assert_eq!(s.bond_dims(), vec![1]);
    assert_eq!(s.to_state_vector().unwrap(), vec![c(1.0), c(0.0), c(0.0), c(0.0)]);

    let s = MpsState::new_product_state(&[2], &[1]).unwrap();
    assert_eq!(s.to_state_vector().unwrap(), vec![c(0.0), c(1.0)]);

    let s = MpsState::new_product_state(&[2, 2, 2], &[0, 1, 0]).unwrap();
    let mut e = vec![c(0.0); 8];
    e[2] = c(1.0);
    assert_eq!(s.to_state_vector().unwrap(), e);

    assert!(matches!(MpsState::new_product_state(&[2], &[2]), Err(MpsError::InvalidArgument(_))));
}

#[test]
fn bell_pair_contract_and_decompose() {
    let mut s = bell();
    assert_eq!(s.bond_dims(), vec![2]);
    s.contract_sites(0).unwrap();
    assert_eq!(s.len(), 1);
    let v = s.to_state_vector().unwrap();
    assert!(max_diff(&v, &[c(H), c(0.0), c(0.0), c(H)]) < 1e-12);

    s.decompose_site(0, 2, 2, SplitMethod::Svd).unwrap();
    assert_eq!(s.bond_dims(), vec![2]);
    for w in s.bond_weights(0).as_slice() {
        assert!((w - H).abs() < 1e-12);
    }
    assert!(max_diff(&s.to_state_vector().unwrap(), &[c(H), c(0.0), c(0.0), c(H)]) < 1e-12);
}

#[test]
fn decompose_product_site_has_rank_one() {
    let mut s = MpsState::new_product_state(&[4], &[1]).unwrap();
    s.decompose_site(0, 2, 2, SplitMethod::Svd).unwrap();
    assert_eq!(s.bond_dims(), vec![1]);
    let mut t = MpsState::new_product_state(&[4], &[1]).unwrap();
    t.decompose_site(0, 2, 2, SplitMethod::Trivial).unwrap();
    assert_eq!(t.bond_dims(), vec![2]);
    assert!(max_diff(&s.to_state_vector().unwrap(), &t.to_state_vector().unwrap()) < 1e-14);
}

#[test]
fn single_qudit_gates() {
    let mut s = MpsState::new_product_state(&[2], &[0]).unwrap();
    s.apply_single_qudit_gate(0, &UnitaryGate::hadamard()).unwrap();
    assert!(max_diff(&s.to_state_vector().unwrap(), &[c(H), c(H)]) < 1e-15);

    let mut r = random_circuit_state(4, 3);
    let before = r.to_state_vector().unwrap();
    r.apply_single_qudit_gate(2, &UnitaryGate::identity(2)).unwrap();
    assert_eq!(r.to_state_vector().unwrap(), before);

    let mut s = MpsState::new_product_state(&[2], &[1]).unwrap();
    assert!(matches!(s.apply_single_qudit_gate(0, &UnitaryGate::phase(1)), Err(MpsError::WrongMode { .. })));
    s.promote_to_complex().unwrap();
    s.apply_single_qudit_gate(0, &UnitaryGate::phase(1)).unwrap();
    assert!(max_diff(&s.to_state_vector().unwrap(), &[c(0.0), C64::new(0.0, -1.0)]) < 1e-15);
}

#[test]
fn two_site_gates_and_swaps() {
    let b = bell();
    assert_eq!(b.bond_dims(), vec![2]);
    assert!(max_diff(&b.to_state_vector().unwrap(), &[c(H), c(0.0), c(0.0), c(H)]) < 1e-14);

    let mut s = MpsState::new_product_state(&[2, 2], &[0, 1]).unwrap();
    s.swap_sites(0).unwrap();
    assert_eq!(s.bond_dims(), vec![1]);
    assert_eq!(s.layout(), &[SiteLabel::Qudit(1), SiteLabel::Qudit(0)]);
    assert!(max_diff(&s.to_state_vector().unwrap(), &[c(0.0), c(0.0), c(1.0), c(0.0)]) < 1e-15);

    // mixed dimensions
    let mut s = random_circuit_state(4, 11);
    s.contract_sites(1).unwrap();
    let before = s.to_state_vector().unwrap();
    s.swap_sites(0).unwrap();
    s.swap_sites(0).unwrap();
    assert!(max_diff(&s.to_state_vector().unwrap(), &before) < 1e-12);
}

#[test]
fn swap_preserves_rank_across_entangled_bond() {
    // sites (a, b, c) with a-b entangled; swapping b and c keeps a|bc rank 2
    let mut s = MpsState::new_product_state(&[2, 2, 2], &[0, 0, 0]).unwrap();
    s.apply_single_qudit_gate(0, &UnitaryGate::hadamard()).unwrap();
    s.apply_two_site_gate(0, &UnitaryGate::cnot()).unwrap();
    s.swap_sites(1).unwrap();
    assert_eq!(s.schmidt_ranks("t").unwrap().ranks, vec![2, 2]);
}

#[test]
fn fused_cp_swap_matches_sequence() {
    let mut a = random_circuit_state(3, 5);
    a.promote_to_complex().unwrap();
    let mut b = a.clone();
    a.apply_two_site_gate(1, &UnitaryGate::cp_swap(2)).unwrap();
    b.apply_two_site_gate(1, &UnitaryGate::controlled_phase(2)).unwrap();
    b.apply_two_site_gate(1, &UnitaryGate::swap(2, 2)).unwrap();
    assert!(max_diff(&a.to_state_vector().unwrap(), &b.to_state_vector().unwrap()) < 1e-12);

    let mut d = a.clone();
    let mut e = b.clone();
    d.apply_two_site_gate_then_swap(0, &UnitaryGate::controlled_phase(1)).unwrap();
    e.apply_two_site_gate(0, &UnitaryGate::cp_swap(1)).unwrap();
    assert!(max_diff(&d.to_state_vector().unwrap(), &e.to_state_vector().unwrap()) < 1e-12);
}

#[test]
fn density_matrices() {
    let b = bell();
    for m in 0..2 {
        let rho = b.reduced_density_nonlocal(m).unwrap();
        assert!((rho.diagonal()[0] - 0.5).abs() < 1e-14 && (rho.diagonal()[1] - 0.5).abs() < 1e-14);
        let local = b.reduced_density_local(m).unwrap();
        assert!(local.max_abs_diff(&rho) < 1e-14);
    }
    let p = MpsState::new_product_state(&[2], &[1]).unwrap();
    assert_eq!(p.reduced_density_nonlocal(0).unwrap().diagonal(), vec![0.0, 1.0]);

    let r = random_circuit_state(4, 2);
    let v = r.to_state_vector().unwrap();
    for m in 0..4 {
        let rho = r.reduced_density_nonlocal(m).unwrap();
        let dense = dense_density(&v, &[2, 2, 2, 2], m);
        assert!(rho.matrix().to_complex().max_abs_diff(&dense) < 1e-10);
    }
}

#[test]
fn local_density_requires_flags() {
    let mut s = MpsState::new_product_state(&[4], &[0]).unwrap();
    s.decompose_site(0, 2, 2, SplitMethod::Trivial).unwrap();
    s.insert_site(1, &[1.0, 0.0], SiteLabel::Qudit(9)).unwrap();
    // the identity factor sits at the right edge, so site 0 is readable
    assert!(s.reduced_density_local(0).is_ok());
    let err = s.reduced_density_local(2);
    assert!(matches!(err, Err(MpsError::NotCanonical { bond: 1 })), "{err:?}");
    s.canonicalize().unwrap();
    assert!(s.reduced_density_local(2).is_ok());
}

#[test]
fn sweeps_restore_ranks_and_canonical_weights() {
    let mut s = MpsState::new_product_state(&[2, 2, 2], &[0, 1, 0]).unwrap();
    s.sweep(Direction::Right, 0..2).unwrap();
    assert_eq!(s.bond_dims(), vec![1, 1]);

    // Bell pair with an inflated bond: contract into a 4-level site, split trivially
    let mut b = bell();
    b.contract_sites(0).unwrap();
    b.insert_site(1, &[1.0, 0.0], SiteLabel::Qudit(5)).unwrap();
    b.decompose_site(0, 2, 2, SplitMethod::Trivial).unwrap();
    assert!(b.bond_dims()[0] >= 2);
    b.canonicalize().unwrap();
    assert_eq!(b.bond_dims(), vec![2, 1]);

    let mut r = random_circuit_state(6, 8);
    r.canonicalize().unwrap();
    for k in 0..r.bond_count() {
        assert!((r.bond_weights(k).norm_sqr() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn double_sweep_weights_match_dense_svd() {
    for seed in 0..5 {
        let mut r = random_circuit_state(6, seed);
        let v = r.to_state_vector().unwrap();
        r.canonicalize().unwrap();
        for k in 0..r.bond_count() {
            let sv = dense_singular_values(&v, 1 << (k + 1), 1 << (5 - k));
            let w = r.bond_weights(k).as_slice();
            assert_eq!(w.len(), sv.len(), "seed {seed} bond {k}");
            for (a, b) in w.iter().zip(&sv) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn measurement_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut b = bell();
    assert_eq!(b.measure_qudit(0, &mut rng, Some(1)).unwrap(), 1);
    assert_eq!(b.bond_dims(), vec![1]);
    assert!(max_diff(&b.to_state_vector().unwrap(), &[c(0.0), c(0.0), c(0.0), c(1.0)]) < 1e-12);

    let mut g = ghz(3);
    g.measure_qudit(1, &mut rng, Some(0)).unwrap();
    assert_eq!(g.bond_dims(), vec![1, 1]);

    let mut b = bell();
    assert!(matches!(b.measure_qudit(0, &mut rng, Some(5)), Err(MpsError::InvalidArgument(_))));
    let mut z = MpsState::new_product_state(&[2], &[0]).unwrap();
    assert!(matches!(z.measure_qudit(0, &mut rng, Some(1)), Err(MpsError::ZeroProbability { outcome: 1 })));
}

#[test]
fn plus_state_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut plus = MpsState::new_product_state(&[2], &[0]).unwrap();
    plus.apply_single_qudit_gate(0, &UnitaryGate::hadamard()).unwrap();
    let trials = 10_000;
    let ones = (0..trials).filter(|_| plus.clone().measure_qudit(0, &mut rng, None).unwrap() == 1).count();
    let sigma = (trials as f64 * 0.25).sqrt();
    assert!((ones as f64 - trials as f64 / 2.0).abs() < 5.0 * sigma, "{ones}");
}

#[test]
fn unnormalized_state_is_rejected() {
    let m = Matrix::<f64>::from_vec(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
    assert!(UnitaryGate::new(m).is_err());
    let site = shor_mps::mps::SiteTensor::new(1, 2, 1, vec![0.5, 0.0]).unwrap();
    let mut s = MpsState::from_real_parts(vec![site], vec![], vec![SiteLabel::Qudit(0)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(matches!(s.measure_qudit(0, &mut rng, None), Err(MpsError::Normalization { .. })));
}

#[test]
fn remove_and_insert_sites() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut b = bell();
    assert!(matches!(b.remove_separable_site(0), Err(MpsError::NotSeparable { .. })));

    let mut g = ghz(3);
    g.measure_qudit(2, &mut rng, Some(1)).unwrap();
    g.remove_separable_site(2).unwrap();
    assert_eq!(g.len(), 2);
    assert!(max_diff(&g.to_state_vector().unwrap(), &[c(0.0), c(0.0), c(0.0), c(1.0)]) < 1e-12);

    let mut p = MpsState::new_product_state(&[2, 2], &[0, 1]).unwrap();
    p.insert_site(0, &[1.0, 1.0], SiteLabel::Qudit(7)).unwrap();
    assert_eq!(p.bond_dims(), vec![1, 1]);
    let v = p.to_state_vector().unwrap();
    assert!((v[1].re - H).abs() < 1e-15 && (v[5].re - H).abs() < 1e-15);

    let mut b = bell();
    b.insert_site(1, &[0.0, 1.0], SiteLabel::Qudit(2)).unwrap();
    assert_eq!(b.bond_dims(), vec![2, 2]);
    assert!(b.is_canonical());
    let v = b.to_state_vector().unwrap();
    assert!(max_diff(&v, &[c(0.0), c(0.0), c(H), c(0.0), c(0.0), c(0.0), c(0.0), c(H)]) < 1e-14);

    let mut b = bell();
    b.insert_site(2, &[1.0, 1.0], SiteLabel::Qudit(2)).unwrap();
    b.measure_qudit(2, &mut rng, None).unwrap();
    b.remove_separable_site(2).unwrap();
    assert!(max_diff(&b.to_state_vector().unwrap(), &bell().to_state_vector().unwrap()) < 1e-12);
}

#[test]
fn promotion_doubles_the_tally() {
    let mut b = bell();
    let v = b.to_state_vector().unwrap();
    let live = b.accountant().live();
    assert_eq!(b.mode(), ScalarMode::Real);
    assert!(b.promote_to_complex().unwrap());
    assert_eq!(b.mode(), ScalarMode::Complex);
    assert_eq!(b.accountant().live(), 2 * live);
    assert_eq!(b.to_state_vector().unwrap(), v);
    assert!(!b.promote_to_complex().unwrap());
}

#[test]
fn ranks_of_standard_states() {
    let p = MpsState::new_product_state(&[2, 2, 2], &[1, 0, 1]).unwrap();
    assert_eq!(p.schmidt_ranks("p").unwrap().ranks, vec![1, 1]);
    assert_eq!(bell().schmidt_ranks("b").unwrap().ranks, vec![2]);
    assert_eq!(ghz(4).schmidt_ranks("g").unwrap().ranks, vec![2, 2, 2]);
}

#[test]
fn state_vector_cap() {
    let mut s = MpsState::new_product_state(&[2, 2, 2], &[0, 0, 0]).unwrap();
    s.set_state_vector_cap(4);
    assert!(matches!(s.to_state_vector(), Err(MpsError::TooLarge { dim: 8, cap: 4 })));
}

#[test]
fn controlled_relabel_matches_dense() {
    // qudit of dim 3 in a superposition; relabel 0->1, 1->3, 2->0 into dim 4
    let mut s = MpsState::new_product_state(&[3], &[0]).unwrap();
    let mut f = Matrix::<f64>::zeros(3, 3);
    let v = [0.6, 0.0, 0.8];
    let w = [0.0, 1.0, 0.0];
    let u = [0.8, 0.0, -0.6];
    for i in 0..3 {
        f[(i, 0)] = v[i];
        f[(i, 1)] = w[i];
        f[(i, 2)] = u[i];
    }
    s.apply_single_qudit_gate(0, &UnitaryGate::new(f).unwrap()).unwrap();
    let image = [1, 3, 0];
    for side in [Side::Left, Side::Right] {
        let mut t = s.clone();
        let pos = t.insert_controlled_relabel(0, side, SiteLabel::Upper(0), &image, 4).unwrap();
        let amp = t.to_state_vector().unwrap();
        let mut expect = vec![c(0.0); 8];
        for (x, &a) in v.iter().enumerate() {
            // control 0 keeps x, control 1 sends it to image[x]
            let (i0, i1) = match side {
                Side::Left => (x, 4 + image[x]),
                Side::Right => (x * 2, image[x] * 2 + 1),
            };
            expect[i0] += c(a * H);
            expect[i1] += c(a * H);
        }
        assert_eq!(pos, if side == Side::Left { 1 } else { 0 });
        assert!(max_diff(&amp, &expect) < 1e-14, "{side:?}");
    }
}

#[test]
fn element_limit_trips() {
    let mut s = random_circuit_state(4, 1);
    s.set_element_limit(Some(4));
    assert!(matches!(s.swap_sites(0), Err(MpsError::MemoryLimit { .. })));
}

#[test]
fn svd_matches_eigenvalues_of_gram() {
    let m = Matrix::<f64>::from_fn(4, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
    let d = svd_truncated(&m, 1e-12).unwrap();
    let gram = m.transpose().matmul(&m).unwrap();
    // trace and Frobenius norm of the Gram matrix fix the sums of σ² and σ⁴
    let tr: f64 = (0..3).map(|i| gram[(i, i)]).sum();
    assert!((d.weights.iter().map(|s| s * s).sum::<f64>() - tr).abs() < 1e-10);
    let f2: f64 = gram.as_slice().iter().map(|x| x * x).sum();
    assert!((d.weights.iter().map(|s| s.powi(4)).sum::<f64>() - f2).abs() < 1e-8);
}

#[test]
fn snapshot_round_trip_is_bit_exact() {
    for complex in [false, true] {
        let mut s = random_circuit_state(5, 4);
        if complex {
            s.promote_to_complex().unwrap();
            s.apply_two_site_gate(1, &UnitaryGate::cp_swap(1)).unwrap();
        }
        let mut buf = Vec::new();
        let side = shor_mps::mps::write_snapshot(&s, &mut buf).unwrap();
        let json = serde_json::to_string(&side).unwrap();
        let back: shor_mps::mps::SnapshotSidecar = serde_json::from_str(&json).unwrap();
        let t = shor_mps::mps::read_snapshot(&mut buf.as_slice(), &back).unwrap();
        let mut buf2 = Vec::new();
        shor_mps::mps::write_snapshot(&t, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
        assert_eq!(t.layout(), s.layout());
        assert_eq!(t.status(), s.status());
        assert_eq!(t.to_state_vector().unwrap(), s.to_state_vector().unwrap());
    }
    let mut bad = b"MPS0".to_vec();
    bad.extend_from_slice(&[0; 16]);
    let side = shor_mps::mps::SnapshotSidecar { mode: ScalarMode::Real, layout: vec![], status: vec![] };
    assert!(shor_mps::mps::read_snapshot(&mut bad.as_slice(), &side).is_err());
}
