use rand::Rng;

use super::{Layout, ShorError, ShorResult, ShorState};
use crate::mps::{DensityRoute, Direction, SiteLabel, UnitaryGate};
use crate::tensor::ScalarMode;

/// Measures `R` (or projects onto `forced`), then removes it. Returns the
/// observed residue.
///
/// In the static layout the probabilities come from a full contraction. In
/// the dynamic layout one right sweep across B suffices: the A side is
/// right-orthonormal as built, so the density matrix of `R` is local.
pub fn measure_lower_register<R: Rng + ?Sized>(state: &mut ShorState, rng: &mut R, forced: Option<u64>) -> ShorResult<u64> {
    let m = state.require_lower()?;
    let forced_idx = match forced {
        Some(v) => Some(
            state
                .lower
                .index_of(v)
                .ok_or_else(|| ShorError::InvalidArgument(format!("residue {v} is not in the lower-register basis")))?,
        ),
        None => None,
    };
    let at = ShorError::at("measure lower");
    let route = match state.layout {
        Some(Layout::Dynamic) => {
            state.mps.sweep(Direction::Right, 0..m).map_err(&at)?;
            DensityRoute::Local
        }
        Some(Layout::Static) => DensityRoute::Nonlocal,
        None => return Err(ShorError::InvalidState("modexp has not run".into())),
    };
    let k = state.mps.measure_qudit_via(m, rng, forced_idx, route).map_err(&at)?;
    state.mps.remove_separable_site(m).map_err(&at)?;
    Ok(state.lower.residues()[k])
}

/// Fourier transform on the upper register in nearest-neighbour form, with
/// each qubit measured as soon as its last gate is done. Returns the bits in
/// measurement order.
///
/// The qubits are first arranged as `[q_{n-1}, ..., q_0]`. Block `b` applies a
/// Hadamard at position 0, then fused controlled-phase-and-swap gates that
/// carry that qubit to position `n-1-b`, where it is measured.
pub fn apply_lnn_qft<R: Rng + ?Sized>(state: &mut ShorState, rng: &mut R) -> ShorResult<Vec<u8>> {
    if state.lower_position().is_some() {
        return Err(ShorError::InvalidState("the lower register must be measured first".into()));
    }
    if state.mps.mode() != ScalarMode::Complex {
        return Err(ShorError::InvalidState("the QFT needs a complex-mode state".into()));
    }
    let n = state.mps.len();
    let at = ShorError::at("qft");
    for p in 0..n {
        let want = SiteLabel::Upper(n - 1 - p);
        let cur = state
            .mps
            .position_of(&want)
            .ok_or_else(|| ShorError::InvalidState(format!("site {want} is missing")))?;
        if cur < p {
            return Err(ShorError::InvalidState(format!("site {want} appears twice")));
        }
        for q in (p..cur).rev() {
            state.mps.swap_sites(q).map_err(&at)?;
        }
    }
    state.mps.ensure_canonical().map_err(&at)?;

    let hadamard = UnitaryGate::hadamard();
    let mut bits = Vec::with_capacity(n);
    for b in 0..n {
        state.mps.apply_single_qudit_gate(0, &hadamard).map_err(&at)?;
        for x in 1..n - b {
            state.mps.apply_two_site_gate_then_swap(x - 1, &UnitaryGate::controlled_phase(x as u32)).map_err(&at)?;
        }
        let outcome = state.mps.measure_qudit(n - 1 - b, rng, None).map_err(&at)?;
        bits.push(outcome as u8);
    }
    Ok(bits)
}

/// Reads the measured bits as `s = Σ_b bits[b]·2^b`: the first qubit measured
/// is the least significant bit.
pub fn assemble_s(bits: &[u8], upper_qubits: usize) -> ShorResult<u64> {
    if bits.len() != upper_qubits || upper_qubits > 63 {
        return Err(ShorError::InvalidArgument(format!("expected {upper_qubits} bits, got {}", bits.len())));
    }
    let mut s = 0u64;
    for (b, &bit) in bits.iter().enumerate() {
        if bit > 1 {
            return Err(ShorError::InvalidArgument(format!("bit {b} has value {bit}")));
        }
        s |= (bit as u64) << b;
    }
    Ok(s)
}
