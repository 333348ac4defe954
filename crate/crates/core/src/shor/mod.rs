//! Order finding on the MPS core.
//!
//! The upper register is created lazily: each qubit `q_i` enters next to the
//! lower-register site `R` in `|+>` and immediately controls `U^(2^i)`, which
//! acts on `R` as a relabeling of its residue basis. Two layouts are offered.
//!
//! * Static: every qubit is inserted to the left of `R`, processing `i` from
//!   `2l-1` down to 0, giving `[q_{2l-1} ... q_0][R]`.
//! * Dynamic: qubits go left of `R` until the rank next to `R` stops growing
//!   and then rises again. The qubit that caused the rise is swapped across
//!   `R` and every later qubit is inserted on its right, giving
//!   `[B][R][q_0 ... q_{α-1}]`.
//!
//! # Why one stalled gate is enough to call a plateau
//!
//! Let `r = β·2^α` with `β` odd. For `i ≥ α` the multiplier `a^(2^i)` lies in
//! the cyclic subgroup of order `β`, and after `k` such gates the reachable
//! residues are `g^(y·2^m)` for `y < 2^k` with `g` a generator of that
//! subgroup. Since `2^m` is invertible modulo `β`, there are exactly
//! `min(2^k, β)` of them. The rank next to `R` therefore doubles strictly
//! until it reaches `β` and cannot stall before. Because `r < N < 2^l`, at
//! least one gate with `i ≥ α` stalls before `q_{α-1}` arrives, and the gate
//! on `q_{α-1}` doubles the rank to `2β`. So the first rise after a stall
//! happens exactly at `i = α - 1`, and `α̂ = i + 1`.

mod pipeline;
mod qft;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mps::{MpsError, MpsState, RankProfile, Side, SiteLabel};
use crate::numtheory::{mul_mod, NumError, SemiprimeInstance};
use crate::oracle::{power_residues, OracleError, StateVector};

pub use pipeline::{sample_run, PipelineConfig, SampleRecord};
pub use qft::{apply_lnn_qft, assemble_s, measure_lower_register};

/// Default element guard, in 64-bit units (4 GiB).
pub const DEFAULT_MAX_ELEMENTS: u64 = 1 << 29;

#[derive(Debug, Error)]
pub enum ShorError {
    #[error("element limit exceeded during {stage}: {requested} units requested, limit {limit}")]
    MemoryLimit { stage: String, requested: u64, limit: u64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Mps(MpsError),

    #[error(transparent)]
    Number(#[from] NumError),

    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl ShorError {
    /// Attaches `stage` to memory-limit failures.
    pub(crate) fn at(stage: &str) -> impl Fn(MpsError) -> ShorError + '_ {
        move |e| match e {
            MpsError::MemoryLimit { requested, limit } => {
                ShorError::MemoryLimit { stage: stage.to_string(), requested, limit }
            }
            MpsError::WrongMode { .. } => ShorError::InvalidState(e.to_string()),
            other => ShorError::Mps(other),
        }
    }
}

impl From<MpsError> for ShorError {
    fn from(e: MpsError) -> Self {
        ShorError::at("unknown")(e)
    }
}

pub type ShorResult<T> = Result<T, ShorError>;

/// Physical basis of the lower-register site: residues in order of first
/// appearance, starting from 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowerRegisterIndex {
    modulus: u64,
    residues: Vec<u64>,
    lookup: HashMap<u64, usize>,
}

impl LowerRegisterIndex {
    pub fn new(modulus: u64) -> Self {
        Self { modulus, residues: vec![1], lookup: HashMap::from([(1, 0)]) }
    }

    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    pub fn dim(&self) -> usize {
        self.residues.len()
    }

    pub fn index_of(&self, residue: u64) -> Option<usize> {
        self.lookup.get(&residue).copied()
    }

    /// Maps every current residue `v` to `v·multiplier mod N`, appending any
    /// new residues. Returns the index image and the new dimension.
    pub fn extend(&mut self, multiplier: u64) -> (Vec<usize>, usize) {
        let current = self.residues.len();
        let mut image = Vec::with_capacity(current);
        for k in 0..current {
            let w = mul_mod(self.residues[k], multiplier, self.modulus);
            let idx = match self.lookup.get(&w) {
                Some(&j) => j,
                None => {
                    self.residues.push(w);
                    self.lookup.insert(w, self.residues.len() - 1);
                    self.residues.len() - 1
                }
            };
            image.push(idx);
        }
        (image, self.residues.len())
    }
}

/// Qudit ordering for the modular exponentiation stage.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Static,
    #[default]
    Dynamic,
}

impl std::fmt::Display for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Layout::Static => "static",
            Layout::Dynamic => "dynamic",
        })
    }
}

/// When the dynamic layout decides the plateau has been reached.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlateauPolicy {
    /// Consecutive gates that must leave the rank next to `R` unchanged
    /// before a rise triggers relocation.
    pub min_plateau_gates: usize,
}

impl Default for PlateauPolicy {
    fn default() -> Self {
        Self { min_plateau_gates: 1 }
    }
}

/// An MPS of the order-finding circuit together with its bookkeeping.
#[derive(Clone, Debug)]
pub struct ShorState {
    pub mps: MpsState,
    pub instance: SemiprimeInstance,
    pub lower: LowerRegisterIndex,
    /// Layout of the modexp stage, once run.
    pub layout: Option<Layout>,
    /// Detected boundary between B and A (dynamic layout only).
    pub alpha_hat: Option<u32>,
    /// Rank next to `R` after each gate, in processing order.
    pub rank_trace: Vec<(usize, usize)>,
}

/// The state before any gate: `R` alone in `|1>`.
pub fn build_initial(instance: &SemiprimeInstance) -> ShorState {
    let mps = MpsState::new_product_state_labeled(&[1], &[0], vec![SiteLabel::Lower]).expect("valid product state");
    ShorState {
        mps,
        instance: *instance,
        lower: LowerRegisterIndex::new(instance.n),
        layout: None,
        alpha_hat: None,
        rank_trace: Vec::new(),
    }
}

impl ShorState {
    pub fn lower_position(&self) -> Option<usize> {
        self.mps.position_of(&SiteLabel::Lower)
    }

    fn require_lower(&self) -> ShorResult<usize> {
        self.lower_position().ok_or_else(|| ShorError::InvalidState("lower register has been removed".into()))
    }

    /// Effective dimension of `R`.
    pub fn lower_dim(&self) -> usize {
        self.lower.dim()
    }

    /// Bond dims with the current layout, tagged `stage`.
    pub fn profile(&self, stage: &str) -> RankProfile {
        self.mps.bond_profile(stage)
    }

    /// Full contraction reordered to `[q_{2l-1}, ..., q_0, R]` with `R`
    /// indexed by the exponent of its residue, matching
    /// [`dense_modexp_state`](crate::oracle::dense_modexp_state).
    pub fn to_oracle_order(&self) -> ShorResult<StateVector> {
        let nq = self.instance.upper_qubits();
        let powers = power_residues(&self.instance)?;
        let exponent: HashMap<u64, usize> = powers.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let r = powers.len();
        let phys = self.mps.physical_dims();
        // For each site, the stride of its digit in the oracle ordering.
        let mut strides = Vec::with_capacity(phys.len());
        let mut seen = vec![false; nq];
        for (m, label) in self.mps.layout().iter().enumerate() {
            match label {
                SiteLabel::Upper(i) if *i < nq && !seen[*i] && phys[m] == 2 => {
                    seen[*i] = true;
                    strides.push(r << i);
                }
                SiteLabel::Lower => strides.push(1),
                other => return Err(ShorError::InvalidState(format!("unexpected site {other} in a modexp state"))),
            }
        }
        if seen.iter().any(|s| !s) || self.lower_position().is_none() {
            return Err(ShorError::InvalidState("modexp has not finished".into()));
        }
        let lower_map: Vec<usize> = self
            .lower
            .residues()
            .iter()
            .map(|v| exponent.get(v).copied().ok_or_else(|| ShorError::InvalidState(format!("residue {v} is not a power"))))
            .collect::<ShorResult<_>>()?;
        let src = self.mps.to_state_vector()?;
        let mut out = vec![num_complex::Complex64::new(0.0, 0.0); r << nq];
        let mut digits = vec![0usize; phys.len()];
        for (idx, z) in src.into_iter().enumerate() {
            let mut rem = idx;
            for m in (0..phys.len()).rev() {
                digits[m] = rem % phys[m];
                rem /= phys[m];
            }
            let mut dst = 0;
            for (m, label) in self.mps.layout().iter().enumerate() {
                dst += match label {
                    SiteLabel::Lower => lower_map[digits[m]],
                    _ => digits[m] * strides[m],
                };
            }
            out[dst] = z;
        }
        let mut dims = vec![2; nq];
        dims.push(r);
        Ok(StateVector::new(out, dims)?)
    }
}

/// Inserts `q_i` in `|+>` next to `R` on `side` and applies the controlled
/// multiplication by `a^(2^i) mod N`. Returns the rank of the new bond
/// between `q_i` and `R`.
pub fn apply_controlled_modexp(state: &mut ShorState, i: usize, side: Side) -> ShorResult<usize> {
    if i >= state.instance.upper_qubits() {
        return Err(ShorError::InvalidArgument(format!("qubit {i} is outside the upper register")));
    }
    if state.mps.position_of(&SiteLabel::Upper(i)).is_some() {
        return Err(ShorError::InvalidState(format!("qubit q{i} is already present")));
    }
    let t = state.require_lower()?;
    let multiplier = state.instance.gate_multiplier(i);
    let mut lower = state.lower.clone();
    let (image, new_dim) = lower.extend(multiplier);
    let stage = format!("modexp q{i}");
    let r_pos = state
        .mps
        .insert_controlled_relabel(t, side, SiteLabel::Upper(i), &image, new_dim)
        .map_err(ShorError::at(&stage))?;
    state.lower = lower;
    let bonds = state.mps.bond_dims();
    let rank = match side {
        Side::Left => bonds[r_pos - 1],
        Side::Right => bonds[r_pos],
    };
    state.rank_trace.push((i, rank));
    Ok(rank)
}

fn require_fresh(state: &ShorState) -> ShorResult<()> {
    if state.mps.len() != 1 || state.lower_dim() != 1 {
        return Err(ShorError::InvalidState("modexp needs a freshly built state".into()));
    }
    Ok(())
}

/// Static layout: every qubit enters on the left of `R`.
pub fn run_modexp_static(state: &mut ShorState) -> ShorResult<()> {
    require_fresh(state)?;
    for i in (0..state.instance.upper_qubits()).rev() {
        apply_controlled_modexp(state, i, Side::Left)?;
    }
    state.layout = Some(Layout::Static);
    Ok(())
}

/// Dynamic layout with plateau detection.
pub fn run_modexp_dynamic(state: &mut ShorState, policy: PlateauPolicy) -> ShorResult<()> {
    dynamic_pass(state, policy, false)
}

/// Runs the dynamic layout only until the plateau boundary is known, then
/// stops. Returns `α̂` (0 if no rise occurred, in which case every gate ran).
///
/// The qubits below the boundary only grow the A side, so stopping here
/// gives the same `α̂` as a full run at a fraction of the cost.
pub fn probe_plateau(state: &mut ShorState, policy: PlateauPolicy) -> ShorResult<u32> {
    dynamic_pass(state, policy, true)?;
    Ok(state.alpha_hat.unwrap_or(0))
}

fn dynamic_pass(state: &mut ShorState, policy: PlateauPolicy, stop_at_boundary: bool) -> ShorResult<()> {
    require_fresh(state)?;
    let mut previous = 1usize;
    let mut plateau_run = 0usize;
    let mut relocated = false;
    for i in (0..state.instance.upper_qubits()).rev() {
        if relocated {
            apply_controlled_modexp(state, i, Side::Right)?;
            continue;
        }
        let rank = apply_controlled_modexp(state, i, Side::Left)?;
        if rank == previous {
            plateau_run += 1;
        } else if rank > previous && plateau_run >= policy.min_plateau_gates.max(1) {
            let t = state.require_lower()?;
            state.mps.swap_sites(t - 1).map_err(ShorError::at("relocation"))?;
            state.alpha_hat = Some(i as u32 + 1);
            relocated = true;
            log::debug!("plateau at rank {previous}; q{i} moved across R");
            if stop_at_boundary {
                break;
            }
        } else {
            plateau_run = 0;
        }
        previous = rank;
    }
    if !relocated {
        state.alpha_hat = Some(0);
    }
    state.layout = Some(Layout::Dynamic);
    Ok(())
}

/// Runs the modexp stage in the given layout.
pub fn run_modexp(state: &mut ShorState, layout: Layout, policy: PlateauPolicy) -> ShorResult<()> {
    match layout {
        Layout::Static => run_modexp_static(state),
        Layout::Dynamic => run_modexp_dynamic(state, policy),
    }
}
