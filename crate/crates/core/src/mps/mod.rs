//! Matrix product states in Γ–λ form.
//!
//! A state on `n` sites is stored as
//!
//! ```text
//! Γ[0] -- λ[0] -- Γ[1] -- λ[1] -- ... -- λ[n-2] -- Γ[n-1]
//!  |               |                                 |
//! ```
//!
//! where each `Γ[m]` is a three-index [`SiteTensor`] `(left bond, physical,
//! right bond)` and each `λ[m]` is a [`BondWeights`] vector. Contracting the
//! chain with the weights inserted yields the amplitudes.
//!
//! Orthonormality is tracked per bond by a [`BondStatus`]. Bond `b` is
//! *left-orthonormal* when the vectors obtained by contracting
//! `Γ[0] λ[0] ... Γ[b]` over everything but the bond index are orthonormal,
//! and *right-orthonormal* when the same holds for `Γ[b+1] λ[b+1] ... Γ[n-1]`.
//! A bond with both flags set stores its Schmidt coefficients in `λ[b]`.
//! Flags are cleared whenever an operation can no longer vouch for them.
//!
//! Bonds created by a trivial decomposition carry all-ones weights; they are
//! exact but not canonical until swept.
//!
//! Element counts are tracked by an [`ElementAccountant`] in units of 64-bit
//! components (one per real element, two per complex element). Only site
//! tensors are counted; bond weights are always real and are excluded so that
//! promotion doubles the tally exactly.

mod chain;
mod gates;
mod measure;
mod ops;
mod snapshot;

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{ScalarMode, TensorError, DEFAULT_TRUNCATION};

pub(crate) use chain::Chain;
pub use gates::UnitaryGate;
pub use measure::{DensityMatrix, DensityRoute};
pub use ops::{Direction, Side, SplitMethod};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotSidecar, SNAPSHOT_MAGIC};

/// Default cap on the dimension of a contracted state vector.
pub const DEFAULT_STATE_VECTOR_CAP: usize = 1 << 26;

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("site index {index} out of range for {len} sites")]
    SiteOutOfRange { index: usize, len: usize },

    #[error("bond index {index} out of range for {len} bonds")]
    BondOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gate is not unitary within {tol:e}")]
    NotUnitary { tol: f64 },

    #[error("local reduced density matrix needs canonical bonds; bond {bond} is not orthonormal")]
    NotCanonical { bond: isize },

    #[error("site {site} is entangled (bond dims {left_dim}, {right_dim})")]
    NotSeparable { site: usize, left_dim: usize, right_dim: usize },

    #[error("probability mass {mass} deviates from 1 by more than 1e-6 or has a negative entry")]
    Normalization { mass: f64 },

    #[error("forced outcome {outcome} has zero probability")]
    ZeroProbability { outcome: usize },

    #[error("state of dimension {dim} exceeds the dense cap {cap}")]
    TooLarge { dim: u128, cap: usize },

    #[error("element limit exceeded: {requested} units requested, limit {limit}")]
    MemoryLimit { requested: u64, limit: u64 },

    #[error("operation needs {expected} scalars but the state is {found}")]
    WrongMode { expected: ScalarMode, found: ScalarMode },

    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type MpsResult<T> = Result<T, MpsError>;

/// What physical system a site holds.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteLabel {
    /// Generic qudit, used by states not tied to the factoring circuit.
    Qudit(usize),
    /// Upper-register qubit `q_i`.
    Upper(usize),
    /// The lower register, held as one qudit.
    Lower,
    /// Several systems contracted into one site, in physical-index order.
    Merged(Vec<SiteLabel>),
}

impl fmt::Display for SiteLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Qudit(i) => write!(f, "s{i}"),
            Self::Upper(i) => write!(f, "q{i}"),
            Self::Lower => f.write_str("R"),
            Self::Merged(parts) => {
                f.write_str("[")?;
                for (k, p) in parts.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Γ tensor of one site, indexed `(left, physical, right)` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor<T> {
    pub(crate) left: usize,
    pub(crate) phys: usize,
    pub(crate) right: usize,
    pub(crate) data: Vec<T>,
}

impl<T> SiteTensor<T> {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.left, self.phys, self.right)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub(crate) fn idx(&self, l: usize, p: usize, r: usize) -> usize {
        (l * self.phys + p) * self.right + r
    }
}

/// λ vector of one bond: nonnegative and, after an SVD, descending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondWeights(pub Vec<f64>);

impl BondWeights {
    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }
}

/// Orthonormality of the two half-chains meeting at a bond.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BondStatus {
    pub left: bool,
    pub right: bool,
}

impl BondStatus {
    pub const CANONICAL: Self = Self { left: true, right: true };
    pub const NONE: Self = Self { left: false, right: false };

    pub fn is_canonical(self) -> bool {
        self.left && self.right
    }
}

/// Per-bond Schmidt ranks captured at a named stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankProfile {
    pub stage: String,
    pub ranks: Vec<usize>,
    pub layout: Vec<SiteLabel>,
}

impl RankProfile {
    pub fn max_rank(&self) -> usize {
        self.ranks.iter().copied().max().unwrap_or(1)
    }
}

/// Running tally of live scalar components, with a peak and an optional limit.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementAccountant {
    live: u64,
    peak: u64,
    limit: Option<u64>,
}

impl ElementAccountant {
    pub fn live(&self) -> u64 {
        self.live
    }

    pub fn peak(&self) -> u64 {
        self.peak
    }

    pub fn limit(&self) -> Option<u64> {
        self.limit
    }

    /// Restarts peak tracking from the current live count.
    pub fn reset_peak(&mut self) {
        self.peak = self.live;
    }

    fn set_live(&mut self, live: u64) {
        self.live = live;
        self.peak = self.peak.max(live);
    }

    /// Admits a prospective footprint of `total` units (live data plus any
    /// workspace) or fails with [`MpsError::MemoryLimit`].
    fn admit(&mut self, total: u64) -> MpsResult<()> {
        if let Some(limit) = self.limit {
            if total > limit {
                return Err(MpsError::MemoryLimit { requested: total, limit });
            }
        }
        self.peak = self.peak.max(total);
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub(crate) enum ChainData {
    Real(Chain<f64>),
    Complex(Chain<C64>),
}

macro_rules! with_chain {
    ($data:expr, $c:ident => $body:expr) => {
        match $data {
            $crate::mps::ChainData::Real($c) => $body,
            $crate::mps::ChainData::Complex($c) => $body,
        }
    };
}
pub(crate) use with_chain;

/// A matrix product state with layout labels, orthonormality flags and element
/// accounting.
#[derive(Clone, Debug)]
pub struct MpsState {
    pub(crate) chain: ChainData,
    pub(crate) layout: Vec<SiteLabel>,
    pub(crate) status: Vec<BondStatus>,
    pub(crate) accountant: ElementAccountant,
    pub(crate) truncation: f64,
    pub(crate) state_vector_cap: usize,
}

impl MpsState {
    /// Product state `|v_0> ⊗ |v_1> ⊗ ...` with `v_m < dims[m]`, real mode,
    /// sites labelled `Qudit(m)`.
    pub fn new_product_state(dims: &[usize], values: &[usize]) -> MpsResult<Self> {
        let labels = (0..dims.len()).map(SiteLabel::Qudit).collect();
        Self::new_product_state_labeled(dims, values, labels)
    }

    pub fn new_product_state_labeled(dims: &[usize], values: &[usize], layout: Vec<SiteLabel>) -> MpsResult<Self> {
        if dims.is_empty() {
            return Err(MpsError::InvalidArgument("a state needs at least one site".into()));
        }
        if dims.len() != values.len() || dims.len() != layout.len() {
            return Err(MpsError::InvalidArgument(format!(
                "{} dims, {} values, {} labels",
                dims.len(),
                values.len(),
                layout.len()
            )));
        }
        for (m, (&d, &v)) in dims.iter().zip(values).enumerate() {
            if d == 0 || v >= d {
                return Err(MpsError::InvalidArgument(format!("site {m}: value {v} not below dim {d}")));
            }
        }
        let chain = Chain::<f64>::product(dims, values);
        let n = dims.len();
        let mut state = Self {
            chain: ChainData::Real(chain),
            layout,
            status: vec![BondStatus::CANONICAL; n - 1],
            accountant: ElementAccountant::default(),
            truncation: DEFAULT_TRUNCATION,
            state_vector_cap: DEFAULT_STATE_VECTOR_CAP,
        };
        state.refresh_live();
        Ok(state)
    }

    /// Builds a real state from explicit tensors. All bonds are flagged
    /// non-orthonormal.
    pub fn from_real_parts(sites: Vec<SiteTensor<f64>>, bonds: Vec<BondWeights>, layout: Vec<SiteLabel>) -> MpsResult<Self> {
        Self::from_chain(ChainData::Real(Chain::from_parts(sites, bonds)?), layout)
    }

    /// Complex counterpart of [`MpsState::from_real_parts`].
    pub fn from_complex_parts(sites: Vec<SiteTensor<C64>>, bonds: Vec<BondWeights>, layout: Vec<SiteLabel>) -> MpsResult<Self> {
        Self::from_chain(ChainData::Complex(Chain::from_parts(sites, bonds)?), layout)
    }

    fn from_chain(chain: ChainData, layout: Vec<SiteLabel>) -> MpsResult<Self> {
        let n = with_chain!(&chain, c => c.len());
        if n != layout.len() {
            return Err(MpsError::InvalidArgument("layout length differs from site count".into()));
        }
        let mut state = Self {
            chain,
            layout,
            status: vec![BondStatus::NONE; n - 1],
            accountant: ElementAccountant::default(),
            truncation: DEFAULT_TRUNCATION,
            state_vector_cap: DEFAULT_STATE_VECTOR_CAP,
        };
        state.refresh_live();
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.layout.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layout.is_empty()
    }

    pub fn bond_count(&self) -> usize {
        self.len().saturating_sub(1)
    }

    pub fn mode(&self) -> ScalarMode {
        match self.chain {
            ChainData::Real(_) => ScalarMode::Real,
            ChainData::Complex(_) => ScalarMode::Complex,
        }
    }

    pub fn layout(&self) -> &[SiteLabel] {
        &self.layout
    }

    pub fn position_of(&self, label: &SiteLabel) -> Option<usize> {
        self.layout.iter().position(|l| l == label)
    }

    pub fn status(&self) -> &[BondStatus] {
        &self.status
    }

    pub fn is_canonical(&self) -> bool {
        self.status.iter().all(|s| s.is_canonical())
    }

    /// `(left bond, physical, right bond)` of site `m`.
    pub fn site_dims(&self, m: usize) -> (usize, usize, usize) {
        with_chain!(&self.chain, c => c.sites[m].dims())
    }

    pub fn physical_dims(&self) -> Vec<usize> {
        (0..self.len()).map(|m| self.site_dims(m).1).collect()
    }

    /// Current bond dimensions, which are Schmidt ranks only where the
    /// construction guarantees it (see [`MpsState::schmidt_ranks`]).
    pub fn bond_dims(&self) -> Vec<usize> {
        with_chain!(&self.chain, c => c.bonds.iter().map(|b| b.len()).collect())
    }

    pub fn bond_weights(&self, b: usize) -> &BondWeights {
        with_chain!(&self.chain, c => &c.bonds[b])
    }

    pub fn accountant(&self) -> &ElementAccountant {
        &self.accountant
    }

    pub fn reset_peak(&mut self) {
        self.accountant.reset_peak();
    }

    pub fn set_element_limit(&mut self, limit: Option<u64>) {
        self.accountant.limit = limit;
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn set_truncation(&mut self, tol: f64) {
        self.truncation = tol;
    }

    pub fn set_state_vector_cap(&mut self, cap: usize) {
        self.state_vector_cap = cap;
    }

    /// Scalar elements stored in site tensors (not accounting units).
    pub fn element_count(&self) -> u64 {
        with_chain!(&self.chain, c => c.element_count())
    }

    pub(crate) fn units(&self) -> u64 {
        self.mode().units()
    }

    pub(crate) fn refresh_live(&mut self) {
        let live = self.element_count() * self.units();
        self.accountant.set_live(live);
    }

    /// Checks that `added` new elements plus `workspace` temporaries, alive
    /// alongside everything already stored, stay within the limit. Arguments
    /// are element counts, converted to units here.
    pub(crate) fn admit(&mut self, added: u64, workspace: u64) -> MpsResult<()> {
        let total = (self.element_count() + added + workspace) * self.units();
        self.accountant.admit(total)
    }

    pub(crate) fn check_site(&self, m: usize) -> MpsResult<()> {
        if m >= self.len() {
            return Err(MpsError::SiteOutOfRange { index: m, len: self.len() });
        }
        Ok(())
    }

    pub(crate) fn check_bond(&self, b: usize) -> MpsResult<()> {
        if b >= self.bond_count() {
            return Err(MpsError::BondOutOfRange { index: b, len: self.bond_count() });
        }
        Ok(())
    }

    /// Left flag of bond `b`, with the left boundary (`b < 0`) always
    /// orthonormal.
    pub(crate) fn left_ok(&self, b: isize) -> bool {
        b < 0 || self.status[b as usize].left
    }

    /// Right flag of bond `b`, with the right boundary always orthonormal.
    pub(crate) fn right_ok(&self, b: isize) -> bool {
        b >= self.bond_count() as isize || self.status[b as usize].right
    }

    /// Converts every site to complex scalars. Returns `false` (and logs a
    /// warning) if the state was already complex.
    pub fn promote_to_complex(&mut self) -> MpsResult<bool> {
        let promoted = match &self.chain {
            ChainData::Real(c) => {
                // real and complex copies coexist during the conversion
                let n = c.element_count();
                self.accountant.admit(n * (ScalarMode::Real.units() + ScalarMode::Complex.units()))?;
                c.to_complex()
            }
            ChainData::Complex(_) => {
                log::warn!("promote_to_complex called on a complex state; ignoring");
                return Ok(false);
            }
        };
        self.chain = ChainData::Complex(promoted);
        self.refresh_live();
        Ok(true)
    }

    /// Full contraction into amplitudes, in lexicographic order of the
    /// physical indices in site order (site 0 most significant).
    pub fn to_state_vector(&self) -> MpsResult<Vec<C64>> {
        let dim = self.physical_dims().iter().map(|&d| d as u128).product::<u128>();
        if dim > self.state_vector_cap as u128 {
            return Err(MpsError::TooLarge { dim, cap: self.state_vector_cap });
        }
        Ok(with_chain!(&self.chain, c => c.contract_all()))
    }

    /// 2-norm of the full contraction, computed by transfer matrices.
    pub fn norm(&self) -> f64 {
        with_chain!(&self.chain, c => c.norm_sqr()).sqrt()
    }

    /// True Schmidt ranks of every bond. Bonds that are not flagged canonical
    /// are handled by a double sweep on a working copy.
    pub fn schmidt_ranks(&self, stage: &str) -> MpsResult<RankProfile> {
        let ranks = if self.is_canonical() {
            self.bond_dims()
        } else {
            let mut work = self.clone();
            work.accountant.limit = None;
            work.canonicalize()?;
            work.bond_dims()
        };
        Ok(RankProfile { stage: stage.to_string(), ranks, layout: self.layout.clone() })
    }

    /// Bond dimensions as a profile, without any canonicalization.
    pub fn bond_profile(&self, stage: &str) -> RankProfile {
        RankProfile { stage: stage.to_string(), ranks: self.bond_dims(), layout: self.layout.clone() }
    }
}

impl<T: crate::tensor::Scalar> SiteTensor<T> {
    pub fn new(left: usize, phys: usize, right: usize, data: Vec<T>) -> MpsResult<Self> {
        if left == 0 || phys == 0 || right == 0 || data.len() != left * phys * right {
            return Err(MpsError::InvalidArgument(format!(
                "site tensor ({left}, {phys}, {right}) with {} elements",
                data.len()
            )));
        }
        Ok(Self { left, phys, right, data })
    }

    pub fn get(&self, l: usize, p: usize, r: usize) -> T {
        self.data[self.idx(l, p, r)]
    }
}
