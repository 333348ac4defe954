//! Brute-force references for the simulator: the dense post-modexp state, the
//! exact output distribution of the order-finding circuit, dense Schmidt ranks
//! and the residue-counting rank formula.
//!
//! # Residue rank formula
//!
//! After modular exponentiation the state is
//! `2^-l Σ_x |x> |a^x mod N>` with `x = Σ_j b_j 2^j`. Split the upper qubits
//! into a set `J` and its complement `K`, and write `x = x_J + x_K`. Grouping
//! terms by `g = a^(x_J)` gives
//!
//! ```text
//! Σ_g ( Σ_{x_J : a^(x_J) = g} |x_J> ) ⊗ ( Σ_{x_K} |x_K> |g · a^(x_K)> )
//! ```
//!
//! The left vectors have disjoint supports for distinct `g`. On the right,
//! for each fixed `x_K` the residues `g · a^(x_K)` are distinct across `g`,
//! so the right vectors are orthogonal too. The Schmidt rank across
//! `J | K ∪ {R}` is therefore the number of distinct residues `a^(x_J)`. A cut
//! that puts `R` on the side of `J` is the same cut as `K | J ∪ {R}`.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::numtheory::{mul_mod, multiplicative_order, NumError, SemiprimeInstance};
use crate::tensor::{svd_truncated, Matrix};

/// Default cap on dense amplitude counts.
pub const DEFAULT_DENSE_CAP: usize = 1 << 26;

/// Relative singular-value threshold for dense ranks.
pub const DENSE_RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("dense state of {dim} amplitudes exceeds the cap {cap}")]
    TooLarge { dim: u128, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empirical counts are empty")]
    EmptyCounts,

    #[error(transparent)]
    Number(#[from] NumError),
}

pub type OracleResult<T> = Result<T, OracleError>;

/// Dense amplitudes over qudits of the given dimensions, first qudit most
/// significant.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<C64>,
    pub dims: Vec<usize>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>, dims: Vec<usize>) -> OracleResult<Self> {
        if dims.iter().product::<usize>() != amplitudes.len() {
            return Err(OracleError::InvalidArgument("amplitude count disagrees with dims".into()));
        }
        Ok(Self { amplitudes, dims })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dims, other.dims);
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// `Pr(S = s)` for every `s < 2^(2l)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionTable {
    pub l: u32,
    pub probabilities: Vec<f64>,
}

impl DistributionTable {
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// `a^k mod N` for `k = 0..r`: the residue basis the oracle uses for `R`.
pub fn power_residues(instance: &SemiprimeInstance) -> OracleResult<Vec<u64>> {
    let r = multiplicative_order(instance.a, instance.n)?;
    let mut out = Vec::with_capacity(r as usize);
    let mut v = 1u64;
    for _ in 0..r {
        out.push(v);
        v = mul_mod(v, instance.a, instance.n);
    }
    Ok(out)
}

/// The post-modexp state over `[q_{2l-1}, ..., q_0, R]`, with `R` indexed by
/// the exponent `k` of its residue `a^k` (see [`power_residues`]).
pub fn dense_modexp_state(instance: &SemiprimeInstance, cap: usize) -> OracleResult<StateVector> {
    let r = multiplicative_order(instance.a, instance.n)? as usize;
    let upper = instance.upper_dim() as u128;
    let dim = upper * r as u128;
    if dim > cap as u128 {
        return Err(OracleError::TooLarge { dim, cap });
    }
    let amp = C64::new(2f64.powi(-(instance.l as i32)), 0.0);
    let mut amplitudes = vec![C64::new(0.0, 0.0); dim as usize];
    for x in 0..upper as usize {
        amplitudes[x * r + x % r] = amp;
    }
    let mut dims = vec![2; instance.upper_qubits()];
    dims.push(r);
    StateVector::new(amplitudes, dims)
}

/// Output distribution of the measured upper register,
/// `Pr(s) = |Σ_{k<K} e^(2πi k r s / Q)|² / (Q K)` with `Q = 2^(2l)` and
/// `K = ceil(Q / r)`.
///
/// The sum is a geometric series and is evaluated in closed form; the tests
/// compare it against direct summation.
pub fn exact_distribution(l: u32, r: u64) -> OracleResult<DistributionTable> {
    if l == 0 || r == 0 || 2 * l > 40 {
        return Err(OracleError::InvalidArgument(format!("need l in 1..=20 and r >= 1, got l = {l}, r = {r}")));
    }
    let q = 1u64 << (2 * l);
    let k = q.div_ceil(r) as f64;
    let probabilities = (0..q)
        .map(|s| {
            // phase per term, reduced mod 1 in exact integer arithmetic
            let frac = ((r as u128 * s as u128) % q as u128) as f64 / q as f64;
            let half = std::f64::consts::PI * frac;
            let sin_half = half.sin();
            let mag2 = if sin_half.abs() < 1e-300 { k * k } else { ((k * half).sin() / sin_half).powi(2) };
            mag2 / (q as f64 * k)
        })
        .collect();
    Ok(DistributionTable { l, probabilities })
}

/// Rank of the amplitude matrix across `cut | rest`, where `cut` lists qudit
/// positions.
pub fn dense_schmidt_rank(state: &StateVector, cut: &[usize], cap: usize) -> OracleResult<usize> {
    let n = state.dims.len();
    if cut.iter().any(|&c| c >= n) {
        return Err(OracleError::InvalidArgument("cut names a missing qudit".into()));
    }
    if state.amplitudes.len() > cap {
        return Err(OracleError::TooLarge { dim: state.amplitudes.len() as u128, cap });
    }
    let mut in_cut = vec![false; n];
    for &c in cut {
        in_cut[c] = true;
    }
    let left: Vec<usize> = (0..n).filter(|&i| in_cut[i]).collect();
    let right: Vec<usize> = (0..n).filter(|&i| !in_cut[i]).collect();
    let rows: usize = left.iter().map(|&i| state.dims[i]).product();
    let cols: usize = right.iter().map(|&i| state.dims[i]).product();
    if rows == 1 || cols == 1 {
        return Ok(1);
    }
    let mut m = Matrix::<C64>::zeros(rows, cols);
    let mut digits = vec![0usize; n];
    for (idx, &z) in state.amplitudes.iter().enumerate() {
        if z == C64::new(0.0, 0.0) {
            continue;
        }
        let mut rem = idx;
        for i in (0..n).rev() {
            digits[i] = rem % state.dims[i];
            rem /= state.dims[i];
        }
        let row = left.iter().fold(0, |acc, &i| acc * state.dims[i] + digits[i]);
        let col = right.iter().fold(0, |acc, &i| acc * state.dims[i] + digits[i]);
        m[(row, col)] = z;
    }
    Ok(svd_truncated(&m, DENSE_RANK_TOLERANCE).map(|d| d.rank).unwrap_or(0))
}

/// Number of distinct residues `a^x mod N` as `x` ranges over every bit
/// assignment of the upper qubits in `qubits` (others zero). With
/// `include_lower`, the cut is `qubits ∪ {R} | rest`, counted over the
/// complement.
pub fn residue_rank_oracle(instance: &SemiprimeInstance, qubits: &[usize], include_lower: bool) -> usize {
    let total = instance.upper_qubits();
    let set: Vec<usize> = if include_lower {
        (0..total).filter(|i| !qubits.contains(i)).collect()
    } else {
        qubits.to_vec()
    };
    let n = instance.n;
    let mut seen = std::collections::HashSet::new();
    seen.insert(1u64);
    let mut frontier: Vec<u64> = vec![1];
    for &j in &set {
        let m = instance.gate_multiplier(j);
        let grown: Vec<u64> = frontier.iter().map(|&v| mul_mod(v, m, n)).filter(|v| !seen.contains(v)).collect();
        for &v in &grown {
            if seen.insert(v) {
                frontier.push(v);
            }
        }
    }
    seen.len()
}

/// Total variation distance between `p` and the normalized `counts`.
pub fn tvd(p: &DistributionTable, counts: &[u64]) -> OracleResult<f64> {
    if counts.len() != p.len() {
        return Err(OracleError::InvalidArgument(format!("{} counts for {} outcomes", counts.len(), p.len())));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(OracleError::EmptyCounts);
    }
    let t = total as f64;
    Ok(0.5 * p.probabilities.iter().zip(counts).map(|(&a, &c)| (a - c as f64 / t).abs()).sum::<f64>())
}
