use rand::Rng;

use super::{with_chain, ChainData, Direction, MpsError, MpsResult, MpsState};
use crate::tensor::{DenseMatrix, Matrix};

/// Diagonal entries in `[-CLAMP_FLOOR, 0)` are rounding noise and read as 0.
pub const CLAMP_FLOOR: f64 = 1e-12;

/// Allowed deviation of the total probability mass from 1.
pub const MASS_TOLERANCE: f64 = 1e-6;

/// How outcome probabilities are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DensityRoute {
    /// Local when the flags allow, otherwise by full contraction.
    #[default]
    Auto,
    /// Local only; fails with `NotCanonical` if the flags do not allow it.
    Local,
    /// Full contraction regardless of flags.
    Nonlocal,
}

/// Single-site reduced density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: DenseMatrix,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.shape().0
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix.element(i, i).re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.matrix.to_complex().max_abs_diff(&other.matrix.to_complex())
    }

    /// Largest deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let m = self.matrix.to_complex();
        m.max_abs_diff(&m.adjoint())
    }
}

impl MpsState {
    fn wrap<T>(&self, m: Matrix<T>) -> DensityMatrix
    where
        Matrix<T>: Into<DenseMatrix>,
    {
        DensityMatrix { matrix: m.into() }
    }

    /// `ρ[m]` by contracting the network with its conjugate. Valid for any
    /// gauge; the cost is linear in the number of sites.
    pub fn reduced_density_nonlocal(&self, m: usize) -> MpsResult<DensityMatrix> {
        self.check_site(m)?;
        Ok(match &self.chain {
            ChainData::Real(c) => self.wrap(c.density_nonlocal(m, false)),
            ChainData::Complex(c) => self.wrap(c.density_nonlocal(m, false)),
        })
    }

    /// `ρ[m]` from site `m` and its flanking weights. Needs the bond to the
    /// left flagged left-orthonormal and the bond to the right flagged
    /// right-orthonormal.
    pub fn reduced_density_local(&self, m: usize) -> MpsResult<DensityMatrix> {
        self.check_site(m)?;
        self.require_local(m)?;
        Ok(match &self.chain {
            ChainData::Real(c) => self.wrap(c.density_local(m, false)),
            ChainData::Complex(c) => self.wrap(c.density_local(m, false)),
        })
    }

    fn require_local(&self, m: usize) -> MpsResult<()> {
        let m = m as isize;
        if !self.left_ok(m - 1) {
            return Err(MpsError::NotCanonical { bond: m - 1 });
        }
        if !self.right_ok(m) {
            return Err(MpsError::NotCanonical { bond: m });
        }
        Ok(())
    }

    /// Whether `ρ[m]` can be read locally.
    pub fn local_density_available(&self, m: usize) -> bool {
        self.require_local(m).is_ok()
    }

    /// Outcome probabilities of site `m`: local when the flags allow,
    /// otherwise by full contraction. Returns the raw diagonal.
    pub fn outcome_probabilities(&self, m: usize) -> MpsResult<Vec<f64>> {
        self.outcome_probabilities_via(m, DensityRoute::Auto)
    }

    /// Raw diagonal of `ρ[m]` along the chosen route.
    pub fn outcome_probabilities_via(&self, m: usize, route: DensityRoute) -> MpsResult<Vec<f64>> {
        self.check_site(m)?;
        let local = match route {
            DensityRoute::Auto => self.local_density_available(m),
            DensityRoute::Local => {
                self.require_local(m)?;
                true
            }
            DensityRoute::Nonlocal => false,
        };
        let diag = with_chain!(&self.chain, c => {
            let rho = if local { c.density_local(m, true) } else { c.density_nonlocal(m, true) };
            (0..rho.rows()).map(|i| crate::tensor::Scalar::to_c64(rho[(i, i)]).re).collect::<Vec<f64>>()
        });
        Ok(diag)
    }

    /// Measures site `m` in its computational basis, or projects onto
    /// `forced` if given. The site keeps its dimension with a one-hot
    /// physical vector; entanglement with the rest collapses through sweeps
    /// outward from `m`.
    pub fn measure_qudit<R: Rng + ?Sized>(&mut self, m: usize, rng: &mut R, forced: Option<usize>) -> MpsResult<usize> {
        self.measure_qudit_via(m, rng, forced, DensityRoute::Auto)
    }

    /// [`measure_qudit`](Self::measure_qudit) with an explicit density route.
    pub fn measure_qudit_via<R: Rng + ?Sized>(
        &mut self,
        m: usize,
        rng: &mut R,
        forced: Option<usize>,
        route: DensityRoute,
    ) -> MpsResult<usize> {
        let raw = self.outcome_probabilities_via(m, route)?;
        let (outcome, p_raw) = choose_outcome(&raw, rng, forced)?;
        self.collapse(m, outcome, p_raw)?;
        Ok(outcome)
    }

    /// Projects site `m` onto `outcome` (raw probability `p_raw`) and sweeps.
    pub(crate) fn collapse(&mut self, m: usize, outcome: usize, p_raw: f64) -> MpsResult<()> {
        let scale = 1.0 / p_raw.sqrt();
        with_chain!(&mut self.chain, c => c.project(m, outcome, scale));
        for (b, s) in self.status.iter_mut().enumerate() {
            if b >= m {
                s.left = false;
            } else {
                s.right = false;
            }
        }
        let nb = self.bond_count();
        self.sweep(Direction::Left, 0..m.min(nb))?;
        self.sweep(Direction::Right, m.min(nb)..nb)?;
        Ok(())
    }
}

/// Clamps, checks the mass, and picks an outcome by inverse CDF in index
/// order (or validates the forced one). Returns the outcome and its raw
/// probability.
pub(crate) fn choose_outcome<R: Rng + ?Sized>(raw: &[f64], rng: &mut R, forced: Option<usize>) -> MpsResult<(usize, f64)> {
    let mut probs = Vec::with_capacity(raw.len());
    for (i, &p) in raw.iter().enumerate() {
        if p < -CLAMP_FLOOR || !p.is_finite() {
            log::debug!("outcome {i} has probability {p}");
            return Err(MpsError::Normalization { mass: raw.iter().sum() });
        }
        probs.push(p.max(0.0));
    }
    let mass: f64 = probs.iter().sum();
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(MpsError::Normalization { mass });
    }
    let outcome = match forced {
        Some(o) => {
            if o >= probs.len() {
                return Err(MpsError::InvalidArgument(format!("forced outcome {o} out of range")));
            }
            if probs[o] <= 0.0 {
                return Err(MpsError::ZeroProbability { outcome: o });
            }
            o
        }
        None => {
            let u: f64 = rng.random::<f64>() * mass;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc && p > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave u just above the final partial sum
            pick.unwrap_or_else(|| probs.iter().rposition(|&p| p > 0.0).expect("positive mass"))
        }
    };
    Ok((outcome, probs[outcome]))
}
