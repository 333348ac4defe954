use std::ops::Range;

use super::{with_chain, BondStatus, Chain, MpsError, MpsResult, MpsState, SiteLabel, UnitaryGate};
use crate::tensor::{Matrix, Scalar, TrivialSplit};

/// Direction a sweep travels along the chain.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Toward higher site indices; establishes left-orthonormality.
    Right,
    /// Toward lower site indices; establishes right-orthonormality.
    Left,
}

/// Which side of the target a new site goes.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// How `decompose_site` splits a site.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SplitMethod {
    Svd,
    Trivial,
}

/// Flags of a bond made by a trivial split: the identity factor is
/// orthonormal only when nothing lies beyond it.
fn trivial_status(case: TrivialSplit, left_edge: bool, right_edge: bool) -> BondStatus {
    match case {
        TrivialSplit::Left => BondStatus { left: false, right: right_edge },
        TrivialSplit::Right => BondStatus { left: left_edge, right: false },
    }
}

impl MpsState {
    /// Flags of bond `m` after an SVD over sites `m, m+1`.
    fn svd_status(&self, m: usize) -> BondStatus {
        BondStatus { left: self.left_ok(m as isize - 1), right: self.right_ok(m as isize + 1) }
    }

    fn theta_len(&self, m: usize) -> u64 {
        let (l, d1, _) = self.site_dims(m);
        let (_, d2, r) = self.site_dims(m + 1);
        (l * d1 * d2 * r) as u64
    }

    /// Contract, optionally transform, SVD-split. The shared path of gates,
    /// swaps and sweeps.
    fn update_pair(&mut self, m: usize, gate: Option<&UnitaryGate>, swap: bool) -> MpsResult<()> {
        self.check_bond(m)?;
        let (chi_l, d1, _) = self.site_dims(m);
        let (_, d2, chi_r) = self.site_dims(m + 1);
        if let Some(g) = gate {
            if g.dim() != d1 * d2 {
                return Err(MpsError::InvalidArgument(format!(
                    "gate of dim {} on sites of dims {d1} and {d2}",
                    g.dim()
                )));
            }
        }
        let theta_len = self.theta_len(m);
        // θ, its SVD copy and the factors coexist with the old tensors
        self.admit(2 * theta_len, 2 * theta_len)?;
        let tol = self.truncation;
        with_chain!(&mut self.chain, c => {
            let mut theta = c.theta(m, true);
            if let Some(g) = gate {
                let gm = g.as_scalar()?;
                Chain::gate_theta(&mut theta, &gm, chi_l, chi_r);
            }
            let (d1, d2) = if swap {
                theta = Chain::swap_theta(&theta, chi_l, d1, d2, chi_r);
                (d2, d1)
            } else {
                (d1, d2)
            };
            c.split_svd(m, &theta, d1, d2, tol)?;
        });
        if swap {
            self.layout.swap(m, m + 1);
        }
        self.status[m] = self.svd_status(m);
        self.refresh_live();
        Ok(())
    }

    /// Merges sites `m` and `m+1` into one site of physical dim `d_m·d_{m+1}`.
    pub fn contract_sites(&mut self, m: usize) -> MpsResult<()> {
        self.check_bond(m)?;
        self.admit(self.theta_len(m), 0)?;
        with_chain!(&mut self.chain, c => c.contract_pair(m));
        let b = self.layout.remove(m + 1);
        let a = std::mem::replace(&mut self.layout[m], SiteLabel::Qudit(0));
        self.layout[m] = merge_labels(a, b);
        self.status.remove(m);
        self.refresh_live();
        Ok(())
    }

    /// Splits site `m` into physical dims `(d_left, d_right)`.
    pub fn decompose_site(&mut self, m: usize, d_left: usize, d_right: usize, method: SplitMethod) -> MpsResult<()> {
        self.check_site(m)?;
        let (chi_l, d, chi_r) = self.site_dims(m);
        if d_left * d_right != d || d_left == 0 {
            return Err(MpsError::InvalidArgument(format!("cannot split dim {d} into {d_left} x {d_right}")));
        }
        let size = (chi_l * d * chi_r) as u64;
        self.admit(2 * size, 2 * size)?;
        let tol = self.truncation;
        // Split into a dummy pair first so the two-site kernels apply.
        let case = with_chain!(&mut self.chain, c => {
            let site = c.sites[m].clone();
            let theta = Matrix::from_vec(chi_l * d_left, d_right * chi_r, site.data).expect("site shape");
            c.sites[m] = super::SiteTensor { left: chi_l, phys: d_left, right: 1, data: Vec::new() };
            c.sites.insert(m + 1, super::SiteTensor { left: 1, phys: d_right, right: chi_r, data: Vec::new() });
            c.bonds.insert(m, super::BondWeights::ones(1));
            match method {
                SplitMethod::Svd => {
                    let theta = outer_weighted(c, m, theta, d_left, d_right);
                    c.split_svd(m, &theta, d_left, d_right, tol)?;
                    None
                }
                SplitMethod::Trivial => Some(c.split_trivial(m, theta, d_left, d_right)),
            }
        });
        let (la, lb) = split_label(self.layout[m].clone());
        self.layout[m] = la;
        self.layout.insert(m + 1, lb);
        self.status.insert(m, BondStatus::NONE);
        self.status[m] = match case {
            None => self.svd_status(m),
            Some(case) => trivial_status(case, m == 0, m + 2 == self.len()),
        };
        self.refresh_live();
        Ok(())
    }

    pub fn apply_single_qudit_gate(&mut self, m: usize, gate: &UnitaryGate) -> MpsResult<()> {
        self.check_site(m)?;
        let (_, d, _) = self.site_dims(m);
        if gate.dim() != d {
            return Err(MpsError::InvalidArgument(format!("gate of dim {} on site of dim {d}", gate.dim())));
        }
        with_chain!(&mut self.chain, c => {
            let g = gate.as_scalar()?;
            c.apply_single(m, &g);
        });
        Ok(())
    }

    /// Applies `gate` to sites `m, m+1` on the joint index `p_m·d_{m+1} + p_{m+1}`.
    pub fn apply_two_site_gate(&mut self, m: usize, gate: &UnitaryGate) -> MpsResult<()> {
        self.update_pair(m, Some(gate), false)
    }

    /// Fused gate followed by an exchange of the two physical systems.
    pub fn apply_two_site_gate_then_swap(&mut self, m: usize, gate: &UnitaryGate) -> MpsResult<()> {
        self.update_pair(m, Some(gate), true)
    }

    pub fn swap_sites(&mut self, m: usize) -> MpsResult<()> {
        self.update_pair(m, None, true)
    }

    /// Re-splits every bond in `bonds` in the given order by SVD.
    pub fn sweep(&mut self, direction: Direction, bonds: Range<usize>) -> MpsResult<()> {
        if bonds.end > self.bond_count() {
            return Err(MpsError::BondOutOfRange { index: bonds.end.saturating_sub(1), len: self.bond_count() });
        }
        match direction {
            Direction::Right => {
                for b in bonds {
                    self.update_pair(b, None, false)?;
                }
            }
            Direction::Left => {
                for b in bonds.rev() {
                    self.update_pair(b, None, false)?;
                }
            }
        }
        Ok(())
    }

    /// Right sweep then left sweep over the whole chain: afterwards every
    /// bond is canonical and every λ holds true Schmidt coefficients.
    pub fn canonicalize(&mut self) -> MpsResult<()> {
        let nb = self.bond_count();
        self.sweep(Direction::Right, 0..nb)?;
        self.sweep(Direction::Left, 0..nb)
    }

    /// Canonicalizes only if some flag is unset.
    pub fn ensure_canonical(&mut self) -> MpsResult<()> {
        if self.is_canonical() {
            Ok(())
        } else {
            self.canonicalize()
        }
    }

    pub fn remove_separable_site(&mut self, m: usize) -> MpsResult<()> {
        self.check_site(m)?;
        let (l, _, r) = self.site_dims(m);
        if l != 1 || r != 1 {
            return Err(MpsError::NotSeparable { site: m, left_dim: l, right_dim: r });
        }
        if self.len() == 1 {
            return Err(MpsError::InvalidArgument("cannot remove the only site".into()));
        }
        let n = self.len();
        with_chain!(&mut self.chain, c => c.remove_separable(m));
        self.layout.remove(m);
        if m == 0 {
            self.status.remove(0);
        } else if m == n - 1 {
            self.status.remove(m - 1);
        } else {
            let right = self.status[m].right;
            self.status[m - 1].right = right;
            self.status.remove(m);
        }
        self.refresh_live();
        Ok(())
    }

    /// Inserts a separable site at `position` whose physical part is `vector`
    /// (normalized here) and whose bond index passes straight through.
    pub fn insert_site(&mut self, position: usize, vector: &[f64], label: SiteLabel) -> MpsResult<()> {
        if position > self.len() {
            return Err(MpsError::SiteOutOfRange { index: position, len: self.len() + 1 });
        }
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vector.is_empty() || !(norm > 0.0) {
            return Err(MpsError::InvalidArgument("inserted vector must be nonzero".into()));
        }
        let chi = if position == 0 || position == self.len() { 1 } else { self.bond_dims()[position - 1] };
        self.admit((chi * chi * vector.len()) as u64, 0)?;
        with_chain!(&mut self.chain, c => {
            let v: Vec<_> = vector.iter().map(|&x| Scalar::lift(x / norm)).collect();
            c.insert_pass_through(position, &v);
        });
        self.layout.insert(position, label);
        // At an edge only the new unit vector's side is known to be orthonormal.
        let s = if position == 0 {
            BondStatus { left: true, right: false }
        } else if position == self.len() - 1 {
            BondStatus { left: false, right: true }
        } else {
            self.status[position - 1]
        };
        self.status.insert(position.min(self.status.len()), s);
        self.refresh_live();
        Ok(())
    }

    /// Inserts a `|+>` control next to site `target` and applies the
    /// controlled relabeling `v -> image[v]` of the target's physical index
    /// (into a space of `new_dim` states), splitting by the trivial
    /// decomposition. `image` must be injective.
    ///
    /// The work is proportional to the size of the new tensors; no gate
    /// matrix is formed. Returns the target's new position.
    pub fn insert_controlled_relabel(
        &mut self,
        target: usize,
        side: Side,
        label: SiteLabel,
        image: &[usize],
        new_dim: usize,
    ) -> MpsResult<usize> {
        self.check_site(target)?;
        let (chi_l, d, chi_r) = self.site_dims(target);
        if image.len() != d || new_dim < d || image.iter().any(|&v| v >= new_dim) {
            return Err(MpsError::InvalidArgument(format!(
                "relabeling of {} states into {new_dim} on a site of dim {d}",
                image.len()
            )));
        }
        let (rows, cols) = match side {
            Side::Left => (2 * chi_l, new_dim * chi_r),
            Side::Right => (chi_l * new_dim, 2 * chi_r),
        };
        let k = rows.min(cols);
        let block = (rows * cols) as u64;
        let ident = (k * k) as u64;
        self.admit(block + ident, 0)?;
        let n_before = self.len();
        let (case, new_target) = with_chain!(&mut self.chain, c => c.insert_relabel(target, side == Side::Left, image, new_dim));
        match side {
            Side::Left => {
                self.layout.insert(target, label);
                let s = trivial_status(case, target == 0, target + 1 == n_before);
                self.status.insert(target, s);
            }
            Side::Right => {
                self.layout.insert(target + 1, label);
                let beyond = if target + 1 < n_before { self.status[target].right } else { true };
                let s = match case {
                    TrivialSplit::Left => BondStatus { left: false, right: beyond },
                    TrivialSplit::Right => BondStatus { left: target == 0, right: false },
                };
                self.status.insert(target, s);
                if target + 2 < self.len() {
                    self.status[target + 1] = BondStatus { left: false, right: beyond };
                }
            }
        }
        self.refresh_live();
        Ok(new_target)
    }
}

/// Absorbs the weights flanking a dummy pair at `m` into `θ`.
fn outer_weighted<T: Scalar>(c: &Chain<T>, m: usize, mut theta: Matrix<T>, d1: usize, d2: usize) -> Matrix<T> {
    let (chi_l, chi_r) = (c.sites[m].left, c.sites[m + 1].right);
    if m > 0 {
        let w = &c.bonds[m - 1].0;
        let rows: Vec<f64> = (0..chi_l * d1).map(|i| w[i / d1]).collect();
        theta.scale_rows(&rows);
    }
    if m + 1 < c.bonds.len() {
        let w = &c.bonds[m + 1].0;
        let cols: Vec<f64> = (0..d2 * chi_r).map(|j| w[j % chi_r]).collect();
        theta.scale_cols(&cols);
    }
    theta
}

fn merge_labels(a: SiteLabel, b: SiteLabel) -> SiteLabel {
    let mut parts = match a {
        SiteLabel::Merged(p) => p,
        other => vec![other],
    };
    match b {
        SiteLabel::Merged(p) => parts.extend(p),
        other => parts.push(other),
    }
    SiteLabel::Merged(parts)
}

/// Inverse of `merge_labels` when the label records its parts; otherwise the
/// left half keeps the label and the right half gets a fresh qudit label.
fn split_label(label: SiteLabel) -> (SiteLabel, SiteLabel) {
    match label {
        SiteLabel::Merged(mut p) if p.len() >= 2 => {
            let last = p.pop().expect("nonempty");
            let first = if p.len() == 1 { p.pop().expect("one") } else { SiteLabel::Merged(p) };
            (first, last)
        }
        other => {
            let right = match &other {
                SiteLabel::Qudit(i) => SiteLabel::Qudit(i + 1),
                _ => SiteLabel::Qudit(0),
            };
            (other, right)
        }
    }
}
