//! Scalar-generic kernels over the raw Γ/λ arrays. Nothing here knows about
//! orthonormality flags or accounting; `MpsState` layers those on top.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::{BondWeights, MpsError, MpsResult, SiteTensor};
use crate::tensor::{gemm, svd_truncated, Matrix, Scalar, TensorResult, TrivialSplit};

/// Below this many scalar multiply-adds a kernel stays on the calling thread.
const PAR_THRESHOLD: usize = 1 << 16;

#[derive(Clone, Debug)]
pub(crate) struct Chain<T> {
    pub(crate) sites: Vec<SiteTensor<T>>,
    pub(crate) bonds: Vec<BondWeights>,
}

impl<T: Scalar> Chain<T> {
    pub(crate) fn product(dims: &[usize], values: &[usize]) -> Self {
        let sites = dims
            .iter()
            .zip(values)
            .map(|(&d, &v)| {
                let mut data = vec![T::zero(); d];
                data[v] = T::one();
                SiteTensor { left: 1, phys: d, right: 1, data }
            })
            .collect();
        let bonds = vec![BondWeights::ones(1); dims.len().saturating_sub(1)];
        Self { sites, bonds }
    }

    pub(crate) fn from_parts(sites: Vec<SiteTensor<T>>, bonds: Vec<BondWeights>) -> MpsResult<Self> {
        if sites.is_empty() || bonds.len() + 1 != sites.len() {
            return Err(MpsError::InvalidArgument(format!("{} sites with {} bonds", sites.len(), bonds.len())));
        }
        if sites[0].left != 1 || sites[sites.len() - 1].right != 1 {
            return Err(MpsError::InvalidArgument("boundary bonds must have dimension 1".into()));
        }
        for (b, w) in bonds.iter().enumerate() {
            if sites[b].right != w.len() || sites[b + 1].left != w.len() {
                return Err(MpsError::InvalidArgument(format!("bond {b} dimensions disagree")));
            }
            if w.0.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(MpsError::InvalidArgument(format!("bond {b} has a nonpositive weight")));
            }
        }
        Ok(Self { sites, bonds })
    }

    pub(crate) fn len(&self) -> usize {
        self.sites.len()
    }

    pub(crate) fn element_count(&self) -> u64 {
        self.sites.iter().map(|s| s.data.len() as u64).sum()
    }

    pub(crate) fn to_complex(&self) -> Chain<C64> {
        Chain {
            sites: self
                .sites
                .iter()
                .map(|s| SiteTensor {
                    left: s.left,
                    phys: s.phys,
                    right: s.right,
                    data: s.data.iter().map(|x| x.to_c64()).collect(),
                })
                .collect(),
            bonds: self.bonds.clone(),
        }
    }

    /// Weights of bond `b`, or `[1]` past either boundary.
    fn weights(&self, b: isize) -> &[f64] {
        const ONE: &[f64] = &[1.0];
        if b < 0 || b as usize >= self.bonds.len() {
            ONE
        } else {
            &self.bonds[b as usize].0
        }
    }

    pub(crate) fn contract_all(&self) -> Vec<C64> {
        let first = &self.sites[0];
        let mut acc = Matrix::from_vec(first.phys, first.right, first.data.clone()).expect("site shape");
        for m in 1..self.len() {
            acc.scale_cols(&self.bonds[m - 1].0);
            let s = &self.sites[m];
            let rows = acc.rows();
            acc = gemm(rows, s.left, s.phys * s.right, acc.as_slice(), &s.data)
                .reshape(rows * s.phys, s.right)
                .expect("contraction shape");
        }
        acc.into_vec().into_iter().map(|x| x.to_c64()).collect()
    }

    /// `Γ[m] diag(λ[m])` split into one `left x right` matrix per physical index.
    fn slices(&self, m: usize, absorb_right: bool) -> Vec<Matrix<T>> {
        let s = &self.sites[m];
        let w = self.weights(m as isize);
        (0..s.phys)
            .map(|p| {
                Matrix::from_fn(s.left, s.right, |l, r| {
                    let x = s.data[s.idx(l, p, r)];
                    if absorb_right {
                        x * T::lift(w[r])
                    } else {
                        x
                    }
                })
            })
            .collect()
    }

    /// Left environment after sites `0..m`: `E[r, r'] = Σ ψ_L[.., r] conj(ψ_L[.., r'])`.
    fn left_env(&self, m: usize) -> Matrix<T> {
        let mut env = Matrix::<T>::identity(1);
        for k in 0..m {
            let mut next = Matrix::<T>::zeros(self.sites[k].right, self.sites[k].right);
            for a in self.slices(k, true) {
                // Aᵀ E conj(A)
                let t = a.transpose().matmul(&env).expect("env shape");
                let t = t.matmul(&a.conj()).expect("env shape");
                add_assign(&mut next, &t);
            }
            env = next;
        }
        env
    }

    /// Right environment from sites `m+1..`: `E[l, l'] = Σ ψ_R[l, ..] conj(ψ_R[l', ..])`.
    fn right_env(&self, m: usize) -> Matrix<T> {
        let mut env = Matrix::<T>::identity(1);
        for k in (m + 1..self.len()).rev() {
            let mut next = Matrix::<T>::zeros(self.sites[k].left, self.sites[k].left);
            for a in self.slices(k, true) {
                // A E Aᴴ
                let t = a.matmul(&env).expect("env shape").matmul(&a.adjoint()).expect("env shape");
                add_assign(&mut next, &t);
            }
            env = next;
        }
        env
    }

    pub(crate) fn norm_sqr(&self) -> f64 {
        let n = self.len();
        let env = self.left_env(n - 1);
        let last = self.slices(n - 1, true);
        last.iter()
            .map(|a| {
                let t = a.transpose().matmul(&env).expect("env shape").matmul(&a.conj()).expect("env shape");
                t[(0, 0)].to_c64().re
            })
            .sum()
    }

    /// Exact `ρ[m]` by contracting the ket with the bra; the full state is never
    /// formed. With `diagonal_only`, off-diagonal entries are left at zero.
    pub(crate) fn density_nonlocal(&self, m: usize, diagonal_only: bool) -> Matrix<T> {
        let el = self.left_env(m);
        let er = self.right_env(m);
        let slices = self.slices(m, true);
        let d = slices.len();
        // X_p = E_L conj(A_p) E_Rᵀ, then ρ[p, p'] = Σ A_p ⊙ X_p'
        let ert = er.transpose();
        let x: Vec<Matrix<T>> = slices
            .par_iter()
            .map(|a| el.matmul(&a.conj()).expect("env shape").matmul(&ert).expect("env shape"))
            .collect();
        let dot = |a: &Matrix<T>, b: &Matrix<T>| -> T {
            a.as_slice().iter().zip(b.as_slice()).fold(T::zero(), |acc, (&u, &v)| acc + u * v)
        };
        let mut rho = Matrix::<T>::zeros(d, d);
        for p in 0..d {
            if diagonal_only {
                rho[(p, p)] = dot(&slices[p], &x[p]);
            } else {
                for q in 0..d {
                    rho[(p, q)] = dot(&slices[p], &x[q]);
                }
            }
        }
        rho
    }

    /// `ρ[m]` from `Γ[m]` and its two flanking weight vectors, valid when both
    /// flanks are orthonormal.
    pub(crate) fn density_local(&self, m: usize, diagonal_only: bool) -> Matrix<T> {
        let s = &self.sites[m];
        let wl: Vec<f64> = self.weights(m as isize - 1).iter().map(|x| x * x).collect();
        let wr: Vec<f64> = self.weights(m as isize).iter().map(|x| x * x).collect();
        let mut rho = Matrix::<T>::zeros(s.phys, s.phys);
        for l in 0..s.left {
            for p in 0..s.phys {
                let qs = if diagonal_only { p..p + 1 } else { 0..s.phys };
                for q in qs {
                    let mut acc = T::zero();
                    for r in 0..s.right {
                        acc += s.data[s.idx(l, p, r)] * s.data[s.idx(l, q, r)].conjg() * T::lift(wr[r]);
                    }
                    rho[(p, q)] += acc * T::lift(wl[l]);
                }
            }
        }
        rho
    }

    /// Two-site block `θ` over sites `m, m+1` as a `(χl·d1) x (d2·χr)` matrix.
    /// The interior weights are always absorbed; `outer` also absorbs the
    /// flanking ones.
    pub(crate) fn theta(&self, m: usize, outer: bool) -> Matrix<T> {
        let (a, b) = (&self.sites[m], &self.sites[m + 1]);
        let mut left = Matrix::from_vec(a.left * a.phys, a.right, a.data.clone()).expect("site shape");
        left.scale_cols(&self.bonds[m].0);
        if outer {
            let wl = self.weights(m as isize - 1);
            let rows: Vec<f64> = (0..a.left * a.phys).map(|i| wl[i / a.phys]).collect();
            left.scale_rows(&rows);
        }
        let mut right = Matrix::from_vec(b.left, b.phys * b.right, b.data.clone()).expect("site shape");
        if outer {
            let wr = self.weights(m as isize + 1);
            let cols: Vec<f64> = (0..b.phys * b.right).map(|j| wr[j % b.right]).collect();
            right.scale_cols(&cols);
        }
        left.matmul(&right).expect("bond dims agree")
    }

    /// Splits an outer-weighted `θ` by SVD and divides the flanking weights
    /// back out. Returns the new bond dimension.
    pub(crate) fn split_svd(&mut self, m: usize, theta: &Matrix<T>, d1: usize, d2: usize, tol: f64) -> TensorResult<usize> {
        let chi_l = self.sites[m].left;
        let chi_r = self.sites[m + 1].right;
        debug_assert_eq!(theta.shape(), (chi_l * d1, d2 * chi_r));
        let dec = svd_truncated(theta, tol)?;
        let k = dec.rank;
        let wl: Vec<f64> = self.weights(m as isize - 1).iter().map(|x| 1.0 / x).collect();
        let wr: Vec<f64> = self.weights(m as isize + 1).iter().map(|x| 1.0 / x).collect();

        let mut u = dec.left;
        let rows: Vec<f64> = (0..chi_l * d1).map(|i| wl[i / d1]).collect();
        u.scale_rows(&rows);
        let mut v = dec.right;
        let cols: Vec<f64> = (0..d2 * chi_r).map(|j| wr[j % chi_r]).collect();
        v.scale_cols(&cols);

        self.sites[m] = SiteTensor { left: chi_l, phys: d1, right: k, data: u.into_vec() };
        self.sites[m + 1] = SiteTensor { left: k, phys: d2, right: chi_r, data: v.into_vec() };
        self.bonds[m] = BondWeights(dec.weights);
        Ok(k)
    }

    /// Splits an unweighted `θ` by the trivial decomposition; the new bond
    /// carries all-ones weights.
    pub(crate) fn split_trivial(&mut self, m: usize, theta: Matrix<T>, d1: usize, d2: usize) -> TrivialSplit {
        let chi_l = self.sites[m].left;
        let chi_r = self.sites[m + 1].right;
        let (rows, cols) = theta.shape();
        let case = TrivialSplit::for_shape(rows, cols);
        let (a, b, k) = match case {
            TrivialSplit::Left => (theta.into_vec(), identity_data::<T>(cols), cols),
            TrivialSplit::Right => (identity_data::<T>(rows), theta.into_vec(), rows),
        };
        self.sites[m] = SiteTensor { left: chi_l, phys: d1, right: k, data: a };
        self.sites[m + 1] = SiteTensor { left: k, phys: d2, right: chi_r, data: b };
        self.bonds[m] = BondWeights::ones(k);
        case
    }

    /// Applies `gate` (over the joint index `p1·d2 + p2`) to every left-bond
    /// block of `θ`.
    pub(crate) fn gate_theta(theta: &mut Matrix<T>, gate: &Matrix<T>, chi_l: usize, chi_r: usize) {
        let dd = gate.rows();
        let block = dd * chi_r;
        let work = dd * dd * chi_r;
        let apply = |chunk: &mut [T]| {
            let out = gemm(dd, dd, chi_r, gate.as_slice(), chunk);
            chunk.copy_from_slice(out.as_slice());
        };
        if work * chi_l >= PAR_THRESHOLD {
            theta.as_mut_slice().par_chunks_mut(block).for_each(apply);
        } else {
            theta.as_mut_slice().chunks_mut(block).for_each(apply);
        }
    }

    /// `θ[(a, p1), (p2, c)] -> θ[(a, p2), (p1, c)]`.
    pub(crate) fn swap_theta(theta: &Matrix<T>, chi_l: usize, d1: usize, d2: usize, chi_r: usize) -> Matrix<T> {
        let src = theta.as_slice();
        let mut out = vec![T::zero(); src.len()];
        for a in 0..chi_l {
            for p1 in 0..d1 {
                for p2 in 0..d2 {
                    let from = ((a * d1 + p1) * d2 + p2) * chi_r;
                    let to = ((a * d2 + p2) * d1 + p1) * chi_r;
                    out[to..to + chi_r].copy_from_slice(&src[from..from + chi_r]);
                }
            }
        }
        Matrix::from_vec(chi_l * d2, d1 * chi_r, out).expect("same size")
    }

    pub(crate) fn apply_single(&mut self, m: usize, gate: &Matrix<T>) {
        let s = &mut self.sites[m];
        let (d, r) = (s.phys, s.right);
        for chunk in s.data.chunks_mut(d * r) {
            let out = gemm(d, d, r, gate.as_slice(), chunk);
            chunk.copy_from_slice(out.as_slice());
        }
    }

    /// Zeroes every physical component of site `m` except `keep`, then scales.
    pub(crate) fn project(&mut self, m: usize, keep: usize, scale: f64) {
        let s = &mut self.sites[m];
        let (d, r) = (s.phys, s.right);
        let f = T::lift(scale);
        for (i, x) in s.data.iter_mut().enumerate() {
            if (i / r) % d == keep {
                *x *= f;
            } else {
                *x = T::zero();
            }
        }
    }

    /// Merges sites `m, m+1`, absorbing the interior weights.
    pub(crate) fn contract_pair(&mut self, m: usize) {
        let theta = self.theta(m, false);
        let (a, b) = (&self.sites[m], &self.sites[m + 1]);
        let merged = SiteTensor { left: a.left, phys: a.phys * b.phys, right: b.right, data: theta.into_vec() };
        self.sites.splice(m..m + 2, [merged]);
        self.bonds.remove(m);
    }

    /// Inserts `v ⊗ diag(1/λ)` at `pos`, interrupting the bond there so the
    /// weights on both sides equal the old ones.
    pub(crate) fn insert_pass_through(&mut self, pos: usize, v: &[T]) {
        let d = v.len();
        if pos == 0 || pos == self.len() {
            let site = SiteTensor { left: 1, phys: d, right: 1, data: v.to_vec() };
            if pos == 0 {
                self.sites.insert(0, site);
                self.bonds.insert(0, BondWeights::ones(1));
            } else {
                self.sites.push(site);
                self.bonds.push(BondWeights::ones(1));
            }
            return;
        }
        let w = self.bonds[pos - 1].clone();
        let chi = w.len();
        let mut data = vec![T::zero(); chi * d * chi];
        for a in 0..chi {
            let inv = T::lift(1.0 / w.0[a]);
            for (p, &vp) in v.iter().enumerate() {
                data[(a * d + p) * chi + a] = vp * inv;
            }
        }
        self.sites.insert(pos, SiteTensor { left: chi, phys: d, right: chi, data });
        self.bonds.insert(pos, w);
    }

    /// Removes a site whose flanking bonds both have dimension 1, folding its
    /// norm and the dropped weight into a neighbour.
    pub(crate) fn remove_separable(&mut self, m: usize) {
        let n = self.len();
        let s = self.sites.remove(m);
        let norm = s.data.iter().map(|x| x.abs_sqr()).sum::<f64>().sqrt();
        let wl = self.weights(m as isize - 1)[0];
        let wr = if m < n - 1 { self.bonds[m.min(self.bonds.len() - 1)].0[0] } else { 1.0 };
        if m == 0 {
            self.bonds.remove(0);
            let f = T::lift(norm * wr);
            self.sites[0].data.iter_mut().for_each(|x| *x *= f);
        } else if m == n - 1 {
            self.bonds.remove(m - 1);
            let f = T::lift(norm * wl);
            self.sites[m - 1].data.iter_mut().for_each(|x| *x *= f);
        } else {
            self.bonds.remove(m);
            self.bonds[m - 1] = BondWeights(vec![wl * norm * wr]);
        }
    }

    /// Inserts a `(|0>+|1>)/√2` control next to site `t` and applies
    /// "control 1 maps physical index v to image[v]" on the pair, splitting
    /// trivially. Returns the split case and the new position of the target.
    ///
    /// On the left side the block is `M[(α, b), (v', γ)]`; on the right side
    /// it is `M[(α, v'), (b, δ)]` with the old right weights folded in, so the
    /// bond beyond the control becomes all-ones.
    pub(crate) fn insert_relabel(&mut self, t: usize, left_side: bool, image: &[usize], new_dim: usize) -> (TrivialSplit, usize) {
        let old = &self.sites[t];
        let (chi_l, d, chi_r) = (old.left, old.phys, old.right);
        let h = T::lift(std::f64::consts::FRAC_1_SQRT_2);
        if left_side {
            let cols = new_dim * chi_r;
            let mut m = vec![T::zero(); 2 * chi_l * cols];
            for a in 0..chi_l {
                for v in 0..d {
                    let src = &old.data[(a * d + v) * chi_r..(a * d + v + 1) * chi_r];
                    for (b, vp) in [(0, v), (1, image[v])] {
                        let dst = (a * 2 + b) * cols + vp * chi_r;
                        for (x, &y) in m[dst..dst + chi_r].iter_mut().zip(src) {
                            *x += y * h;
                        }
                    }
                }
            }
            let theta = Matrix::from_vec(2 * chi_l, cols, m).expect("block shape");
            // placeholder sites so split_trivial sees the outer bond dims
            self.sites.insert(t, SiteTensor { left: chi_l, phys: 2, right: 1, data: Vec::new() });
            self.sites[t + 1] = SiteTensor { left: 1, phys: new_dim, right: chi_r, data: Vec::new() };
            self.bonds.insert(t, BondWeights::ones(1));
            let case = self.split_trivial(t, theta, 2, new_dim);
            (case, t + 1)
        } else {
            let w = self.weights(t as isize).to_vec();
            let cols = 2 * chi_r;
            let mut m = vec![T::zero(); chi_l * new_dim * cols];
            for a in 0..chi_l {
                for v in 0..d {
                    let src = &old.data[(a * d + v) * chi_r..(a * d + v + 1) * chi_r];
                    for (b, vp) in [(0, v), (1, image[v])] {
                        let dst = (a * new_dim + vp) * cols + b * chi_r;
                        for ((x, &y), &wd) in m[dst..dst + chi_r].iter_mut().zip(src).zip(&w) {
                            *x += y * h * T::lift(wd);
                        }
                    }
                }
            }
            let theta = Matrix::from_vec(chi_l * new_dim, cols, m).expect("block shape");
            self.sites[t] = SiteTensor { left: chi_l, phys: new_dim, right: 1, data: Vec::new() };
            self.sites.insert(t + 1, SiteTensor { left: 1, phys: 2, right: chi_r, data: Vec::new() });
            if t < self.bonds.len() {
                self.bonds[t] = BondWeights::ones(chi_r);
            }
            self.bonds.insert(t, BondWeights::ones(1));
            let case = self.split_trivial(t, theta, new_dim, 2);
            (case, t)
        }
    }
}

fn identity_data<T: Scalar>(n: usize) -> Vec<T> {
    Matrix::<T>::identity(n).into_vec()
}

fn add_assign<T: Scalar>(acc: &mut Matrix<T>, x: &Matrix<T>) {
    for (a, &b) in acc.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *a += b;
    }
}
