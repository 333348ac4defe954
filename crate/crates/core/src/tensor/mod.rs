//! Dense row-major matrices over real or complex 64-bit scalars, and the two
//! matrix decompositions used to split MPS sites.
//!
//! Kernels are generic over [`Scalar`]; [`DenseMatrix`] carries the scalar
//! mode as a runtime tag for callers that hold either kind.

mod decomp;

use std::fmt;

use nalgebra as na;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decomp::{svd_truncated, trivial_decompose, DecompResult, TrivialSplit, DEFAULT_TRUNCATION};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("SVD failed to converge on a {rows}x{cols} matrix")]
    DecompositionFailed { rows: usize, cols: usize },

    #[error("cannot decompose a zero matrix ({rows}x{cols})")]
    ZeroMatrix { rows: usize, cols: usize },

    #[error("scalar mode mismatch: expected {expected}, found {found}")]
    ModeMismatch { expected: ScalarMode, found: ScalarMode },
}

pub type TensorResult<T> = Result<T, TensorError>;

/// Whether elements are stored as one or two 64-bit components.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    Real,
    Complex,
}

impl ScalarMode {
    /// Accounting units per element: 64-bit components stored.
    pub fn units(self) -> u64 {
        match self {
            Self::Real => 1,
            Self::Complex => 2,
        }
    }
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Real => "real",
            Self::Complex => "complex",
        })
    }
}

/// Element type of every dense kernel.
pub trait Scalar:
    na::ComplexField<RealField = f64> + Copy + Default + fmt::Debug + PartialEq + Send + Sync + 'static
{
    const MODE: ScalarMode;

    fn lift(x: f64) -> Self;
    fn conjg(self) -> Self;
    fn abs_sqr(self) -> f64;
    fn to_c64(self) -> C64;
    /// `None` if the value has a nonzero imaginary part that this type cannot
    /// hold.
    fn from_c64(z: C64) -> Option<Self>;

    /// Thin SVD of a row-major `rows x cols` buffer: `(U, σ, Vᴴ)` with `U`
    /// and `Vᴴ` row-major and `σ` in nonincreasing order.
    fn thin_svd(rows: usize, cols: usize, data: &[Self]) -> Option<ThinSvd<Self>>;
}

/// Factors returned by [`Scalar::thin_svd`].
pub struct ThinSvd<T> {
    pub u: Matrix<T>,
    pub sigma: Vec<f64>,
    pub vh: Matrix<T>,
}

/// `gesvd` on a row-major `rows x cols` buffer. LAPACK sees the buffer as
/// the column-major transpose `Aᵀ = U' S V'ᴴ`, so `A`'s row-major factors are
/// `V'ᴴ` and `U'` as returned.
fn lapack_thin_svd<T: Scalar>(
    rows: usize,
    cols: usize,
    data: &[T],
    mut call: impl FnMut(i32, i32, &mut [T], &mut [f64], &mut [T], &mut [T], &mut [T], i32) -> i32,
) -> Option<ThinSvd<T>> {
    let k = rows.min(cols);
    let (m, n) = (i32::try_from(cols).ok()?, i32::try_from(rows).ok()?);
    let mut a = data.to_vec();
    let mut sigma = vec![0.0; k];
    let mut u = vec![T::default(); cols * k];
    let mut vt = vec![T::default(); k * rows];
    let mut query = [T::default()];
    if call(m, n, &mut a, &mut sigma, &mut u, &mut vt, &mut query, -1) != 0 {
        return None;
    }
    let lwork = (query[0].to_c64().re as usize).max(1);
    let mut work = vec![T::default(); lwork];
    let info = call(m, n, &mut a, &mut sigma, &mut u, &mut vt, &mut work, lwork as i32);
    if info != 0 {
        return None;
    }
    Some(ThinSvd {
        u: Matrix { rows, cols: k, data: vt },
        sigma,
        vh: Matrix { rows: k, cols, data: u },
    })
}

impl Scalar for f64 {
    const MODE: ScalarMode = ScalarMode::Real;

    #[inline]
    fn lift(x: f64) -> Self {
        x
    }
    #[inline]
    fn conjg(self) -> Self {
        self
    }
    #[inline]
    fn abs_sqr(self) -> f64 {
        self * self
    }
    #[inline]
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
    fn from_c64(z: C64) -> Option<Self> {
        (z.im == 0.0).then_some(z.re)
    }
    fn thin_svd(rows: usize, cols: usize, data: &[Self]) -> Option<ThinSvd<Self>> {
        lapack_thin_svd(rows, cols, data, |m, n, a, s, u, vt, work, lwork| {
            let mut info = 0;
            // SAFETY: buffer sizes match the dimensions passed alongside them.
            unsafe { lapack::dgesvd(b'S', b'S', m, n, a, m, s, u, m, vt, m.min(n), work, lwork, &mut info) };
            info
        })
    }
}

impl Scalar for C64 {
    const MODE: ScalarMode = ScalarMode::Complex;

    #[inline]
    fn lift(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    #[inline]
    fn conjg(self) -> Self {
        self.conj()
    }
    #[inline]
    fn abs_sqr(self) -> f64 {
        self.norm_sqr()
    }
    #[inline]
    fn to_c64(self) -> C64 {
        self
    }
    fn from_c64(z: C64) -> Option<Self> {
        Some(z)
    }
    fn thin_svd(rows: usize, cols: usize, data: &[Self]) -> Option<ThinSvd<Self>> {
        let mut rwork = vec![0.0; 5 * rows.min(cols)];
        lapack_thin_svd(rows, cols, data, |m, n, a, s, u, vt, work, lwork| {
            let mut info = 0;
            // SAFETY: as for the real case; rwork holds 5 min(m, n) reals.
            unsafe { lapack::zgesvd(b'S', b'S', m, n, a, m, s, u, m, vt, m.min(n), work, lwork, &mut rwork, &mut info) };
            info
        })
    }
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} ", self.rows, self.cols)?;
        f.debug_list().entries(self.data.chunks(self.cols.max(1))).finish()
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> TensorResult<Self> {
        if data.len() != rows * cols {
            return Err(TensorError::DimensionMismatch(format!(
                "{} elements for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = T::lift(v);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }
    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Reinterprets the row-major buffer with new dimensions.
    pub fn reshape(self, rows: usize, cols: usize) -> TensorResult<Self> {
        if rows * cols != self.data.len() {
            return Err(TensorError::DimensionMismatch(format!(
                "cannot reshape {}x{} into {rows}x{cols}",
                self.rows, self.cols
            )));
        }
        Ok(Self { rows, cols, data: self.data })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conjg())
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.conjg()).collect() }
    }

    pub fn scale(&mut self, factor: T) {
        for x in &mut self.data {
            *x *= factor;
        }
    }

    /// Multiplies row `i` by `weights[i]`.
    pub fn scale_rows(&mut self, weights: &[f64]) {
        assert_eq!(weights.len(), self.rows);
        for (row, &w) in self.data.chunks_mut(self.cols.max(1)).zip(weights) {
            let w = T::lift(w);
            row.iter_mut().for_each(|x| *x *= w);
        }
    }

    /// Multiplies column `j` by `weights[j]`.
    pub fn scale_cols(&mut self, weights: &[f64]) {
        assert_eq!(weights.len(), self.cols);
        let w: Vec<T> = weights.iter().map(|&w| T::lift(w)).collect();
        for row in self.data.chunks_mut(self.cols.max(1)) {
            row.iter_mut().zip(&w).for_each(|(x, &w)| *x *= w);
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.abs_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).abs_sqr().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn matmul(&self, rhs: &Self) -> TensorResult<Self> {
        if self.cols != rhs.rows {
            return Err(TensorError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(gemm(self.rows, self.cols, rhs.cols, &self.data, &rhs.data))
    }

    /// `true` if `self` is square and `self^H self = I` within `tol`
    /// (max-abs entrywise).
    pub fn is_unitary(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let prod = self.adjoint().matmul(self).expect("square");
        prod.max_abs_diff(&Self::identity(self.rows)) <= tol
    }

}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// `C = A B` for row-major buffers, `A` is `m x k` and `B` is `k x n`.
///
/// A row-major buffer read as column-major is the transpose, so this computes
/// `C^T = B^T A^T` with nalgebra, which dispatches real products to an
/// optimized GEMM.
pub(crate) fn gemm<T: Scalar>(m: usize, k: usize, n: usize, a: &[T], b: &[T]) -> Matrix<T> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    if m == 0 || n == 0 {
        return Matrix::zeros(m, n);
    }
    if k == 0 {
        return Matrix::zeros(m, n);
    }
    let at = na::DMatrixView::from_slice(a, k, m);
    let bt = na::DMatrixView::from_slice(b, n, k);
    let mut ct = na::DMatrix::<T>::zeros(n, m);
    ct.gemm(T::one(), &bt, &at, T::zero());
    Matrix { rows: m, cols: n, data: ct.data.into() }
}

/// A dense matrix tagged with its scalar mode at runtime.
#[derive(Clone, Debug, PartialEq)]
pub enum DenseMatrix {
    Real(Matrix<f64>),
    Complex(Matrix<C64>),
}

impl DenseMatrix {
    pub fn mode(&self) -> ScalarMode {
        match self {
            Self::Real(_) => ScalarMode::Real,
            Self::Complex(_) => ScalarMode::Complex,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::Real(m) => m.shape(),
            Self::Complex(m) => m.shape(),
        }
    }

    pub fn element(&self, i: usize, j: usize) -> C64 {
        match self {
            Self::Real(m) => m[(i, j)].to_c64(),
            Self::Complex(m) => m[(i, j)],
        }
    }

    pub fn to_complex(&self) -> Matrix<C64> {
        match self {
            Self::Real(m) => Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].to_c64()),
            Self::Complex(m) => m.clone(),
        }
    }

    /// Converts to the requested scalar type, failing if a complex value with
    /// a nonzero imaginary part would have to be dropped.
    pub fn to_scalar<T: Scalar>(&self) -> TensorResult<Matrix<T>> {
        let (rows, cols) = self.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(T::from_c64(self.element(i, j)).ok_or(TensorError::ModeMismatch {
                    expected: T::MODE,
                    found: self.mode(),
                })?);
            }
        }
        Matrix::from_vec(rows, cols, data)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        match self {
            Self::Real(m) => m.is_unitary(tol),
            Self::Complex(m) => m.is_unitary(tol),
        }
    }
}

impl From<Matrix<f64>> for DenseMatrix {
    fn from(m: Matrix<f64>) -> Self {
        Self::Real(m)
    }
}

impl From<Matrix<C64>> for DenseMatrix {
    fn from(m: Matrix<C64>) -> Self {
        Self::Complex(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix<C64> {
        Matrix::from_fn(rows, cols, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random(3, 5, &mut rng);
        assert_eq!(Matrix::identity(3).matmul(&m).unwrap(), m);
    }

    #[test]
    fn reshape_round_trip() {
        let m = Matrix::<f64>::from_fn(2, 4, |i, j| (i * 4 + j) as f64);
        let back = m.clone().reshape(4, 2).unwrap().reshape(2, 4).unwrap();
        assert_eq!(back, m);
        assert!(m.reshape(3, 3).is_err());
    }

    #[test]
    fn transpose_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(3, 3, &mut rng);
        let b = random(3, 3, &mut rng);
        let lhs = a.matmul(&b).unwrap().transpose();
        let rhs = b.transpose().matmul(&a.transpose()).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-14);
    }

    #[test]
    fn gemm_matches_naive_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Matrix::<f64>::from_fn(7, 5, |_, _| rng.random_range(-1.0..1.0));
        let b = Matrix::<f64>::from_fn(5, 4, |_, _| rng.random_range(-1.0..1.0));
        let c = a.matmul(&b).unwrap();
        for i in 0..7 {
            for j in 0..4 {
                let expect: f64 = (0..5).map(|k| a[(i, k)] * b[(k, j)]).sum();
                assert!((c[(i, j)] - expect).abs() < 1e-14);
            }
        }
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn mode_conversion() {
        let m = DenseMatrix::Complex(Matrix::from_vec(1, 2, vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]).unwrap());
        assert!(m.to_scalar::<f64>().is_err());
        let r = DenseMatrix::Real(Matrix::identity(2));
        assert_eq!(r.to_scalar::<C64>().unwrap(), Matrix::identity(2));
        assert_eq!(ScalarMode::Complex.units(), 2 * ScalarMode::Real.units());
    }
}
