use super::{Matrix, Scalar, TensorError, TensorResult};

/// Relative threshold below which singular values are treated as exact zeros.
pub const DEFAULT_TRUNCATION: f64 = 1e-12;

/// Allowed relative gap between `Σ σ²` and `‖M‖_F²`.
const FROBENIUS_CHECK: f64 = 1e-10;

/// `left * diag(weights) * right` (SVD) or `left * right` (trivial).
#[derive(Clone, Debug, PartialEq)]
pub struct DecompResult<T> {
    pub left: Matrix<T>,
    /// Singular values, descending. Empty for the trivial decomposition.
    pub weights: Vec<f64>,
    pub right: Matrix<T>,
    pub rank: usize,
}

impl<T: Scalar> DecompResult<T> {
    pub fn reconstruct(&self) -> Matrix<T> {
        let mut left = self.left.clone();
        if !self.weights.is_empty() {
            left.scale_cols(&self.weights);
        }
        left.matmul(&self.right).expect("factor shapes agree")
    }
}

/// Rank-revealing SVD that keeps only singular values above
/// `tol * sigma_max`.
///
/// Each kept left singular vector is rephased so its largest-magnitude entry is
/// positive real (the matching right vector absorbs the inverse phase).
pub fn svd_truncated<T: Scalar>(m: &Matrix<T>, tol: f64) -> TensorResult<DecompResult<T>> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 || m.as_slice().iter().all(|x| x.is_zero()) {
        return Err(TensorError::ZeroMatrix { rows, cols });
    }
    let fro2: f64 = m.as_slice().iter().map(|x| x.abs_sqr()).sum();
    let svd = T::thin_svd(rows, cols, m.as_slice()).ok_or(TensorError::DecompositionFailed { rows, cols })?;
    let s2: f64 = svd.sigma.iter().map(|s| s * s).sum();
    if !((s2 - fro2).abs() <= FROBENIUS_CHECK * fro2) {
        return Err(TensorError::DecompositionFailed { rows, cols });
    }
    let (u, vt, sv) = (&svd.u, &svd.vh, &svd.sigma);

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap_or(std::cmp::Ordering::Equal));
    let smax = sv[order[0]];
    if !(smax > 0.0) || !smax.is_finite() {
        return Err(TensorError::DecompositionFailed { rows, cols });
    }
    let keep: Vec<usize> = order.into_iter().take_while(|&k| sv[k] > tol * smax).collect();
    let rank = keep.len();

    let mut left = Matrix::<T>::zeros(rows, rank);
    let mut right = Matrix::<T>::zeros(rank, cols);
    let mut weights = Vec::with_capacity(rank);
    for (new, &k) in keep.iter().enumerate() {
        // phase that makes the largest entry of this column positive real
        let (mut best, mut best_abs) = (T::one(), -1.0);
        for i in 0..rows {
            let a = u[(i, k)].abs_sqr();
            if a > best_abs {
                best_abs = a;
                best = u[(i, k)];
            }
        }
        let phase = best.conjg() * T::lift(1.0 / best_abs.sqrt());
        let inv_phase = phase.conjg();
        for i in 0..rows {
            left[(i, new)] = u[(i, k)] * phase;
        }
        for j in 0..cols {
            right[(new, j)] = vt[(k, j)] * inv_phase;
        }
        weights.push(sv[k]);
    }
    Ok(DecompResult { left, weights, right, rank })
}

/// Which factor of a trivial decomposition carries the original matrix.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TrivialSplit {
    /// `M = M * I` (taken when `rows >= cols`).
    Left,
    /// `M = I * M`.
    Right,
}

impl TrivialSplit {
    pub fn for_shape(rows: usize, cols: usize) -> Self {
        if rows >= cols {
            Self::Left
        } else {
            Self::Right
        }
    }
}

/// `M = M I` when `rows >= cols`, else `M = I M`. The apparent rank is
/// `min(rows, cols)`.
pub fn trivial_decompose<T: Scalar>(m: Matrix<T>) -> DecompResult<T> {
    let (rows, cols) = m.shape();
    match TrivialSplit::for_shape(rows, cols) {
        TrivialSplit::Left => DecompResult { left: m, weights: Vec::new(), right: Matrix::identity(cols), rank: cols },
        TrivialSplit::Right => DecompResult { left: Matrix::identity(rows), weights: Vec::new(), right: m, rank: rows },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    #[test]
    fn rank_deficient_svd_reconstructs() {
        // a 6 x 6 rank-3 block that defeats an eps = f64::EPSILON stopping rule
        let (a, b, c) = (0.2742184143044214, 0.10364246840156276, 0.2795084971874744);
        let data = vec![
            a, -b, 0.0, 0.0, a, -b, //
            -b, 0.0, a, a, -b, 0.0, //
            b, a, 0.0, 0.0, b, a, //
            a, 0.0, b, b, a, 0.0, //
            0.0, 0.0, c, c, 0.0, 0.0, //
            0.0, c, 0.0, 0.0, 0.0, c,
        ];
        let m = Matrix::<f64>::from_vec(6, 6, data).unwrap();
        let d = svd_truncated(&m, 1e-12).unwrap();
        assert_eq!(d.rank, 3);
        assert!(d.reconstruct().max_abs_diff(&m) < 1e-13);
    }

    #[test]
    fn identity_svd() {
        let d = svd_truncated(&Matrix::<f64>::identity(2), 1e-12).unwrap();
        assert_eq!(d.rank, 2);
        assert!(d.weights.iter().all(|&w| (w - 1.0).abs() < 1e-15));
    }

    #[test]
    fn rank_one_svd() {
        let m = Matrix::<f64>::from_vec(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let d = svd_truncated(&m, 1e-12).unwrap();
        assert_eq!(d.rank, 1);
        assert!((d.weights[0] - 2.0).abs() < 1e-14);
        assert!(d.reconstruct().max_abs_diff(&m) < 1e-14);
        // sign canonicalization: largest entry of the left vector positive
        assert!(d.left[(0, 0)] > 0.0);
    }

    #[test]
    fn noise_floor_dropped() {
        let m = Matrix::<f64>::diag(&[3.0, 3e-15]);
        let d = svd_truncated(&m, 1e-12).unwrap();
        assert_eq!(d.rank, 1);
        assert!((d.weights[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix_rejected() {
        assert!(matches!(svd_truncated(&Matrix::<C64>::zeros(2, 3), 1e-12), Err(TensorError::ZeroMatrix { .. })));
    }

    #[test]
    fn trivial_branches() {
        let tall = Matrix::<f64>::from_fn(4, 2, |i, j| (i + 2 * j) as f64);
        let d = trivial_decompose(tall.clone());
        assert_eq!((d.left.clone(), d.right.clone(), d.rank), (tall.clone(), Matrix::identity(2), 2));

        let wide = tall.transpose();
        let d = trivial_decompose(wide.clone());
        assert_eq!((d.left.clone(), d.right.clone(), d.rank), (Matrix::identity(2), wide, 2));

        let square = Matrix::<f64>::from_fn(3, 3, |i, j| (i * j) as f64);
        let d = trivial_decompose(square.clone());
        assert_eq!((d.left, d.right), (square, Matrix::identity(3)));
    }
}
