use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;

use super::{MpsError, MpsResult};
use crate::tensor::{DenseMatrix, Matrix, Scalar};

/// Unitarity tolerance checked when a gate is constructed.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// A square unitary, checked once at construction so repeated applications
/// skip the test.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryGate {
    matrix: DenseMatrix,
}

impl UnitaryGate {
    pub fn new(matrix: impl Into<DenseMatrix>) -> MpsResult<Self> {
        let matrix = matrix.into();
        if !matrix.is_unitary(UNITARY_TOLERANCE) {
            return Err(MpsError::NotUnitary { tol: UNITARY_TOLERANCE });
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.shape().0
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub(crate) fn as_scalar<T: Scalar>(&self) -> MpsResult<Matrix<T>> {
        self.matrix.to_scalar::<T>().map_err(|_| MpsError::WrongMode {
            expected: self.matrix.mode(),
            found: T::MODE,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self { matrix: Matrix::<f64>::identity(d).into() }
    }

    pub fn hadamard() -> Self {
        let h = FRAC_1_SQRT_2;
        Self { matrix: Matrix::from_vec(2, 2, vec![h, h, h, -h]).expect("2x2").into() }
    }

    pub fn pauli_x() -> Self {
        Self { matrix: Matrix::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]).expect("2x2").into() }
    }

    /// `diag(1, exp(-iπ/2^x))`.
    pub fn phase(x: u32) -> Self {
        let mut m = Matrix::<C64>::identity(2);
        m[(1, 1)] = phase_factor(x);
        Self { matrix: m.into() }
    }

    /// Control on the first qubit, target on the second.
    pub fn cnot() -> Self {
        let mut m = Matrix::<f64>::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            m[(i, j)] = 1.0;
        }
        Self { matrix: m.into() }
    }

    /// Exchanges two qudits of dimensions `d1` and `d2`; the result acts on
    /// the joint index `p1·d2 + p2` and produces `p2·d1 + p1`.
    pub fn swap(d1: usize, d2: usize) -> Self {
        let mut m = Matrix::<f64>::zeros(d1 * d2, d1 * d2);
        for p1 in 0..d1 {
            for p2 in 0..d2 {
                m[(p2 * d1 + p1, p1 * d2 + p2)] = 1.0;
            }
        }
        Self { matrix: m.into() }
    }

    /// Controlled phase `exp(-iπ/2^x)` on `|11>`.
    pub fn controlled_phase(x: u32) -> Self {
        let mut m = Matrix::<C64>::identity(4);
        m[(3, 3)] = phase_factor(x);
        Self { matrix: m.into() }
    }

    /// Swap after controlled phase, as one two-qubit gate.
    pub fn cp_swap(x: u32) -> Self {
        let mut m = Matrix::<C64>::zeros(4, 4);
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(2, 1)] = C64::new(1.0, 0.0);
        m[(1, 2)] = C64::new(1.0, 0.0);
        m[(3, 3)] = phase_factor(x);
        Self { matrix: m.into() }
    }
}

fn phase_factor(x: u32) -> C64 {
    C64::from_polar(1.0, -PI / 2f64.powi(x as i32))
}
