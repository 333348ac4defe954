//! Matrix product state simulation of Shor's order-finding circuit.
//!
//! * [`numtheory`]: modular arithmetic, orders, continued fractions.
//! * [`tensor`]: dense matrices and truncated decompositions.
//! * [`mps`]: the MPS core (gates, sweeps, measurement, snapshots).
//! * [`shor`]: the factoring pipeline with static and dynamic layouts.
//! * [`oracle`]: dense references used for validation.

// links the system OpenBLAS that provides LAPACK
extern crate openblas_src;

pub mod cli;
pub mod mps;
pub mod numtheory;
pub mod oracle;
pub mod shor;
pub mod tensor;
