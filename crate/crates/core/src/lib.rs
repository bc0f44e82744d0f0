//! Oscillator groups `Osc_n(λ_1, …, λ_n)` with their bi-invariant Lorentzian
//! metric, geodesics, lattices, closed geodesics on compact quotients and
//! isometries.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algebra;
pub mod error;
pub mod geodesic;
pub mod group;
pub mod isometry;
pub mod lattice;
pub mod quotient;
pub mod scalar;

pub use algebra::{AlgebraVector, CausalClass, FrequencyList};
pub use error::{Error, Result};
pub use group::{ExactElement, FloatElement, GroupElement};
pub use scalar::{ExactScalar, Rational};
