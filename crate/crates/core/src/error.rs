use alloc::string::String;

use crate::scalar::ExactScalar;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("exact mode needs every block angle lambda_i * t in (pi/2)Z, got t = {0}")]
    ExactModeUnsupportedAngle(ExactScalar),

    #[error("product of {0} and {1} leaves Q + Q pi")]
    ProductUndefined(ExactScalar, ExactScalar),

    #[error("invalid frequency list: {0}")]
    InvalidFrequencies(String),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("unsupported lattice for this query: {0}")]
    UnsupportedSpec(String),

    #[error("membership undecided after exploring words of length <= {depth}")]
    MembershipUndecidable { depth: usize },

    #[error("non-finite value in integrator state at s = {0}")]
    NonFinite(f64),

    #[error("step must be positive, got {0}")]
    InvalidStep(f64),

    #[error("certificate verification failed: {0}")]
    CertificateVerificationFailed(String),

    #[error("matrix is not of isotropy shape: {0}")]
    ShapeMismatch(String),

    #[error("line lattice not representable: {0}")]
    NotRepresentable(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
