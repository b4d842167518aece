use thiserror::Error;

use crate::C64;

pub type Result<T, E = CoreError> = std::result::Result<T, E>;

/// Coarse classification used by front ends to map failures to exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    ExceptionalAlpha,
}

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("node sequence contains 0 where a nonzero node is required")]
    ZeroNode,

    #[error(
        "Blaschke sum diverges: partial sum {partial_sum:.6} after {terms} terms, \
         last-decade increment {increment:.6}"
    )]
    BlaschkeDivergent {
        partial_sum: f64,
        increment: f64,
        terms: usize,
    },

    #[error("structure function is not Hermite-Biehler: zero {0} is not in the open lower half-plane")]
    ZeroNotInLowerHalfPlane(C64),

    #[error("structure function is not Hermite-Biehler: |E| <= |E*| at probe {0}")]
    NotHermiteBiehler(C64),

    #[error("phase grid too coarse: jump {jump:.4} >= pi between t = {left} and t = {right}")]
    RefinementNeeded { left: f64, right: f64, jump: f64 },

    #[error("kernel system is complete already: {nodes} nodes in a space of dimension {dim}")]
    IncompletenessViolation { nodes: usize, dim: usize },

    #[error(
        "Gram matrix nearly singular (condition number {condition:.3e}); \
         most dependent nodes {first} and {second}"
    )]
    NearDependence {
        condition: f64,
        first: C64,
        second: C64,
    },

    #[error("circle-mean evaluation did not converge at {0}")]
    NumericalSingularity(C64),

    #[error("kappa(x0, x) is not real at x = {x}: imaginary residue {residue:.3e}")]
    KernelInconsistency { x: f64, residue: f64 },

    #[error("no admissible anchor in window [{0}, {1}]")]
    NoAnchor(f64, f64),

    #[error(
        "exceptional alpha suspected: Parseval defect {first:.3e} at the first anchor, \
         {second:.3e} after re-anchoring"
    )]
    ExceptionalAlpha { first: f64, second: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("dimension mismatch: {points} points for a space of dimension {dim}")]
    DimensionMismatch { points: usize, dim: usize },
}

impl CoreError {
    pub fn class(&self) -> ErrorClass {
        use CoreError::*;
        match self {
            InvalidInput(_)
            | ZeroNode
            | ZeroNotInLowerHalfPlane(_)
            | NotHermiteBiehler(_)
            | IncompletenessViolation { .. }
            | Precondition(_)
            | DimensionMismatch { .. } => ErrorClass::Validation,
            ExceptionalAlpha { .. } => ErrorClass::ExceptionalAlpha,
            BlaschkeDivergent { .. }
            | RefinementNeeded { .. }
            | NearDependence { .. }
            | NumericalSingularity(_)
            | KernelInconsistency { .. }
            | NoAnchor(..) => ErrorClass::Numerical,
        }
    }
}
