//! Numerical completion of incomplete systems of reproducing kernels.
//!
//! Given nodes `Λ` whose kernels `{k_λ}` are incomplete in a Paley–Wiener space
//! or in a de Branges space `H(E)` with finitely presented `E`, this crate builds
//! the restricted space `{T : G_Λ T ∈ H(E)}`, finds a real set `S` such that
//! `{k_λ}_{λ ∈ Λ ∪ S}` is complete and minimal, and checks the result.
//!
//! Module map:
//!
//! - [`entire`]: canonical products, Blaschke sums, structure functions `E`, phases.
//! - [`space`]: the ambient space `H(E)`, its kernel and inner products.
//! - [`restricted`]: the restricted space and its kernel `κ`.
//! - [`completion`]: anchor choice, zero scanning and assembly of `S`.
//! - [`verification`]: characterization checks and brute-force oracles.

pub mod completion;
pub mod entire;
pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod restricted;
pub mod space;
pub mod verification;

pub use num_complex::Complex64 as C64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use completion::{complete, CompletionParams, CompletionResult};
pub use entire::{NodeSequence, StructureFunction, Truncation};
pub use error::{CoreError, ErrorClass, Result};
pub use restricted::{KappaCombination, RestrictedSpace, RidgePolicy};
pub use space::AmbientSpace;
