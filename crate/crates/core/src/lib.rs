//! Pump, signal and idler dynamics of the trilinear boson Hamiltonian
//! `iχ(ab⁺c⁺ − a⁺bc)` at four levels of approximation, plus the entropy,
//! fidelity and squeezing diagnostics used to judge how thermal the signal
//! mode looks.
//!
//! With signal and idler starting in vacuum, the Manley–Rowe invariants split
//! the Hilbert space into sectors `{|s−n, n, n⟩ : 0 ≤ n ≤ s}` labelled by the
//! pump quanta `s` of the initial Fock component. Every solver here works in
//! that sector basis; the dense three-mode tensor only appears in the test
//! oracle.
//!
//! Units: `ħ = k_B = χ = 1`, `ω_b = ω_c = 1`, `ω_a = 2`. Time is the
//! dimensionless `τ = χt` and entropies are in nats.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod full;
pub mod info;
pub mod parametric;
pub mod scenario;
pub mod semiclassical;
pub mod shorttime;
pub mod special;

pub use error::{Error, Result};
pub use fock::{DensityMatrix, NumberDistribution, PumpWeights, TrimodalState};

pub type C64 = num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
