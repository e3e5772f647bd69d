//! Asymptotic secret-key-rate lower bounds for a continuous-variable QKD
//! protocol that transmits binary coherent states and measures them by
//! homodyne detection with postselection.
//!
//! The crate computes, optimizes, and independently verifies the key rate
//! for a symmetric Gaussian channel:
//!
//! * [`channel`] — closed forms for the channel output: quadrature moments,
//!   sifting probability, bit error rate, exact fidelity.
//! * [`fidelity`] — moment-based fidelity lower bounds and the heterodyne
//!   bound used for comparison.
//! * [`keyrate`] — the security-bound pipeline: the dual constant
//!   `B`, the phase-error upper bound, and the key rate with all
//!   intermediate terms exposed.
//! * [`optimizer`] — grid search over the protocol and dual parameters,
//!   with a line-search refinement of the reference amplitude.
//! * [`fock`] — truncated Fock-space construction of the measurement
//!   operators; verifies the operator inequality behind the bound and the
//!   closed-form matrix elements by quadrature.
//! * [`montecarlo`] — seeded sampling of homodyne outcomes; statistical
//!   oracle for the closed forms.
//! * [`math`] — the underlying numerics: `erfc`, binary entropy, small
//!   symmetric eigensolvers, oscillator wavefunctions, tail quadrature.
//!
//! The crate is `no_std`-compatible (with `alloc`); all floating-point
//! transcendentals go through `libm` so results are bit-stable across
//! platforms. Everything here is a pure function of its inputs and safe to
//! call concurrently.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod channel;
mod error;
pub mod fidelity;
pub mod fock;
pub mod keyrate;
pub mod math;
pub mod montecarlo;
pub mod optimizer;

pub(crate) mod fp;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
