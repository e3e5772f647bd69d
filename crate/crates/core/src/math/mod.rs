//! Foundational numerics: complementary error function, binary entropy,
//! small dense symmetric eigensolvers, harmonic-oscillator wavefunctions,
//! and tail quadrature.
//!
//! Everything in this module is a pure function; no global state.

mod entropy;
mod erfc;
mod hermite;
mod quad;
mod sym_eig;

pub use entropy::binary_entropy;
pub use erfc::erfc;

pub(crate) use entropy::binary_entropy_clamped;
pub(crate) use erfc::erfc_finite;
pub(crate) use hermite::hermite_psi_into;
pub(crate) use quad::gauss_legendre;
#[cfg(test)]
pub(crate) use sym_eig::eig2x2;
pub use hermite::{hermite_psi, MAX_HERMITE_N};
pub use quad::integrate_tail;
pub use sym_eig::{sym_eig_extreme, Extreme, SymMatrix};
