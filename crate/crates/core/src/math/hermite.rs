//! Harmonic-oscillator position wavefunctions in the variance-1/4
//! convention (`x = (a + a^dag)/2`, so `[x, p] = i/2`):
//!
//! ```text
//! psi_0(x) = (2/pi)^{1/4} e^{-x^2}
//! psi_{n+1}(x) = (2x / sqrt(n+1)) psi_n(x) - sqrt(n/(n+1)) psi_{n-1}(x)
//! ```
//!
//! The recurrence is the standard normalized three-term recurrence rescaled
//! to y = sqrt(2) x; it reproduces the closed form psi_1(x) = 2x psi_0(x)
//! (checked in the tests, along with quadrature normalization).

use crate::fp;
use crate::{Error, Result};

/// Largest supported excitation number.
pub const MAX_HERMITE_N: usize = 512;

/// `<x|n>` in the variance-1/4 convention.
///
/// Domain error for `n > MAX_HERMITE_N` or non-finite `x`.
pub fn hermite_psi(n: usize, x: f64) -> Result<f64> {
    if n > MAX_HERMITE_N {
        return Err(Error::Domain("hermite_psi: n beyond supported range"));
    }
    if !x.is_finite() {
        return Err(Error::Domain("hermite_psi: x must be finite"));
    }
    let psi0 = psi_zero(x);
    if n == 0 {
        return Ok(psi0);
    }
    let mut prev = psi0;
    let mut cur = 2.0 * x * psi0;
    for k in 1..n {
        let kf = k as f64;
        let next = 2.0 * x / fp::sqrt(kf + 1.0) * cur - fp::sqrt(kf / (kf + 1.0)) * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Fills `out[n] = <x|n>` for `n <= out.len() - 1` in one recurrence pass;
/// shared by the Fock-space matrix builder so a whole wavefunction vector
/// costs one sweep per quadrature node.
pub(crate) fn hermite_psi_into(x: f64, out: &mut [f64]) {
    debug_assert!(out.len() <= MAX_HERMITE_N + 1);
    if out.is_empty() {
        return;
    }
    out[0] = psi_zero(x);
    if out.len() == 1 {
        return;
    }
    out[1] = 2.0 * x * out[0];
    for k in 1..out.len() - 1 {
        let kf = k as f64;
        out[k + 1] = 2.0 * x / fp::sqrt(kf + 1.0) * out[k] - fp::sqrt(kf / (kf + 1.0)) * out[k - 1];
    }
}

#[inline]
fn psi_zero(x: f64) -> f64 {
    // (2/pi)^{1/4}
    const NORM: f64 = 0.893_243_841_738_002_4;
    NORM * fp::exp(-x * x)
}
