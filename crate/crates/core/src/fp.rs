//! Thin wrappers around `libm` for the transcendentals used in this crate.
//!
//! Routing everything through `libm` (rather than the platform intrinsics)
//! keeps results bit-identical across targets and keeps the crate
//! `no_std`-clean.

#[inline(always)]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline(always)]
pub fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline(always)]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline(always)]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline(always)]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline(always)]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline(always)]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline(always)]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
