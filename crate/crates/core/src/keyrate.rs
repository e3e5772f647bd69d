//! The security-bound pipeline: dual matrix elements, the constant
//! `B_{kappa,gamma,beta}`, the phase-error upper bound, and the key rate.
//!
//! The bound is valid for every choice of the dual parameters
//! `kappa, gamma >= 0` and complex `beta`, so any under-optimized choice
//! still certifies a rate; the optimizer only tightens it.

use crate::channel::{bit_error_rate, sift_probability, ChannelParams, ProtocolParams};
use crate::fidelity::f0_gaussian;
use crate::fp;
use crate::math::{binary_entropy_clamped, erfc_finite, sym_eig_extreme, Extreme, SymMatrix};
use crate::{Error, Result};

const SQRT_2: f64 = core::f64::consts::SQRT_2;
/// 2 sqrt(2/pi), the slope constant of the odd-parity limit element.
const TWO_SQRT_2_OVER_PI: f64 = 1.595_769_121_605_730_7;

/// Free parameters of the security bound: `kappa, gamma >= 0` and the
/// reference amplitude `beta = beta_r + i beta_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DualParams {
    pub kappa: f64,
    pub gamma: f64,
    pub beta_r: f64,
    pub beta_i: f64,
}

impl DualParams {
    /// Real-amplitude constructor; the Gaussian-channel path uses this.
    pub fn real(kappa: f64, gamma: f64, beta: f64) -> Result<Self> {
        let d = DualParams {
            kappa,
            gamma,
            beta_r: beta,
            beta_i: 0.0,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.kappa.is_finite() || self.kappa < 0.0 {
            return Err(Error::Domain("dual parameter kappa must be >= 0"));
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::Domain("dual parameter gamma must be >= 0"));
        }
        if !self.beta_r.is_finite() || !self.beta_i.is_finite() {
            return Err(Error::Domain("dual amplitude beta must be finite"));
        }
        Ok(())
    }
}

/// Coherent-state matrix elements entering `B_{kappa,gamma,beta}`:
/// parity weights `c`, success elements `d`, and variances `v = d - d^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BElements {
    pub c_ev: f64,
    pub c_od: f64,
    pub d_ev: f64,
    pub d_od: f64,
    pub v_ev: f64,
    pub v_od: f64,
}

/// Matrix elements for the dual constant.
///
/// `c_ev = e^{-|b|^2} cosh|b|^2`, `c_od = e^{-|b|^2} sinh|b|^2`, and
///
/// ```text
/// d_ev = [erfc(s2 (x_th - b_r)) + erfc(s2 (x_th + b_r))
///         + 2 e^{-2 b_r^2} cos(2 b_r b_i) erfc(s2 x_th)] / (4 c_ev)
/// d_od = [same two erfc terms - the cosine term] / (4 c_od)
/// ```
///
/// with `s2 = sqrt(2)`. The odd quotient divides by `4 c_od` (its own
/// parity weight): this keeps `c_ev d_ev + c_od d_od` equal to the
/// coherent-state sift probability, and the Fock-space quadrature check
/// confirms it numerically. At `beta -> 0` the odd quotient is 0/0 and is
/// replaced by its limit `erfc(s2 x_th) + 2 sqrt(2/pi) x_th e^{-2 x_th^2}`
/// (scaled by `b_r^2/|b|^2` off the real axis).
pub fn b_elements(dual: &DualParams, x_th: f64) -> Result<BElements> {
    dual.validate()?;
    if !x_th.is_finite() || x_th < 0.0 {
        return Err(Error::Domain("postselection threshold x_th must be >= 0"));
    }
    let b2 = dual.beta_r * dual.beta_r + dual.beta_i * dual.beta_i;
    // e^{-b} cosh(b) and e^{-b} sinh(b) without cancellation.
    let em = fp::exp(-2.0 * b2);
    let c_ev = 0.5 * (1.0 + em);
    let c_od = 0.5 * (1.0 - em);

    let sym = erfc_finite(SQRT_2 * (x_th - dual.beta_r)) + erfc_finite(SQRT_2 * (x_th + dual.beta_r));
    let cosine = 2.0
        * fp::exp(-2.0 * dual.beta_r * dual.beta_r)
        * fp::cos(2.0 * dual.beta_r * dual.beta_i)
        * erfc_finite(SQRT_2 * x_th);

    let d_ev = (sym + cosine) / (4.0 * c_ev);
    let d_od = if b2 < 1e-8 {
        // 0/0 limit; off the real axis the leading numerator carries b_r^2.
        let weight = if b2 == 0.0 { 1.0 } else { dual.beta_r * dual.beta_r / b2 };
        weight
            * (erfc_finite(SQRT_2 * x_th)
                + TWO_SQRT_2_OVER_PI * x_th * fp::exp(-2.0 * x_th * x_th))
    } else {
        (sym - cosine) / (4.0 * c_od)
    };

    // v = d - d^2 is a variance; rounding can push d a few ulps past 1
    // (e.g. at x_th = 0, where d = 1 exactly), which would put a negative
    // number under the square roots downstream.
    Ok(BElements {
        c_ev,
        c_od,
        d_ev,
        d_od,
        v_ev: (d_ev - d_ev * d_ev).max(0.0),
        v_od: (d_od - d_od * d_od).max(0.0),
    })
}

/// `B` for precomputed elements; the hot path of the grid optimizer, where
/// `(beta, x_th)` stay fixed while `(kappa, gamma)` scan.
pub fn b_constant_from_elements(el: &BElements, kappa: f64, gamma: f64) -> Result<f64> {
    let sq_od = fp::sqrt(el.v_od);
    let sq_ev = fp::sqrt(el.v_ev);
    let cross = kappa * fp::sqrt(el.c_od * el.c_ev);

    let m4 = SymMatrix::from_upper_fn(4, |i, j| match (i, j) {
        (0, 0) => 1.0,
        (0, 1) => sq_od,
        (1, 1) => kappa * el.c_od + el.d_od,
        (1, 2) => cross,
        (2, 2) => kappa * el.c_ev + el.d_ev - gamma,
        (2, 3) => sq_ev,
        (3, 3) => 1.0 - gamma,
        _ => 0.0,
    });
    let m2 = SymMatrix::from_upper_fn(2, |i, j| match (i, j) {
        (0, 0) => kappa * el.c_ev,
        (0, 1) => cross,
        (1, 1) => kappa * el.c_od - gamma,
        _ => unreachable!(),
    });

    let lam4 = sym_eig_extreme(&m4, Extreme::Max)?;
    let lam2 = sym_eig_extreme(&m2, Extreme::Max)?;
    Ok(lam4.max(lam2))
}

/// The channel-independent constant
/// `B = max(lambda_max(M_4d), lambda_max(M_2d))` of the operator
/// inequality.
pub fn b_constant(dual: &DualParams, x_th: f64) -> Result<f64> {
    let el = b_elements(dual, x_th)?;
    b_constant_from_elements(&el, dual.kappa, dual.gamma)
}

/// `(1 - e^{-2 alpha^2}) / 2`, the preparation-side weight of the gamma
/// term.
pub fn minus_term(alpha: f64) -> f64 {
    -0.5 * fp::expm1(-2.0 * alpha * alpha)
}

/// Upper bound on the phase error rate:
/// `[B + gamma (1 - e^{-2 alpha^2})/2 - kappa F0] / p_sift`,
/// with `F0` evaluated at the real part of `beta` (the Gaussian-channel
/// path takes `beta` real).
pub fn phase_error_bound(p: &ProtocolParams, ch: &ChannelParams, dual: &DualParams) -> Result<f64> {
    p.validate()?;
    ch.validate()?;
    let p_sift = sift_probability(p, ch);
    if p_sift <= 0.0 {
        return Err(Error::UndefinedRate);
    }
    let b = b_constant(dual, p.x_th)?;
    let f0 = f0_gaussian(p, ch, dual.beta_r);
    Ok((b + dual.gamma * minus_term(p.alpha) - dual.kappa * f0) / p_sift)
}

/// Key rate with every intermediate term exposed.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KeyRateBreakdown {
    pub p_sift: f64,
    pub e_bit: f64,
    pub f0: f64,
    pub b_const: f64,
    pub minus_term: f64,
    /// Raw phase-error bound; may be negative (vacuous slack) or above 1/2
    /// (certifies nothing). The rate below applies the clamping.
    pub e_ph_bound: f64,
    pub rate: f64,
}

/// Evaluates the full pipeline:
/// `rate = p_sift * max(0, 1 - h(e_ph) - f_ec * h(e_bit))`, where the
/// phase-error bound is clamped to 0 from below and a bound at or above
/// 1/2 yields rate 0.
///
/// Degenerate inputs produce `rate = 0` rather than errors: when the
/// sifting probability underflows to zero, the error rates are reported as
/// 1/2 and infinity.
pub fn key_rate(p: &ProtocolParams, ch: &ChannelParams, dual: &DualParams) -> Result<KeyRateBreakdown> {
    p.validate()?;
    ch.validate()?;
    let p_sift = sift_probability(p, ch);
    let b = b_constant(dual, p.x_th)?;
    let f0 = f0_gaussian(p, ch, dual.beta_r);
    let minus = minus_term(p.alpha);
    if p_sift <= 0.0 {
        return Ok(KeyRateBreakdown {
            p_sift: 0.0,
            e_bit: 0.5,
            f0,
            b_const: b,
            minus_term: minus,
            e_ph_bound: f64::INFINITY,
            rate: 0.0,
        });
    }
    let e_bit = bit_error_rate(p, ch);
    let e_ph = (b + dual.gamma * minus - dual.kappa * f0) / p_sift;
    let rate = rate_from_errors(p_sift, e_ph, e_bit, p.f_ec);
    Ok(KeyRateBreakdown {
        p_sift,
        e_bit,
        f0,
        b_const: b,
        minus_term: minus,
        e_ph_bound: e_ph,
        rate,
    })
}

/// Shared clamping rule: negative phase-error bounds count as 0, bounds at
/// or above 1/2 certify nothing.
pub(crate) fn rate_from_errors(p_sift: f64, e_ph: f64, e_bit: f64, f_ec: f64) -> f64 {
    let e_ph = e_ph.max(0.0);
    if e_ph >= 0.5 {
        return 0.0;
    }
    let bracket = 1.0 - binary_entropy_clamped(e_ph) - f_ec * binary_entropy_clamped(e_bit.clamp(0.0, 1.0));
    p_sift * bracket.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::erfc;

    fn real_dual(kappa: f64, gamma: f64, beta: f64) -> DualParams {
        DualParams::real(kappa, gamma, beta).unwrap()
    }

    #[test]
    fn parity_weights_at_zero_amplitude() {
        let el = b_elements(&real_dual(1.0, 1.0, 0.0), 0.3).unwrap();
        assert_eq!(el.c_ev, 1.0);
        assert_eq!(el.c_od, 0.0);
    }

    #[test]
    fn parity_weights_sum_to_one() {
        for &beta in &[0.1, 0.45, 0.9, 2.0] {
            let el = b_elements(&real_dual(1.0, 1.0, beta), 0.2).unwrap();
            assert!((el.c_ev + el.c_od - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn odd_limit_joins_small_beta_values() {
        // The 0/0 convention at beta = 0 must continuously extend the
        // direct quotient.
        let x_th = 0.35;
        let at_zero = b_elements(&real_dual(1.0, 1.0, 0.0), x_th).unwrap().d_od;
        let nearby = b_elements(&real_dual(1.0, 1.0, 1e-3), x_th).unwrap().d_od;
        assert!((at_zero - nearby).abs() <= 1e-5, "{at_zero} vs {nearby}");
        // And it matches the second excited coefficient form.
        let want = erfc(SQRT_2 * x_th).unwrap()
            + 2.0 * (2.0 / std::f64::consts::PI).sqrt() * x_th * (-2.0 * x_th * x_th).exp();
        assert!((at_zero - want).abs() <= 1e-15);
    }

    #[test]
    fn sift_identity_of_elements() {
        // c_ev d_ev + c_od d_od is the coherent-state sift probability.
        for &(beta, x_th) in &[(0.3, 0.0), (0.6, 0.4), (1.1, 0.8)] {
            let el = b_elements(&real_dual(1.0, 1.0, beta), x_th).unwrap();
            let want = 0.5 * erfc(SQRT_2 * (x_th - beta)).unwrap()
                + 0.5 * erfc(SQRT_2 * (x_th + beta)).unwrap();
            let got = el.c_ev * el.d_ev + el.c_od * el.d_od;
            assert!((got - want).abs() <= 1e-14);
        }
    }

    #[test]
    fn variance_identity_holds() {
        for &(beta, x_th) in &[(0.2, 0.1), (0.7, 0.5), (1.4, 1.2)] {
            let el = b_elements(&real_dual(1.0, 1.0, beta), x_th).unwrap();
            assert!((el.v_ev - (el.d_ev - el.d_ev * el.d_ev)).abs() <= 1e-12);
            assert!((el.v_od - (el.d_od - el.d_od * el.d_od)).abs() <= 1e-12);
            for v in [el.c_ev, el.c_od, el.d_ev, el.d_od] {
                assert!((0.0..=1.0).contains(&v), "element out of [0,1]: {v}");
            }
            assert!(el.v_ev >= 0.0 && el.v_od >= 0.0);
        }
    }

    #[test]
    fn variances_stay_nonnegative_at_zero_threshold() {
        // At x_th = 0 the success elements are exactly 1, so d - d^2 sits
        // on the rounding boundary; the square roots downstream must never
        // see a negative value.
        for k in 1..=300 {
            let beta = 0.005 * k as f64;
            let el = b_elements(&real_dual(1.0, 1.0, beta), 0.0).unwrap();
            assert!(el.v_ev >= 0.0 && el.v_od >= 0.0, "beta = {beta}");
            let b = b_constant_from_elements(&el, 17.3, 1.1).unwrap();
            assert!(b.is_finite());
        }
    }

    #[test]
    fn b_constant_block_diagonal_case() {
        // kappa = gamma = 0: M_2d vanishes and M_4d splits into two 2x2
        // blocks with closed-form largest eigenvalues.
        let dual = real_dual(0.0, 0.0, 0.55);
        let x_th = 0.3;
        let el = b_elements(&dual, x_th).unwrap();
        let block_max = |d: f64, v: f64| {
            let mid = 0.5 * (1.0 + d);
            mid + (0.25 * (1.0 - d) * (1.0 - d) + v).sqrt()
        };
        let want = block_max(el.d_od, el.v_od).max(block_max(el.d_ev, el.v_ev));
        let got = b_constant(&dual, x_th).unwrap();
        assert!((got - want).abs() <= 1e-12, "got {got}, want {want}");
        assert!(got >= 1.0);
    }

    #[test]
    fn b_constant_dominates_both_blocks() {
        for &(kappa, gamma) in &[(0.0, 0.0), (3.0, 0.4), (12.0, 1.6), (30.0, 2.0)] {
            let dual = real_dual(kappa, gamma, 0.5);
            let el = b_elements(&dual, 0.3).unwrap();
            let b = b_constant(&dual, 0.3).unwrap();
            let m2_max = {
                let (_, hi) = crate::math::eig2x2(
                    kappa * el.c_ev,
                    kappa * (el.c_ev * el.c_od).sqrt(),
                    kappa * el.c_od - gamma,
                );
                hi
            };
            assert!(b >= m2_max - 1e-12);
        }
    }

    #[test]
    fn b_constant_matches_quartic_root_oracle() {
        let dual = real_dual(5.0, 0.5, 0.5);
        let x_th = 0.3;
        let el = b_elements(&dual, x_th).unwrap();
        let m4 = SymMatrix::from_upper_fn(4, |i, j| match (i, j) {
            (0, 0) => 1.0,
            (0, 1) => el.v_od.sqrt(),
            (1, 1) => dual.kappa * el.c_od + el.d_od,
            (1, 2) => dual.kappa * (el.c_od * el.c_ev).sqrt(),
            (2, 2) => dual.kappa * el.c_ev + el.d_ev - dual.gamma,
            (2, 3) => el.v_ev.sqrt(),
            (3, 3) => 1.0 - dual.gamma,
            _ => 0.0,
        });
        let lam4 = largest_root_by_bisection(&m4);
        let m2_max = {
            let (_, hi) = crate::math::eig2x2(
                dual.kappa * el.c_ev,
                dual.kappa * (el.c_ev * el.c_od).sqrt(),
                dual.kappa * el.c_od - dual.gamma,
            );
            hi
        };
        let want = lam4.max(m2_max);
        let got = b_constant(&dual, x_th).unwrap();
        assert!(
            (got - want).abs() <= 1e-9 * want.abs().max(1.0),
            "got {got}, oracle {want}"
        );
    }

    #[test]
    fn b_constant_even_in_beta_i() {
        for &bi in &[0.2, 0.9, 1.7] {
            let up = DualParams {
                kappa: 4.0,
                gamma: 0.6,
                beta_r: 0.5,
                beta_i: bi,
            };
            let down = DualParams { beta_i: -bi, ..up };
            let a = b_constant(&up, 0.25).unwrap();
            let b = b_constant(&down, 0.25).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn phase_error_channel_independent_numerator_at_zero_dual() {
        let p = ProtocolParams::new(0.6, 0.2, 1.0).unwrap();
        let dual = real_dual(0.0, 0.0, 0.55);
        let b0 = b_constant(&dual, p.x_th).unwrap();
        for &(eta, xi) in &[(1.0, 0.0), (0.5, 0.3), (0.1, 0.05)] {
            let ch = ChannelParams::new(eta, xi).unwrap();
            let e_ph = phase_error_bound(&p, &ch, &dual).unwrap();
            let p_sift = sift_probability(&p, &ch);
            assert!((e_ph * p_sift - b0).abs() <= 1e-12);
        }
    }

    #[test]
    fn phase_error_grows_with_noise() {
        // x_th = 0 pins p_sift = 1, isolating the -kappa F0 dependence:
        // F0 falls linearly in xi, so the bound must not decrease.
        let p = ProtocolParams::new(0.6, 0.0, 1.0).unwrap();
        let dual = real_dual(8.0, 0.5, 0.5);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..10 {
            let ch = ChannelParams::new(0.9, 0.02 * i as f64).unwrap();
            let e = phase_error_bound(&p, &ch, &dual).unwrap();
            assert!(e >= prev - 1e-12, "e_ph decreased at step {i}");
            prev = e;
        }
    }

    #[test]
    fn rate_zero_when_phase_error_saturates() {
        // kappa = gamma = 0 gives B >= 1, so e_ph >= 1 >= 0.5: rate 0.
        let p = ProtocolParams::new(0.6, 0.0, 1.0).unwrap();
        let ch = ChannelParams::new(0.9, 0.01).unwrap();
        let out = key_rate(&p, &ch, &real_dual(0.0, 0.0, 0.55)).unwrap();
        assert_eq!(out.rate, 0.0);
        assert!(out.e_ph_bound >= 0.5);
    }

    #[test]
    fn lossless_noiseless_channel_certifies_key() {
        let ch = ChannelParams::new(1.0, 0.0).unwrap();
        let alpha = 0.59;
        let p = ProtocolParams::new(alpha, 0.0, 1.0).unwrap();
        // Near-optimal dual choice: beta matched, kappa at the top of the
        // usual grid, gamma close to its ceiling.
        let dual = real_dual(30.0, 2.0, alpha);
        let out = key_rate(&p, &ch, &dual).unwrap();
        assert!(out.rate > 0.0, "breakdown: {out:?}");
        assert!((out.f0 - 1.0).abs() <= 1e-12);
        assert!((out.minus_term - 0.5 * (1.0 - (-2.0 * alpha * alpha).exp())).abs() <= 1e-15);
    }

    #[test]
    fn degenerate_sift_probability_reports_zero_rate() {
        // x_th far beyond any reachable outcome underflows p_sift.
        let p = ProtocolParams::new(0.5, 25.0, 1.0).unwrap();
        let ch = ChannelParams::new(0.9, 0.0).unwrap();
        assert!(matches!(
            phase_error_bound(&p, &ch, &real_dual(1.0, 1.0, 0.5)),
            Err(Error::UndefinedRate)
        ));
        let out = key_rate(&p, &ch, &real_dual(1.0, 1.0, 0.5)).unwrap();
        assert_eq!(out.rate, 0.0);
        assert_eq!(out.p_sift, 0.0);
    }

    #[test]
    fn rejects_invalid_dual() {
        assert!(DualParams::real(-1.0, 0.0, 0.5).is_err());
        assert!(DualParams::real(1.0, -0.2, 0.5).is_err());
        assert!(b_elements(&real_dual(1.0, 1.0, 0.5), -0.1).is_err());
    }

    /// Largest eigenvalue oracle: bisection on the Sylvester inertia of
    /// M - lambda I, independent of the Jacobi solver.
    fn largest_root_by_bisection(m: &SymMatrix) -> f64 {
        let n = m.dim();
        let roots_above = |lambda: f64| -> usize {
            let mut a: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| m.get(i, j) - if i == j { lambda } else { 0.0 })
                        .collect()
                })
                .collect();
            let mut positive = 0;
            for k in 0..n {
                let mut pivot = a[k][k];
                if pivot == 0.0 {
                    pivot = 1e-300;
                }
                if pivot > 0.0 {
                    positive += 1;
                }
                let row_k = a[k].clone();
                for row in a.iter_mut().take(n).skip(k + 1) {
                    let factor = row[k] / pivot;
                    for (slot, &value) in row.iter_mut().zip(&row_k).skip(k) {
                        *slot -= factor * value;
                    }
                }
            }
            positive
        };
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for i in 0..n {
            let radius: f64 = (0..n).filter(|&j| j != i).map(|j| m.get(i, j).abs()).sum();
            hi = hi.max(m.get(i, i) + radius);
            lo = lo.min(m.get(i, i) - radius);
        }
        let mut hi = hi + 1.0;
        let mut lo = lo - 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if roots_above(mid) >= 1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}
