//! Symmetric Gaussian channel model: output quadrature moments, exact
//! fidelity, sifting probability, and bit error rate as closed forms.
//!
//! Conventions: quadratures have vacuum variance 1/4, excess noise `xi` is
//! measured in those units (output quadrature variance `(1 + xi)/4`), and
//! the coherent amplitude `alpha` is real and positive.

use crate::fp;
use crate::{Error, Result};

/// Sign of the transmitted coherent amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    #[inline]
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Symmetric Gaussian channel: transmission `eta` and excess noise `xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelParams {
    pub eta: f64,
    pub xi: f64,
}

impl ChannelParams {
    pub fn new(eta: f64, xi: f64) -> Result<Self> {
        let ch = ChannelParams { eta, xi };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Domain("channel transmission eta must lie in [0, 1]"));
        }
        if !self.xi.is_finite() || self.xi < 0.0 {
            return Err(Error::Domain("excess noise xi must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Alice/Bob protocol choices: coherent amplitude `alpha > 0`, postselection
/// threshold `x_th >= 0`, and error-correction inefficiency `f_ec >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProtocolParams {
    pub alpha: f64,
    pub x_th: f64,
    pub f_ec: f64,
}

impl ProtocolParams {
    pub fn new(alpha: f64, x_th: f64, f_ec: f64) -> Result<Self> {
        let p = ProtocolParams { alpha, x_th, f_ec };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::Domain("coherent amplitude alpha must be > 0"));
        }
        if !self.x_th.is_finite() || self.x_th < 0.0 {
            return Err(Error::Domain("postselection threshold x_th must be >= 0"));
        }
        if !self.f_ec.is_finite() || self.f_ec < 1.0 {
            return Err(Error::Domain("error-correction inefficiency f_ec must be >= 1"));
        }
        Ok(())
    }
}

/// First and second quadrature moments of a received state.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub mean_x2: f64,
    pub mean_p2: f64,
}

impl Moments {
    /// Checks the physicality invariants: nonnegative variances and the
    /// uncertainty floor `var_x + var_p >= 1/2` of this convention.
    pub fn validate(&self) -> Result<()> {
        let var_x = self.mean_x2 - self.mean_x * self.mean_x;
        let var_p = self.mean_p2 - self.mean_p * self.mean_p;
        if var_x < 0.0 || var_p < 0.0 {
            return Err(Error::Domain("moments imply a negative variance"));
        }
        if var_x + var_p < 0.5 - 1e-12 {
            return Err(Error::Domain("moments violate the uncertainty floor"));
        }
        Ok(())
    }
}

/// Output moments of the channel for input `|sign * alpha>`:
/// `<x> = sign sqrt(eta) alpha`, `<p> = 0`,
/// `<x^2> = eta alpha^2 + (1 + xi)/4`, `<p^2> = (1 + xi)/4`.
pub fn output_moments(ch: &ChannelParams, alpha: f64, sign: Sign) -> Moments {
    let quarter = 0.25 * (1.0 + ch.xi);
    let mean_x = sign.factor() * fp::sqrt(ch.eta) * alpha;
    Moments {
        mean_x,
        mean_p: 0.0,
        mean_x2: ch.eta * alpha * alpha + quarter,
        mean_p2: quarter,
    }
}

#[inline]
fn tail_scale(xi: f64) -> f64 {
    fp::sqrt(2.0 / (1.0 + xi))
}

/// Probability that an x-quadrature outcome passes the postselection
/// `|x| >= x_th`, averaged over the two modulation signs.
pub fn sift_probability(p: &ProtocolParams, ch: &ChannelParams) -> f64 {
    let s = tail_scale(ch.xi);
    let mu = fp::sqrt(ch.eta) * p.alpha;
    0.5 * crate::math::erfc_finite(s * (p.x_th - mu))
        + 0.5 * crate::math::erfc_finite(s * (p.x_th + mu))
}

/// Bit error rate of the sifted key.
///
/// The error event is an outcome beyond `-x_th` when `+alpha` was sent,
/// i.e. the far Gaussian tail `erfc(s (x_th + sqrt(eta) alpha)) / (2 p_sift)`.
/// This vanishes for a strong clean signal and equals 1/2 at `alpha -> 0`;
/// the Monte Carlo sampler pins this convention numerically.
///
/// Undefined (NaN) when the sifting probability underflows to zero; the
/// rate pipeline guards that case before calling here.
pub fn bit_error_rate(p: &ProtocolParams, ch: &ChannelParams) -> f64 {
    let s = tail_scale(ch.xi);
    let mu = fp::sqrt(ch.eta) * p.alpha;
    let p_sift = sift_probability(p, ch);
    crate::math::erfc_finite(s * (p.x_th + mu)) / (2.0 * p_sift)
}

/// Exact fidelity of the channel output to the attenuated coherent state:
/// `1 / (1 + xi/2)`.
pub fn exact_fidelity(ch: &ChannelParams) -> f64 {
    1.0 / (1.0 + 0.5 * ch.xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn proto(alpha: f64, x_th: f64) -> ProtocolParams {
        ProtocolParams::new(alpha, x_th, 1.0).unwrap()
    }

    #[test]
    fn moments_noiseless_unit_transmission() {
        let ch = ChannelParams::new(1.0, 0.0).unwrap();
        let m = output_moments(&ch, 0.5, Sign::Plus);
        assert_eq!(m.mean_x, 0.5);
        assert_eq!(m.mean_p, 0.0);
        assert_eq!(m.mean_x2, 0.5);
        assert_eq!(m.mean_p2, 0.25);
        m.validate().unwrap();
    }

    #[test]
    fn moments_full_loss_erases_signal() {
        let ch = ChannelParams::new(0.0, 0.3).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            assert_eq!(output_moments(&ch, 1.7, sign).mean_x, 0.0);
        }
    }

    #[test]
    fn moments_generic_point() {
        let ch = ChannelParams::new(0.5, 0.1).unwrap();
        let m = output_moments(&ch, 0.6, Sign::Minus);
        assert!((m.mean_x - (-0.6 * 0.5f64.sqrt())).abs() < 1e-15);
        assert!((m.mean_x2 - (0.18 + 0.275)).abs() < 1e-15);
        assert_eq!(m.mean_p2, 0.275);
    }

    #[test]
    fn sift_probability_is_one_without_threshold() {
        for &(eta, xi, alpha) in &[(1.0, 0.0, 0.4), (0.3, 0.2, 1.1), (0.9, 0.05, 0.6)] {
            let ch = ChannelParams::new(eta, xi).unwrap();
            let p = sift_probability(&proto(alpha, 0.0), &ch);
            assert!((p - 1.0).abs() <= 1e-15, "p_sift = {p}");
        }
    }

    #[test]
    fn sift_probability_weak_signal_limit() {
        let ch = ChannelParams::new(0.7, 0.08).unwrap();
        let x_th = 0.5;
        let p = sift_probability(&proto(1e-12, x_th), &ch);
        let want = crate::math::erfc((2.0 / 1.08f64).sqrt() * x_th).unwrap();
        assert!((p - want).abs() <= 1e-10);
    }

    #[test]
    fn bit_error_rate_limits() {
        let ch = ChannelParams::new(0.8, 0.04).unwrap();
        // No signal: random sign regardless of threshold.
        for &x_th in &[0.0, 0.3, 0.9] {
            let e = bit_error_rate(&proto(1e-13, x_th), &ch);
            assert!((e - 0.5).abs() <= 1e-9, "e_bit = {e}");
        }
        // Strong clean signal at zero threshold: far-tail oracle.
        let clean = ChannelParams::new(1.0, 0.0).unwrap();
        let e = bit_error_rate(&proto(2.0, 0.0), &clean);
        let want = 0.5 * crate::math::erfc(2.0 * std::f64::consts::SQRT_2).unwrap();
        assert!((e - want).abs() <= 1e-18, "e_bit = {e:e}");
        assert!(e < 1e-4, "strong signal must have a tiny error rate");
    }

    #[test]
    fn bit_error_rate_decreases_with_threshold() {
        let ch = ChannelParams::new(0.8, 0.1).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..20 {
            let e = bit_error_rate(&proto(0.6, 0.1 * i as f64), &ch);
            assert!(e < prev, "e_bit not decreasing at step {i}");
            prev = e;
        }
    }

    #[test]
    fn exact_fidelity_values() {
        assert_eq!(exact_fidelity(&ChannelParams::new(0.5, 0.0).unwrap()), 1.0);
        let f = exact_fidelity(&ChannelParams::new(0.5, 1.0).unwrap());
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
        let f = exact_fidelity(&ChannelParams::new(0.5, 0.2).unwrap());
        assert!((f - 1.0 / 1.1).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_params() {
        assert!(ChannelParams::new(1.5, 0.0).is_err());
        assert!(ChannelParams::new(-0.1, 0.0).is_err());
        assert!(ChannelParams::new(0.5, -0.01).is_err());
        assert!(ProtocolParams::new(0.0, 0.0, 1.0).is_err());
        assert!(ProtocolParams::new(0.5, -0.2, 1.0).is_err());
        assert!(ProtocolParams::new(0.5, 0.2, 0.9).is_err());
    }

    proptest::proptest! {
        #[test]
        fn sift_monotonicity_and_error_band(
            eta in 0.05f64..=1.0,
            xi in 0.0f64..0.5,
            alpha in 0.05f64..1.5,
            x_th in 0.0f64..1.5,
        ) {
            let ch = ChannelParams::new(eta, xi).unwrap();
            let p0 = sift_probability(&proto(alpha, x_th), &ch);
            // Non-increasing in x_th, non-decreasing in alpha.
            let p_higher_th = sift_probability(&proto(alpha, x_th + 0.1), &ch);
            let p_higher_alpha = sift_probability(&proto(alpha + 0.1, x_th), &ch);
            proptest::prop_assert!(p_higher_th <= p0 + 1e-15);
            proptest::prop_assert!(p_higher_alpha >= p0 - 1e-15);

            // Errors stay in [0, 1/2] for a real positive amplitude.
            let e = bit_error_rate(&proto(alpha, x_th), &ch);
            proptest::prop_assert!((0.0..=0.5 + 1e-15).contains(&e));

            // The two tails add up to twice the sift probability.
            let s = (2.0 / (1.0 + xi)).sqrt();
            let mu = eta.sqrt() * alpha;
            let near = crate::math::erfc(s * (x_th - mu)).unwrap();
            let far = crate::math::erfc(s * (x_th + mu)).unwrap();
            proptest::prop_assert!((near + far - 2.0 * p0).abs() <= 1e-14);

            // Physicality of the output moments.
            output_moments(&ch, alpha, Sign::Plus).validate().unwrap();
            output_moments(&ch, alpha, Sign::Minus).validate().unwrap();
        }
    }
}
