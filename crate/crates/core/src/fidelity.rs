//! Fidelity lower bounds.
//!
//! * [`theorem1_bound`] — the moment-form bound
//!   `F >= 3/2 - <(x - beta_x)^2> - <(p - beta_p)^2>` for a single state.
//! * [`f0_from_moments`] / [`f0_gaussian`] — the two-state average `F0`,
//!   from raw moments or in the symmetric-Gaussian-channel closed form
//!   `(1 - xi/2) - (sqrt(eta) alpha - beta)^2`.
//! * [`lambda_bound`] — the heterodyne-statistics bound `Lambda_{m,r}`,
//!   kept for comparison; the three bounds obey
//!   `1/(1 + xi/2) >= Lambda_{1,0.4120} >= 1 - xi/2`.
//!
//! The moment bounds may be negative (vacuous); they are returned as-is and
//! clamped only at the key-rate stage.

use alloc::vec::Vec;

use crate::channel::{ChannelParams, Moments, ProtocolParams};
use crate::fp;
use crate::{Error, Result};

/// Parameters of the heterodyne fidelity bound `Lambda_{m,r}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LambdaParams {
    pub m: u32,
    pub r: f64,
}

impl LambdaParams {
    /// The pair used throughout the comparisons.
    pub const DEFAULT: LambdaParams = LambdaParams { m: 1, r: 0.4120 };

    pub fn validate(&self) -> Result<()> {
        if !self.r.is_finite() || self.r < 0.0 {
            return Err(Error::Domain("lambda bound parameter r must be >= 0"));
        }
        Ok(())
    }
}

/// Moment-form fidelity bound for one state against the coherent state at
/// `(beta_x, beta_p)`. May be negative; not clamped here.
pub fn theorem1_bound(mom: &Moments, beta_x: f64, beta_p: f64) -> f64 {
    let second_sum = mom.mean_x2 - 2.0 * beta_x * mom.mean_x + beta_x * beta_x + mom.mean_p2
        - 2.0 * beta_p * mom.mean_p
        + beta_p * beta_p;
    1.5 - second_sum
}

/// Two-state average bound `F0` from the moments of the `+` and `-` branch,
/// referenced to `(+beta_x, +beta_p)` and `(-beta_x, -beta_p)` respectively.
/// Algebraically equal to the average of the two single-state bounds.
pub fn f0_from_moments(mom_plus: &Moments, mom_minus: &Moments, beta_x: f64, beta_p: f64) -> f64 {
    0.5 * theorem1_bound(mom_plus, beta_x, beta_p)
        + 0.5 * theorem1_bound(mom_minus, -beta_x, -beta_p)
}

/// Closed form of `F0` for the symmetric Gaussian channel with real
/// `beta > 0`: `(1 - xi/2) - (sqrt(eta) alpha - beta)^2`.
pub fn f0_gaussian(p: &ProtocolParams, ch: &ChannelParams, beta: f64) -> f64 {
    let gap = fp::sqrt(ch.eta) * p.alpha - beta;
    (1.0 - 0.5 * ch.xi) - gap * gap
}

/// Heterodyne-statistics fidelity bound
/// `Lambda_{m,r}(xi) = 1/(1+xi/2) [1 - (-1)^{m+1} ((xi/2)/(1 + r(1+xi/2)))^{m+1}]`.
pub fn lambda_bound(xi: f64, lp: &LambdaParams) -> f64 {
    let half_xi = 0.5 * xi;
    let base = half_xi / (1.0 + lp.r * (1.0 + half_xi));
    let power = lp.m + 1;
    let sign = if power.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut pow = 1.0;
    for _ in 0..power {
        pow *= base;
    }
    (1.0 - sign * pow) / (1.0 + half_xi)
}

/// One row of the bound comparison: the exact fidelity, the heterodyne
/// bound at `(1, 0.4120)`, and the moment bound `1 - xi/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundRow {
    pub xi: f64,
    pub exact: f64,
    pub lambda: f64,
    pub theorem1: f64,
}

/// Evaluates the three fidelity bounds over a grid of excess-noise values.
pub fn bound_comparison_table(xi_grid: &[f64]) -> Result<Vec<BoundRow>> {
    let mut rows = Vec::with_capacity(xi_grid.len());
    for &xi in xi_grid {
        if !xi.is_finite() || xi < 0.0 {
            return Err(Error::Domain("bound table grid values must be >= 0"));
        }
        rows.push(BoundRow {
            xi,
            exact: 1.0 / (1.0 + 0.5 * xi),
            lambda: lambda_bound(xi, &LambdaParams::DEFAULT),
            theorem1: 1.0 - 0.5 * xi,
        });
    }
    Ok(rows)
}
