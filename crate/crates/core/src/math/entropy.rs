use crate::fp;
use crate::{Error, Result};

/// Binary entropy `h(e) = -e log2(e) - (1-e) log2(1-e)` with the convention
/// `0 log2(0) = 0`. Domain error outside `[0, 1]`.
pub fn binary_entropy(e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::Domain("binary_entropy: argument must lie in [0, 1]"));
    }
    Ok(binary_entropy_clamped(e))
}

/// Inner evaluation for arguments already known to lie in `[0, 1]`.
pub(crate) fn binary_entropy_clamped(e: f64) -> f64 {
    if e == 0.0 || e == 1.0 {
        return 0.0;
    }
    -e * fp::log2(e) - (1.0 - e) * fp::log2(1.0 - e)
}
