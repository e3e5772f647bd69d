//! Statistical oracle: samples homodyne outcomes of the symmetric Gaussian
//! channel and reproduces the closed forms for the sift probability, bit
//! error rate, quadrature moments, and the fidelity bound.
//!
//! Sampling is fully deterministic: outcomes are generated in fixed blocks
//! of 65536 samples, each block driven by an xoshiro256++ stream seeded
//! from `(seed, block index)` through SplitMix64, and block contributions
//! are merged in block order. The merged report therefore depends only on
//! `(params, config)`, never on how blocks are scheduled across workers.
//! Gaussian deviates come from the Box-Muller transform (a deterministic
//! transform of uniforms, no rejection), so sample counts are exact.

use alloc::vec::Vec;

use crate::channel::{ChannelParams, Moments, ProtocolParams};
use crate::fidelity::f0_from_moments;
use crate::fp;
use crate::{Error, Result};

/// Name and version of the generator scheme recorded in every report.
pub const RNG_ALGORITHM: &str = "xoshiro256++-1.0/splitmix64-blocks/box-muller";

/// Number of samples per deterministic block.
pub const BLOCK_SAMPLES: u64 = 1 << 16;

/// Sampling configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McConfig {
    pub n_samples: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Domain("Monte Carlo sample count must be >= 1"));
        }
        Ok(())
    }
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

/// Estimated quadrature moments for one modulation sign.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentEstimates {
    pub mean_x: Estimate,
    pub mean_p: Estimate,
    pub mean_x2: Estimate,
    pub mean_p2: Estimate,
}

impl MomentEstimates {
    /// Point estimates as a `Moments` record.
    pub fn moments(&self) -> Moments {
        Moments {
            mean_x: self.mean_x.value,
            mean_p: self.mean_p.value,
            mean_x2: self.mean_x2.value,
            mean_p2: self.mean_p2.value,
        }
    }
}

/// Full simulation report.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct McReport {
    pub rng: &'static str,
    pub seed: u64,
    pub n_samples: u64,
    pub p_sift_hat: Estimate,
    pub e_bit_hat: Estimate,
    pub moments_plus: MomentEstimates,
    pub moments_minus: MomentEstimates,
    /// Fidelity bound from the estimated moments at `beta = sqrt(eta) alpha`.
    pub f0_hat: f64,
}

/// Raw accumulators for one (sign, quadrature) cell.
#[derive(Debug, Clone, Copy, Default)]
struct CellSums {
    n: u64,
    sum: f64,
    sum2: f64,
    sum4: f64,
}

impl CellSums {
    #[inline]
    fn push(&mut self, v: f64) {
        let v2 = v * v;
        self.n += 1;
        self.sum += v;
        self.sum2 += v2;
        self.sum4 += v2 * v2;
    }

    fn merge(&mut self, other: &CellSums) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum2 += other.sum2;
        self.sum4 += other.sum4;
    }

    /// Mean of the samples with its standard error.
    fn mean(&self) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = (self.sum2 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        Estimate {
            value: mean,
            std_err: fp::sqrt(var / n),
        }
    }

    /// Mean of the squared samples with its standard error.
    fn mean_square(&self) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum2 / n;
        let var = (self.sum4 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        Estimate {
            value: mean,
            std_err: fp::sqrt(var / n),
        }
    }
}

/// Partial result of one sample block; merged in block order.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct BlockSums {
    n_x: u64,
    kept: u64,
    errors: u64,
    x_plus: CellSums,
    x_minus: CellSums,
    p_plus: CellSums,
    p_minus: CellSums,
}

impl BlockSums {
    fn merge(&mut self, other: &BlockSums) {
        self.n_x += other.n_x;
        self.kept += other.kept;
        self.errors += other.errors;
        self.x_plus.merge(&other.x_plus);
        self.x_minus.merge(&other.x_minus);
        self.p_plus.merge(&other.p_plus);
        self.p_minus.merge(&other.p_minus);
    }
}

/// Number of blocks a run of `n_samples` splits into.
pub(crate) fn block_count(n_samples: u64) -> u64 {
    n_samples.div_ceil(BLOCK_SAMPLES)
}

/// Simulates one block: samples `[block * BLOCK_SAMPLES, ...)` clipped to
/// `n_samples`.
pub(crate) fn run_block(
    p: &ProtocolParams,
    ch: &ChannelParams,
    cfg: &McConfig,
    block: u64,
) -> BlockSums {
    let start = block * BLOCK_SAMPLES;
    let len = BLOCK_SAMPLES.min(cfg.n_samples - start);
    let mut rng = Xoshiro256PlusPlus::for_block(cfg.seed, block);
    let mut gauss = GaussianSource::new();
    let sigma = 0.5 * fp::sqrt(1.0 + ch.xi);
    let mu = fp::sqrt(ch.eta) * p.alpha;
    let mut sums = BlockSums::default();
    for _ in 0..len {
        let bits = rng.next_u64();
        let plus = bits & 1 == 0;
        let x_basis = bits & 2 == 0;
        let signed_mu = if plus { mu } else { -mu };
        let z = gauss.next(&mut rng);
        if x_basis {
            let x = signed_mu + sigma * z;
            sums.n_x += 1;
            if plus {
                sums.x_plus.push(x);
            } else {
                sums.x_minus.push(x);
            }
            if x.abs() >= p.x_th {
                sums.kept += 1;
                let bob_plus = x >= 0.0;
                if bob_plus != plus {
                    sums.errors += 1;
                }
            }
        } else {
            let pq = sigma * z; // p-quadrature mean is 0 for both signs
            if plus {
                sums.p_plus.push(pq);
            } else {
                sums.p_minus.push(pq);
            }
        }
    }
    sums
}

/// Assembles the report from per-block sums merged in block order.
pub(crate) fn report_from_blocks(
    p: &ProtocolParams,
    ch: &ChannelParams,
    cfg: &McConfig,
    blocks: &[BlockSums],
) -> McReport {
    let mut total = BlockSums::default();
    for b in blocks {
        total.merge(b);
    }
    let n_x = total.n_x as f64;
    let p_hat = total.kept as f64 / n_x;
    let p_sift_hat = Estimate {
        value: p_hat,
        std_err: fp::sqrt((p_hat * (1.0 - p_hat) / n_x).max(0.0)),
    };
    let e_bit_hat = if total.kept > 0 {
        let e = total.errors as f64 / total.kept as f64;
        Estimate {
            value: e,
            std_err: fp::sqrt((e * (1.0 - e) / total.kept as f64).max(0.0)),
        }
    } else {
        Estimate {
            value: f64::NAN,
            std_err: f64::NAN,
        }
    };
    let moments_plus = MomentEstimates {
        mean_x: total.x_plus.mean(),
        mean_p: total.p_plus.mean(),
        mean_x2: total.x_plus.mean_square(),
        mean_p2: total.p_plus.mean_square(),
    };
    let moments_minus = MomentEstimates {
        mean_x: total.x_minus.mean(),
        mean_p: total.p_minus.mean(),
        mean_x2: total.x_minus.mean_square(),
        mean_p2: total.p_minus.mean_square(),
    };
    let beta = fp::sqrt(ch.eta) * p.alpha;
    let f0_hat = f0_from_moments(&moments_plus.moments(), &moments_minus.moments(), beta, 0.0);
    McReport {
        rng: RNG_ALGORITHM,
        seed: cfg.seed,
        n_samples: cfg.n_samples,
        p_sift_hat,
        e_bit_hat,
        moments_plus,
        moments_minus,
        f0_hat,
    }
}

/// Samples `cfg.n_samples` homodyne outcomes.
///
/// Each sample draws the modulation sign uniformly and measures the x or p
/// quadrature with probability 1/2 each; x-quadrature outcomes feed the
/// sift/error counters under the postselection `|x| >= x_th`, and both
/// quadratures feed the per-sign moment estimators.
pub fn sample_homodyne(p: &ProtocolParams, ch: &ChannelParams, cfg: &McConfig) -> Result<McReport> {
    p.validate()?;
    ch.validate()?;
    cfg.validate()?;
    let blocks: Vec<BlockSums> = (0..block_count(cfg.n_samples))
        .map(|b| run_block(p, ch, cfg, b))
        .collect();
    Ok(report_from_blocks(p, ch, cfg, &blocks))
}

/// Parallel variant of [`sample_homodyne`]: blocks are sampled across the
/// worker pool and merged in block order, so the report is bit-identical
/// to the sequential sampler for any worker count.
#[cfg(feature = "parallel")]
pub fn par_sample_homodyne(
    p: &ProtocolParams,
    ch: &ChannelParams,
    cfg: &McConfig,
) -> Result<McReport> {
    use rayon::prelude::*;
    p.validate()?;
    ch.validate()?;
    cfg.validate()?;
    let blocks: Vec<BlockSums> = (0..block_count(cfg.n_samples))
        .into_par_iter()
        .map(|b| run_block(p, ch, cfg, b))
        .collect();
    Ok(report_from_blocks(p, ch, cfg, &blocks))
}

/// Fidelity bound from estimated moments at an arbitrary real `beta`.
pub fn empirical_f0(report: &McReport, beta: f64) -> f64 {
    f0_from_moments(
        &report.moments_plus.moments(),
        &report.moments_minus.moments(),
        beta,
        0.0,
    )
}

/// SplitMix64; used only to derive block seeds.
struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// xoshiro256++ with 256-bit state.
pub(crate) struct Xoshiro256PlusPlus {
    s: [u64; 4],
}

impl Xoshiro256PlusPlus {
    /// Stream for `(seed, block)`: the block index is folded into the seed
    /// by a Weyl step, then the state is expanded by SplitMix64 as the
    /// generator's authors recommend.
    fn for_block(seed: u64, block: u64) -> Self {
        let mut sm = SplitMix64 {
            state: seed ^ (block.wrapping_add(1)).wrapping_mul(0xA076_1D64_78BD_642F),
        };
        let s = [sm.next_u64(), sm.next_u64(), sm.next_u64(), sm.next_u64()];
        Xoshiro256PlusPlus { s }
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in (0, 1]; never 0, so logarithms are safe.
    #[inline]
    fn next_unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }
}

/// Box-Muller pair cache.
struct GaussianSource {
    spare: Option<f64>,
}

impl GaussianSource {
    fn new() -> Self {
        GaussianSource { spare: None }
    }

    #[inline]
    fn next(&mut self, rng: &mut Xoshiro256PlusPlus) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = rng.next_unit();
        let u2 = rng.next_unit();
        let radius = fp::sqrt(-2.0 * fp::ln(u1));
        let angle = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(radius * fp::sin(angle));
        radius * fp::cos(angle)
    }
}
