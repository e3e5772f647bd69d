//! Independent truncated-Fock-space verification.
//!
//! Builds the parity-filtered success operators, the phase-error operator,
//! and the fidelity/minus projectors as explicit matrices on the truncated
//! number basis, then checks by diagonalization that
//!
//! * the operator inequality behind the dual constant `B` holds
//!   ([`operator_inequality_check`]), and
//! * the moment-form fidelity bound holds as an operator inequality
//!   ([`theorem1_operator_check`]).
//!
//! Both checks compress exact operator inequalities to the truncated
//! space, and compression preserves positive semidefiniteness, so the
//! minimum eigenvalue may only dip below zero by quadrature and truncation
//! error. Truncated coherent vectors enter unnormalized for exactly that
//! reason: renormalizing would break the compression argument.
//!
//! Everything here is deliberately computed from quadrature and ladder
//! matrices rather than from the closed forms it cross-checks.

use alloc::vec::Vec;

use crate::fp;
use crate::keyrate::{b_constant, DualParams};
use crate::math::{
    gauss_legendre, hermite_psi_into, sym_eig_extreme, Extreme, SymMatrix, MAX_HERMITE_N,
};
use crate::{Error, Result};

/// Basis a [`FockOperator`] lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Number basis `|0..n_max>` of the optical mode alone.
    Mode,
    /// Qubit tensor mode: `{|0>, |1>} x |0..n_max>`, qubit-major indexing.
    QubitMode,
}

/// Photon-number parity selecting one of the success operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// An operator stored as an explicit symmetric matrix on a truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub n_max: usize,
    pub basis: Basis,
    pub matrix: SymMatrix,
}

impl FockOperator {
    /// Expectation value `<v|M|v>` of a basis-expanded vector.
    pub fn expectation(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.matrix.dim(), "vector/operator dimension mismatch");
        let n = v.len();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for (j, &vj) in v.iter().enumerate() {
                row += self.matrix.get(i, j) * vj;
            }
            acc += v[i] * row;
        }
        acc
    }

    pub fn trace(&self) -> f64 {
        (0..self.matrix.dim()).map(|i| self.matrix.get(i, i)).sum()
    }
}

/// Truncated coherent state `|beta>` in the number basis, with the
/// probability mass lost to truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentVec {
    pub amplitudes: Vec<f64>,
    pub truncation_weight: f64,
}

/// Fock expansion `<n|beta> = e^{-beta^2/2} beta^n / sqrt(n!)` for real
/// `beta`, computed by a log-domain recurrence so large amplitudes do not
/// overflow the intermediate factorials.
pub fn coherent_fock(beta: f64, n_max: usize) -> CoherentVec {
    let mut amplitudes = Vec::with_capacity(n_max + 1);
    if beta == 0.0 {
        amplitudes.push(1.0);
        amplitudes.resize(n_max + 1, 0.0);
        return CoherentVec {
            amplitudes,
            truncation_weight: 0.0,
        };
    }
    let ln_abs_beta = fp::ln(beta.abs());
    let mut ln_mag = -0.5 * beta * beta;
    let mut norm2 = 0.0;
    for n in 0..=n_max {
        if n > 0 {
            ln_mag += ln_abs_beta - 0.5 * fp::ln(n as f64);
        }
        let sign = if beta < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
        let amp = sign * fp::exp(ln_mag);
        norm2 += amp * amp;
        amplitudes.push(amp);
    }
    CoherentVec {
        amplitudes,
        truncation_weight: (1.0 - norm2).max(0.0),
    }
}

fn check_n_max(n_max: usize) -> Result<()> {
    if n_max > MAX_HERMITE_N {
        return Err(Error::Domain("fock truncation exceeds the wavefunction range"));
    }
    Ok(())
}

/// All tail products `2 * integral of psi_m psi_n over [x_th, inf)` for
/// `m, n <= n_max`, by composite Gauss-Legendre panels that share one
/// wavefunction-vector evaluation per node. Panels are sized to the
/// oscillation scale of the highest wavefunction and the domain ends well
/// past its classical turning point, where the Gaussian envelope is dead.
///
/// This is the vectorized form of `2 * integrate_tail(psi_m psi_n, x_th)`
/// entry by entry (the tests pin the two routes against each other); the
/// shared evaluation is what makes the large truncations tractable.
fn tail_product_matrix(x_th: f64, n_max: usize) -> SymMatrix {
    let dim = n_max + 1;
    let turning_point = fp::sqrt((2 * n_max + 1) as f64) / core::f64::consts::SQRT_2;
    let x_end = (turning_point + 10.0).max(x_th + 4.0);
    let panel = (3.0 / fp::sqrt(dim as f64)).clamp(0.05, 0.5);
    let n_panels = ((x_end - x_th) / panel) as usize + 1;
    let (nodes, weights) = gauss_legendre(24);

    let mut acc = alloc::vec![0.0; dim * dim];
    let mut psi = alloc::vec![0.0; dim];
    for k in 0..n_panels {
        let lo = x_th + k as f64 * panel;
        let hi = (lo + panel).min(x_end);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (&t, &w) in nodes.iter().zip(&weights) {
            let x = mid + half * t;
            hermite_psi_into(x, &mut psi);
            let scale = 2.0 * half * w;
            for m in 0..dim {
                let pm = scale * psi[m];
                if pm == 0.0 {
                    continue;
                }
                let row = &mut acc[m * dim..(m + 1) * dim];
                for (slot, &pn) in row[m..].iter_mut().zip(&psi[m..]) {
                    *slot += pm * pn;
                }
            }
        }
    }
    SymMatrix::from_upper_fn(dim, |m, n| acc[m * dim + n])
}

/// Success operator for one parity sector:
/// `M(m, n) = 2 * integral of psi_m psi_n over [x_th, inf)` when `m` and
/// `n` both carry the requested parity, exactly zero otherwise (the parity
/// projector is applied structurally).
pub fn m_suc_matrix(parity: Parity, x_th: f64, n_max: usize) -> Result<FockOperator> {
    if !x_th.is_finite() || x_th < 0.0 {
        return Err(Error::Domain("postselection threshold x_th must be >= 0"));
    }
    check_n_max(n_max)?;
    let products = tail_product_matrix(x_th, n_max);
    Ok(FockOperator {
        n_max,
        basis: Basis::Mode,
        matrix: parity_filter(&products, parity, n_max),
    })
}

fn parity_filter(products: &SymMatrix, parity: Parity, n_max: usize) -> SymMatrix {
    let want = match parity {
        Parity::Even => 0,
        Parity::Odd => 1,
    };
    SymMatrix::from_upper_fn(n_max + 1, |m, n| {
        if m % 2 == want && n % 2 == want {
            products.get(m, n)
        } else {
            0.0
        }
    })
}

/// Phase-error operator on qubit tensor mode:
/// `|+><+| x M_od + |-><-| x M_ev`, which in the Z basis has blocks
/// `(M_od + M_ev)/2` on the diagonal and `(M_od - M_ev)/2` off it.
pub fn m_ph_suc(x_th: f64, n_max: usize) -> Result<FockOperator> {
    if !x_th.is_finite() || x_th < 0.0 {
        return Err(Error::Domain("postselection threshold x_th must be >= 0"));
    }
    check_n_max(n_max)?;
    let products = tail_product_matrix(x_th, n_max);
    let even = parity_filter(&products, Parity::Even, n_max);
    let odd = parity_filter(&products, Parity::Odd, n_max);
    let dim = n_max + 1;
    let matrix = SymMatrix::from_upper_fn(2 * dim, |i, j| {
        let (qi, ki) = (i / dim, i % dim);
        let (qj, kj) = (j / dim, j % dim);
        let sum = 0.5 * (odd.get(ki, kj) + even.get(ki, kj));
        let diff = 0.5 * (odd.get(ki, kj) - even.get(ki, kj));
        if qi == qj {
            sum
        } else {
            diff
        }
    });
    Ok(FockOperator {
        n_max,
        basis: Basis::QubitMode,
        matrix,
    })
}

/// Minimum-eigenvalue report of a positivity check.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MinEigReport {
    pub lambda_min: f64,
    pub n_max: usize,
}

/// Checks the operator inequality behind the dual constant: builds
/// `W = B 1 - kappa Pi_fid + gamma Pi_minus - M_ph` on the truncated
/// qubit-mode space and returns its minimum eigenvalue, which must not
/// fall below the quadrature/truncation tolerance.
///
/// Only real `beta` is supported: a complex amplitude would make `W`
/// complex Hermitian, outside this real eigensolver.
pub fn operator_inequality_check(
    dual: &DualParams,
    x_th: f64,
    n_max: usize,
) -> Result<MinEigReport> {
    dual.validate()?;
    if dual.beta_i != 0.0 {
        return Err(Error::Domain(
            "operator check supports real beta only (complex beta is deferred)",
        ));
    }
    check_n_max(n_max)?;
    if !x_th.is_finite() || x_th < 0.0 {
        return Err(Error::Domain("postselection threshold x_th must be >= 0"));
    }
    let b = b_constant(dual, x_th)?;
    let products = tail_product_matrix(x_th, n_max);
    let even = parity_filter(&products, Parity::Even, n_max);
    let odd = parity_filter(&products, Parity::Odd, n_max);
    let plus = coherent_fock(dual.beta_r, n_max).amplitudes;
    let minus = coherent_fock(-dual.beta_r, n_max).amplitudes;
    let dim = n_max + 1;
    let w = SymMatrix::from_upper_fn(2 * dim, |i, j| {
        let (qi, ki) = (i / dim, i % dim);
        let (qj, kj) = (j / dim, j % dim);
        let m_sum = 0.5 * (odd.get(ki, kj) + even.get(ki, kj));
        let m_diff = 0.5 * (odd.get(ki, kj) - even.get(ki, kj));
        let mut v = 0.0;
        if qi == qj {
            if ki == kj {
                v += b;
            }
            // Pi_fid: |0><0| x |beta><beta| + |1><1| x |-beta><-beta|.
            let coherent = if qi == 0 { &plus } else { &minus };
            v -= dual.kappa * coherent[ki] * coherent[kj];
            // Pi_minus diagonal block: I/2.
            if ki == kj {
                v += 0.5 * dual.gamma;
            }
            v -= m_sum;
        } else {
            // Pi_minus off-diagonal block: -I/2.
            if ki == kj {
                v -= 0.5 * dual.gamma;
            }
            v -= m_diff;
        }
        v
    });
    Ok(MinEigReport {
        lambda_min: sym_eig_extreme(&w, Extreme::Min)?,
        n_max,
    })
}

/// Checks the moment-form fidelity bound as an operator inequality:
/// `|beta><beta| - (3/2) 1 + (x - beta)^2 + p^2 >= 0`, with the quadrature
/// squares built by multiplying truncated ladder matrices. Squaring a
/// truncated operator corrupts the two highest rows (they lose their
/// coupling past the cutoff), so the report restricts to the leading
/// `n_max - 1` dimensional block, where the compression argument is exact.
pub fn theorem1_operator_check(beta: f64, n_max: usize) -> Result<MinEigReport> {
    if !beta.is_finite() {
        return Err(Error::Domain("coherent amplitude must be finite"));
    }
    if n_max < 2 {
        return Err(Error::Domain("theorem check needs n_max >= 2"));
    }
    check_n_max(n_max)?;
    let dim = n_max + 1;

    // x - beta on the truncated basis: <n|x|n+1> = sqrt(n+1)/2.
    let mut x_shift = alloc::vec![0.0; dim * dim];
    for n in 0..dim {
        x_shift[n * dim + n] = -beta;
        if n + 1 < dim {
            let v = 0.5 * fp::sqrt((n + 1) as f64);
            x_shift[n * dim + (n + 1)] = v;
            x_shift[(n + 1) * dim + n] = v;
        }
    }
    // k = (a - a^dag)/2, so p^2 = -k k = k^T k.
    let mut k = alloc::vec![0.0; dim * dim];
    for n in 0..dim - 1 {
        let v = 0.5 * fp::sqrt((n + 1) as f64);
        k[n * dim + (n + 1)] = v;
        k[(n + 1) * dim + n] = -v;
    }
    let x2 = dense_product(&x_shift, &x_shift, dim);
    let p2 = gram_product(&k, dim);

    let coherent = coherent_fock(beta, n_max).amplitudes;
    let d = SymMatrix::from_upper_fn(dim, |i, j| {
        let mut v = x2[i * dim + j] + p2[i * dim + j] + coherent[i] * coherent[j];
        if i == j {
            v -= 1.5;
        }
        v
    });
    let inner = d.leading_block(dim - 2);
    Ok(MinEigReport {
        lambda_min: sym_eig_extreme(&inner, Extreme::Min)?,
        n_max,
    })
}

/// Row-major dense product `a * b`.
fn dense_product(a: &[f64], b: &[f64], dim: usize) -> Vec<f64> {
    let mut out = alloc::vec![0.0; dim * dim];
    for i in 0..dim {
        for kk in 0..dim {
            let aik = a[i * dim + kk];
            if aik == 0.0 {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] += aik * b[kk * dim + j];
            }
        }
    }
    out
}

/// `a^T a` for a row-major square matrix.
fn gram_product(a: &[f64], dim: usize) -> Vec<f64> {
    let mut out = alloc::vec![0.0; dim * dim];
    for kk in 0..dim {
        for i in 0..dim {
            let aki = a[kk * dim + i];
            if aki == 0.0 {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] += aki * a[kk * dim + j];
            }
        }
    }
    out
}
