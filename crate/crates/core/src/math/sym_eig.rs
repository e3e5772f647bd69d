//! Small dense symmetric matrices and their extreme eigenvalues.
//!
//! All matrices in this crate are small (2x2 up to a few hundred rows) and
//! dense, so the solver favors robustness over asymptotic speed: a closed
//! form for 2x2 and cyclic Jacobi rotations otherwise.

use alloc::vec;
use alloc::vec::Vec;

use crate::fp;
use crate::{Error, Result};

/// Which extreme eigenvalue to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Max,
    Min,
}

/// Dense real symmetric matrix. Writes go through [`SymMatrix::set`], which
/// mirrors the entry, so symmetry holds exactly as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Zero matrix of dimension `n >= 1`. Panics on `n = 0`.
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "SymMatrix dimension must be at least 1");
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Builds from the upper triangle: `f(i, j)` is called for `i <= j`.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets entry `(i, j)` and its mirror `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius(&self) -> f64 {
        fp::sqrt(self.data.iter().map(|v| v * v).sum::<f64>())
    }

    fn off_diagonal_frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    let v = self.get(i, j);
                    s += v * v;
                }
            }
        }
        fp::sqrt(s)
    }

    /// Leading principal submatrix of dimension `k`.
    pub fn leading_block(&self, k: usize) -> SymMatrix {
        assert!(k >= 1 && k <= self.n);
        SymMatrix::from_upper_fn(k, |i, j| self.get(i, j))
    }
}

/// Extreme eigenvalue of a symmetric matrix.
///
/// For `n = 2` the trace/discriminant closed form is used; larger matrices
/// are diagonalized by cyclic Jacobi rotations until the off-diagonal
/// Frobenius norm drops below `1e-12` of the matrix Frobenius norm, with a
/// budget of 100 sweeps.
pub fn sym_eig_extreme(m: &SymMatrix, which: Extreme) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::Domain("sym_eig_extreme: matrix entries must be finite"));
    }
    match m.dim() {
        1 => Ok(m.get(0, 0)),
        2 => {
            let (lo, hi) = eig2x2(m.get(0, 0), m.get(0, 1), m.get(1, 1));
            Ok(match which {
                Extreme::Max => hi,
                Extreme::Min => lo,
            })
        }
        _ => {
            let diag = jacobi_diagonal(m)?;
            let mut out = diag[0];
            for &v in &diag[1..] {
                out = match which {
                    Extreme::Max => out.max(v),
                    Extreme::Min => out.min(v),
                };
            }
            Ok(out)
        }
    }
}

/// Eigenvalues of `[[a, b], [b, d]]` as `(min, max)`.
pub(crate) fn eig2x2(a: f64, b: f64, d: f64) -> (f64, f64) {
    let mid = 0.5 * (a + d);
    let half_gap = 0.5 * (a - d);
    let radius = fp::sqrt(half_gap * half_gap + b * b);
    (mid - radius, mid + radius)
}

/// Cyclic Jacobi sweeps; returns the converged diagonal (unsorted).
fn jacobi_diagonal(m: &SymMatrix) -> Result<Vec<f64>> {
    const MAX_SWEEPS: usize = 100;
    let n = m.dim();
    let norm = m.frobenius();
    if norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let tol = 1e-12 * norm;
    let mut a = m.clone();
    for _ in 0..MAX_SWEEPS {
        if a.off_diagonal_frobenius() <= tol {
            return Ok((0..n).map(|i| a.get(i, i)).collect());
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta.abs() > 1e150 {
                    // Avoid overflow in theta^2; the rotation is tiny.
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + fp::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / fp::sqrt(1.0 + t * t);
                let s = t * c;
                let tau = s / (1.0 + c);

                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                for j in 0..n {
                    if j == p || j == q {
                        continue;
                    }
                    let ajp = a.get(j, p);
                    let ajq = a.get(j, q);
                    a.set(j, p, ajp - s * (ajq + tau * ajp));
                    a.set(j, q, ajq + s * (ajp - tau * ajq));
                }
            }
        }
    }
    let residual = a.off_diagonal_frobenius();
    if residual <= tol {
        Ok((0..n).map(|i| a.get(i, i)).collect())
    } else {
        Err(Error::NoConvergence { residual })
    }
}
