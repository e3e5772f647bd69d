use core::fmt;

/// Errors reported by the numeric kernels and the bound pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented domain restriction.
    Domain(&'static str),
    /// The eigensolver did not reach its off-diagonal tolerance within the
    /// sweep budget; carries the residual off-diagonal Frobenius norm.
    NoConvergence { residual: f64 },
    /// Adaptive quadrature could not meet its accuracy target; carries the
    /// best estimate it reached.
    QuadratureAccuracy { estimate: f64 },
    /// A rate quantity is undefined because the sifting probability is zero.
    UndefinedRate,
    /// A grid or schedule is empty or malformed.
    Config(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::NoConvergence { residual } => {
                write!(f, "eigensolver did not converge (residual {residual:e})")
            }
            Error::QuadratureAccuracy { estimate } => {
                write!(f, "quadrature accuracy not reached (estimate {estimate:e})")
            }
            Error::UndefinedRate => write!(f, "sifting probability is zero; rate undefined"),
            Error::Config(what) => write!(f, "configuration error: {what}"),
        }
    }
}

impl core::error::Error for Error {}
