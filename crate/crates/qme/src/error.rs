//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by library operations.
#[derive(Debug, Error)]
pub enum QmeError {
    /// A structural constraint on generator coefficients is violated
    /// (trace preservation or Hermiticity of the coefficient blocks).
    #[error("coefficient constraint violated ({kind}): residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    ConstraintViolation {
        kind: &'static str,
        residual: f64,
        tol: f64,
    },
    /// The linear coefficient cannot be produced by any real displacement.
    #[error("no real displacement reproduces the linear coefficient: residual {residual:.3e} exceeds {tol:.3e}")]
    NoRealShift { residual: f64, tol: f64 },
    /// Input outside the supported closed-form domain.
    #[error("unsupported input for closed form: {0}")]
    Unsupported(String),
    /// Matrix expected to be unitary is not.
    #[error("matrix is not unitary: deviation {0:.3e}")]
    NotUnitary(f64),
    /// Gauge rotation does not commute with the sign matrix.
    #[error("gauge rotation does not commute with the sign matrix: deviation {0:.3e}")]
    NotGCommuting(f64),
    /// Matrix expected positive definite is not.
    #[error("matrix is not positive definite (min eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),
    /// Drift matrix is not asymptotically stable.
    #[error("drift matrix is not Hurwitz (max real part of spectrum {0:.3e})")]
    NotHurwitz(f64),
    /// Detailed-balance analysis requires one common temperature.
    #[error("baths do not share a single temperature (spread {0:.3e})")]
    NonUniformTemperature(f64),
    /// The Brownian-motion generator cannot be embedded at this Hessian.
    #[error("generator not embeddable: off-diagonal Hessian entry {h12:.3e} must vanish")]
    Unembeddable { h12: f64 },
    /// Requested truncation exceeds the dense-oracle memory budget.
    #[error("truncation exceeds the dense oracle budget: {0}")]
    BudgetExceeded(String),
    /// Evolved state leaked into the top Fock levels beyond tolerance.
    #[error("truncation breach: top-level occupation {occupation:.3e} exceeds {tol:.3e} at t = {time}")]
    TruncationBreach {
        occupation: f64,
        tol: f64,
        time: f64,
    },
    /// Requested integrator step is below representable spacing.
    #[error("integrator step underflow: step {0:.3e}")]
    StepUnderflow(f64),
    /// Exponent magnitude would overflow the floating-point range.
    #[error("matrix exponential overflow guard: exponent norm {0:.3e}")]
    Overflow(f64),
    /// Invalid model description.
    #[error("invalid system description: {0}")]
    InvalidSpec(String),
}
