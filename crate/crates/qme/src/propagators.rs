//! Symplectic propagators: the real flow `S_t = exp(J H t)` and the
//! Wick-rotated complex symplectic matrix `S_beta = exp(-+ i hbar beta J H / 2)`,
//! which implements the operator conjugation
//! `x_j -> exp(beta H / 2) x_j exp(-beta H / 2)` for quadratic Hamiltonians,
//! with closed-form specializations for one degree of freedom and for the
//! two-oscillator network.

use serde::{Deserialize, Serialize};

use crate::error::QmeError;
use crate::linalg::{complexify, expm, expm_real, frob, matmul, CMat, RMat, C64, IM};
use crate::model::{symplectic_form, SystemSpec};

/// Sign convention for the Wick-rotated exponent. The default `MinusI`
/// builds `exp(-i hbar beta J H / 2)`; `PlusI` builds the complex
/// conjugate `exp(+i hbar beta J H / 2)`. The `MinusI` choice is the one
/// that reproduces the direct exponential-conjugation dissipator and the
/// physical detailed-balance asymmetry (larger weight on the
/// annihilation-like Lindblad vector); the acceptance suite pins it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WickConvention {
    /// Exponent `-i hbar beta J H / 2` (default).
    #[default]
    MinusI,
    /// Exponent `+i hbar beta J H / 2` (complex conjugate convention).
    PlusI,
}

impl std::fmt::Display for WickConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WickConvention::MinusI => write!(f, "minus-i"),
            WickConvention::PlusI => write!(f, "plus-i"),
        }
    }
}

impl std::str::FromStr for WickConvention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minus-i" => Ok(WickConvention::MinusI),
            "plus-i" => Ok(WickConvention::PlusI),
            other => Err(format!(
                "unknown convention '{other}' (expected 'minus-i' or 'plus-i')"
            )),
        }
    }
}

/// A Wick-rotated complex symplectic propagator together with the
/// convention that produced it.
#[derive(Debug, Clone)]
pub struct WickPropagator {
    /// The complex symplectic matrix `S_beta`.
    pub matrix: CMat,
    /// Inverse temperature used in the exponent.
    pub beta: f64,
    /// Exponent sign convention.
    pub sign: WickConvention,
}

impl WickPropagator {
    /// Residual of the complex symplectic identity `S^T J S = J`
    /// (relative to `|J| = sqrt(2n)`).
    pub fn symplectic_residual(&self) -> f64 {
        let n = self.matrix.nrows() / 2;
        let j = complexify(&symplectic_form(n));
        let lhs = matmul(&matmul(&self.matrix.transpose(), &j), &self.matrix);
        frob(&(&lhs - &j)) / frob(&j)
    }
}

/// Norm threshold beyond which `exp` would overflow the double range.
const EXP_OVERFLOW_GUARD: f64 = 700.0;

/// The real symplectic flow `exp(J H t)` of the quadratic Hamiltonian.
pub fn real_propagator(h: &RMat, t: f64) -> RMat {
    let n = h.nrows() / 2;
    let j = symplectic_form(n);
    expm_real(&((&j * h) * t))
}

/// The Wick-rotated propagator `exp(-+ i hbar beta J H / 2)`.
///
/// Errors with [`QmeError::Overflow`] when the exponent norm exceeds the
/// double-precision exponent range.
pub fn wick_propagator(
    h: &RMat,
    beta: f64,
    hbar: f64,
    sign: WickConvention,
) -> Result<WickPropagator, QmeError> {
    let n = h.nrows() / 2;
    let j = symplectic_form(n);
    let jh = &j * h;
    let norm = jh.norm() * hbar * beta.abs() * 0.5;
    if norm > EXP_OVERFLOW_GUARD {
        return Err(QmeError::Overflow(norm));
    }
    let unit = match sign {
        WickConvention::MinusI => -IM,
        WickConvention::PlusI => IM,
    };
    let exponent = complexify(&jh) * (unit * C64::new(hbar * beta * 0.5, 0.0));
    Ok(WickPropagator {
        matrix: expm(&exponent),
        beta,
        sign,
    })
}

/// `sinh(x)/x` with a series guard at tiny arguments.
fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

/// `sin(x)/x` with a series guard at tiny arguments.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Closed-form `S_beta` for the supported shapes: any single degree of
/// freedom, or the two-oscillator network Hessian. Uses the `MinusI`
/// convention (conjugate for `PlusI`). Everything else is `Unsupported`.
pub fn closed_form_sbeta(spec: &SystemSpec, sign: WickConvention) -> Result<CMat, QmeError> {
    spec.validate()?;
    let beta0 = spec.uniform_beta()?;
    let s = closed_form_sbeta_at(spec, beta0, sign)?;
    Ok(s)
}

/// Closed-form `S_beta` at an explicit inverse temperature (the per-row
/// construction needs one propagator per distinct bath temperature).
pub fn closed_form_sbeta_at(
    spec: &SystemSpec,
    beta: f64,
    sign: WickConvention,
) -> Result<CMat, QmeError> {
    let h = &spec.hessian;
    let base = if spec.n == 1 {
        closed_form_n1(h, beta, spec.hbar)
    } else if let Some((omega, kappa)) = detect_network(h) {
        closed_form_network(omega, kappa, beta, spec.hbar)
    } else {
        Err(QmeError::Unsupported(
            "closed form exists only for n = 1 or the two-oscillator network".into(),
        ))
    }?;
    Ok(match sign {
        WickConvention::MinusI => base,
        WickConvention::PlusI => base.map(|z| z.conj()),
    })
}

fn closed_form_n1(h: &RMat, beta: f64, hbar: f64) -> Result<CMat, QmeError> {
    let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
    let scale2 = h.norm_squared();
    let half = 0.5 * hbar * beta;
    let j = symplectic_form(1);
    let jh = complexify(&(&j * h));
    let ident = CMat::identity(2, 2);
    let (c, s_over) = if det.abs() <= 1e-14 * scale2.max(1.0) {
        // parabolic: (J H)^2 = -det(H) I = 0 truncates the series exactly
        (1.0, 1.0)
    } else if det > 0.0 {
        let theta = half * det.sqrt();
        if theta > EXP_OVERFLOW_GUARD {
            return Err(QmeError::Overflow(theta));
        }
        (theta.cosh(), sinhc(theta))
    } else {
        let theta = half * (-det).sqrt();
        (theta.cos(), sinc(theta))
    };
    Ok(&ident * C64::new(c, 0.0) + &jh * (-IM * C64::new(half * s_over, 0.0)))
}

/// Recognize the network Hessian shape; returns `(omega, kappa)`.
fn detect_network(h: &RMat) -> Option<(f64, f64)> {
    if h.nrows() != 4 {
        return None;
    }
    let tol = 1e-12 * h.norm().max(1.0);
    let omega = h[(2, 2)];
    let kappa = -h[(0, 1)];
    let expect = crate::model::network_hessian(omega, kappa);
    if (h - &expect).norm() <= tol {
        Some((omega, kappa))
    } else {
        None
    }
}

fn closed_form_network(omega: f64, kappa: f64, beta: f64, hbar: f64) -> Result<CMat, QmeError> {
    if omega <= 0.0 || omega + 2.0 * kappa <= 0.0 {
        return Err(QmeError::Unsupported(
            "network closed form requires omega > 0 and omega + 2 kappa > 0".into(),
        ));
    }
    // Normal modes: symmetric combination at frequency omega, antisymmetric
    // at vartheta = sqrt(omega (omega + 2 kappa)); both with mass 1/omega.
    let vartheta = (omega * (omega + 2.0 * kappa)).sqrt();
    let tp = 0.5 * hbar * beta * omega;
    let tm = 0.5 * hbar * beta * vartheta;
    if tp > EXP_OVERFLOW_GUARD || tm > EXP_OVERFLOW_GUARD {
        return Err(QmeError::Overflow(tp.max(tm)));
    }
    let (cp, cm) = (tp.cosh(), tm.cosh());
    let (sp, sm) = (tp.sinh(), tm.sinh());
    let qq_d = 0.5 * (cp + cm);
    let qq_o = 0.5 * (cp - cm);
    // rows q, columns p: -(i/2) [ sinh Tp +- (omega/vartheta) sinh Tm ]
    let qp_d = 0.5 * (sp + (omega / vartheta) * sm);
    let qp_o = 0.5 * (sp - (omega / vartheta) * sm);
    // rows p, columns q: +(i/2) [ sinh Tp +- (vartheta/omega) sinh Tm ]
    let pq_d = 0.5 * (sp + (vartheta / omega) * sm);
    let pq_o = 0.5 * (sp - (vartheta / omega) * sm);

    let mut s = CMat::zeros(4, 4);
    for (i, j, re, im) in [
        (0usize, 0usize, qq_d, 0.0),
        (1, 1, qq_d, 0.0),
        (0, 1, qq_o, 0.0),
        (1, 0, qq_o, 0.0),
        (2, 2, qq_d, 0.0),
        (3, 3, qq_d, 0.0),
        (2, 3, qq_o, 0.0),
        (3, 2, qq_o, 0.0),
        (0, 2, 0.0, -qp_d),
        (1, 3, 0.0, -qp_d),
        (0, 3, 0.0, -qp_o),
        (1, 2, 0.0, -qp_o),
        (2, 0, 0.0, pq_d),
        (3, 1, 0.0, pq_d),
        (2, 1, 0.0, pq_o),
        (3, 0, 0.0, pq_o),
    ] {
        s[(i, j)] = C64::new(re, im);
    }
    Ok(s)
}
