//! Closed-form analysis for one degree of freedom: the
//! elliptic/hyperbolic/parabolic trichotomy of `det H`, the
//! all-temperature positivity condition, the damped-optics tuning of the
//! harmonic oscillator, the Caldeira-Leggett generator and its embedding,
//! and the positivity obstruction for position-only (Kramers-type)
//! friction. Every formula here is cross-checked against the numeric
//! pipeline (`propagators` + `cptp`) by the test suites.

use serde::{Deserialize, Serialize};

use crate::error::QmeError;
use crate::linalg::{CMat, RMat, C64};

/// Sign class of `det H` for one degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum N1Case {
    /// `det H > 0`: bound motion, hyperbolic functions of `Theta`.
    Elliptic,
    /// `det H < 0`: inverted potential, trigonometric continuation.
    Hyperbolic,
    /// `det H = 0`: free-particle-like, the exponential series truncates.
    Parabolic,
}

/// Closed-form summary of the positivity structure at one temperature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct N1Report {
    /// `Theta = (hbar beta / 2) sqrt(|det H|)` (real in every class).
    pub theta: f64,
    /// Sign class of `det H`.
    pub case: N1Case,
    /// `det(C H) = 0`: the condition ratio is undefined; the eigenvalue
    /// verdict remains authoritative.
    pub degenerate: bool,
    /// `Tr Xi_H = 2 cosh(Theta) (gamma_q + gamma_p) / (hbar beta)`
    /// (cos in the hyperbolic class).
    pub trace_xih: f64,
    /// `det Xi_H = 4 cosh^2(Theta) det C / (hbar beta)^2
    ///  - [sinh(Theta)/(2 Theta) Tr(C H)]^2` (with the obvious
    /// continuations in the other classes).
    pub det_xih: f64,
    /// `(Tr C H)^2 / (4 det(C H))`; `None` when degenerate.
    pub condition_lhs: Option<f64>,
    /// Whether `Xi_H` stays positive semidefinite for every `beta > 0`.
    pub cptp_all_beta: bool,
    /// Larger eigenvalue of `Xi_H` at this temperature.
    pub psi_plus: f64,
    /// Smaller eigenvalue of `Xi_H` at this temperature.
    pub psi_minus: f64,
}

/// Caldeira-Leggett generator data: the high-temperature Brownian-motion
/// coefficient matrices and their closed-form spectrum.
#[derive(Debug, Clone)]
pub struct ClReport {
    /// `Xi = [[zeta/(hbar beta), -i gamma_o], [0, 0]]`.
    pub xi: CMat,
    /// `Xi_H = (2 zeta / (hbar beta)) Diag(1, 0) - i gamma_o J`.
    pub xi_h: CMat,
    /// `Xi_A = Xi - Xi^dagger`.
    pub xi_a: CMat,
    /// `zeta/(hbar beta) + sqrt(zeta^2/(hbar beta)^2 + gamma_o^2)`.
    pub psi_plus: f64,
    /// `zeta/(hbar beta) - sqrt(...)`: strictly negative when
    /// `gamma_o != 0`, so the generator is never GKSL then.
    pub psi_minus: f64,
}

/// Parameters that embed the Caldeira-Leggett generator into the
/// momentum-damped quadratic family at a given Hessian and temperature.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClEmbedding {
    /// Momentum damping rate `gamma_p = zeta sech(Theta)` (sec in the
    /// hyperbolic class).
    pub gamma_p: f64,
    /// Position damping rate (always zero in this family).
    pub gamma_q: f64,
    /// The friction-plus-shift coefficient implied by the embedding:
    /// `gamma_o = zeta H_22 tanh(Theta) / (2 Theta)`.
    pub gamma_o_implied: f64,
    /// `Theta` evaluated at the supplied Hessian and temperature.
    pub theta: f64,
}

const DEGENERACY_TOL: f64 = 1e-14;

fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn classify(h: &RMat) -> (N1Case, f64) {
    let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
    let scale = h.norm_squared().max(1e-300);
    if det > DEGENERACY_TOL * scale {
        (N1Case::Elliptic, det)
    } else if det < -DEGENERACY_TOL * scale {
        (N1Case::Hyperbolic, det)
    } else {
        (N1Case::Parabolic, 0.0)
    }
}

/// Closed-form positivity report for one degree of freedom with
/// `C = Diag(gamma_q, gamma_p)`.
pub fn n1_analysis(
    gamma_q: f64,
    gamma_p: f64,
    h: &RMat,
    beta: f64,
    hbar: f64,
) -> Result<N1Report, QmeError> {
    if h.nrows() != 2 || h.ncols() != 2 {
        return Err(QmeError::InvalidSpec("n1_analysis needs a 2 x 2 Hessian".into()));
    }
    if (h[(0, 1)] - h[(1, 0)]).abs() > 1e-12 * h.norm().max(1.0) {
        return Err(QmeError::InvalidSpec("Hessian must be symmetric".into()));
    }
    if !(beta > 0.0) || !(hbar > 0.0) {
        return Err(QmeError::InvalidSpec("beta and hbar must be positive".into()));
    }
    if gamma_q < 0.0 || gamma_p < 0.0 {
        return Err(QmeError::InvalidSpec("damping rates must be nonnegative".into()));
    }
    let (case, det_h) = classify(h);
    let theta = 0.5 * hbar * beta * det_h.abs().sqrt();
    let det_c = gamma_q * gamma_p;
    let trace_ch = gamma_q * h[(0, 0)] + gamma_p * h[(1, 1)];
    let couple_scale = (gamma_q.abs() + gamma_p.abs()) * h.norm();
    let trace_ch_zero = trace_ch.abs() <= 1e-12 * couple_scale.max(1e-300);

    // cosh Theta and sinh(Theta)/(2 Theta), continued per class
    let (ch, sh_over) = match case {
        N1Case::Elliptic => (theta.cosh(), 0.5 * sinhc(theta)),
        N1Case::Hyperbolic => (theta.cos(), 0.5 * sinc(theta)),
        N1Case::Parabolic => (1.0, 0.5),
    };
    let hb = hbar * beta;
    let trace_xih = 2.0 * ch * (gamma_q + gamma_p) / hb;
    let det_xih = 4.0 * ch * ch * det_c / (hb * hb) - (sh_over * trace_ch).powi(2);
    let disc = (0.25 * trace_xih * trace_xih - det_xih).max(0.0).sqrt();
    let psi_plus = 0.5 * trace_xih + disc;
    let psi_minus = 0.5 * trace_xih - disc;

    let det_ch = det_c * det_h;
    let degenerate = (gamma_q == 0.0 && gamma_p == 0.0)
        || det_ch.abs() <= DEGENERACY_TOL * (det_c.abs().max(1e-300) * h.norm_squared().max(1e-300));
    let condition_lhs = if degenerate {
        None
    } else {
        Some(0.25 * trace_ch * trace_ch / det_ch)
    };

    let cptp_all_beta = match case {
        N1Case::Elliptic => match condition_lhs {
            Some(lhs) => lhs <= 1.0,
            // det C = 0 in the elliptic class: det Xi_H < 0 for every
            // beta > 0 unless the cross term vanishes identically
            None => trace_ch_zero,
        },
        // the first term decays as 1/beta^2 while the cross term
        // saturates, so positivity for all beta needs Tr(C H) = 0
        N1Case::Parabolic => trace_ch_zero,
        // cos Theta sweeps negative as beta grows: the trace goes
        // negative periodically
        N1Case::Hyperbolic => false,
    };

    Ok(N1Report {
        theta,
        case,
        degenerate,
        trace_xih,
        det_xih,
        condition_lhs,
        cptp_all_beta,
        psi_plus,
        psi_minus,
    })
}

/// Whether `Xi_H` is positive semidefinite at one fixed temperature,
/// straight from the closed-form trace and determinant.
pub fn n1_cptp_here(report: &N1Report) -> bool {
    report.trace_xih >= 0.0 && report.det_xih >= 0.0
}

/// The damping-rate ratio `gamma_p / gamma_q = (m omega)^2` that makes
/// the harmonic oscillator's generator GKSL at every temperature.
pub fn harmonic_tuning(m: f64, omega: f64) -> Result<f64, QmeError> {
    if !(m > 0.0) || !(omega > 0.0) {
        return Err(QmeError::InvalidSpec("m and omega must be positive".into()));
    }
    Ok((m * omega).powi(2))
}

/// Temperature-dependent damping rates that reduce the tuned harmonic
/// generator to the standard damped-optics form, and the thermal
/// occupation `nbar`. Returns `(gamma_p, gamma_q, nbar)`.
pub fn optical_parameters(
    m: f64,
    omega: f64,
    beta: f64,
    hbar: f64,
    gamma_tilde: f64,
) -> Result<(f64, f64, f64), QmeError> {
    if !(m > 0.0) || !(omega > 0.0) || !(beta > 0.0) || !(hbar > 0.0) || !(gamma_tilde > 0.0) {
        return Err(QmeError::InvalidSpec(
            "optical parameters need all-positive inputs".into(),
        ));
    }
    let arg = 0.5 * beta * hbar * omega;
    let gamma_p = m * beta * hbar * omega * gamma_tilde / (2.0 * arg.sinh());
    let gamma_q = gamma_p / (m * omega).powi(2);
    let nbar = 1.0 / ((hbar * beta * omega).exp() - 1.0);
    Ok((gamma_p, gamma_q, nbar))
}

/// Emission/absorption rate of the tuned harmonic generator written in
/// the standard two-channel optics form: the total dissipator is
/// `Gamma (nbar + 1) D[a] + Gamma nbar D[a^dagger]` with
/// `Gamma = 2 gamma_tilde`.
pub fn optics_rate(gamma_tilde: f64) -> f64 {
    2.0 * gamma_tilde
}

/// The high-temperature Brownian-motion (Caldeira-Leggett) generator:
/// coefficient matrices and closed-form spectrum. `gamma_o` is the
/// friction coefficient of the `[q, {p, rho}]` term; `zeta` the
/// position-diffusion strength.
pub fn caldeira_leggett(
    zeta: f64,
    gamma_o: f64,
    beta: f64,
    hbar: f64,
) -> Result<ClReport, QmeError> {
    if zeta < 0.0 {
        return Err(QmeError::InvalidSpec("zeta must be nonnegative".into()));
    }
    if !(beta > 0.0) || !(hbar > 0.0) {
        return Err(QmeError::InvalidSpec("beta and hbar must be positive".into()));
    }
    let z = zeta / (hbar * beta);
    let zero = C64::new(0.0, 0.0);
    let xi = CMat::from_row_slice(
        2,
        2,
        &[C64::new(z, 0.0), C64::new(0.0, -gamma_o), zero, zero],
    );
    let xi_h = CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(2.0 * z, 0.0),
            C64::new(0.0, -gamma_o),
            C64::new(0.0, gamma_o),
            zero,
        ],
    );
    let xi_a = CMat::from_row_slice(
        2,
        2,
        &[
            zero,
            C64::new(0.0, -gamma_o),
            C64::new(0.0, -gamma_o),
            zero,
        ],
    );
    let root = (z * z + gamma_o * gamma_o).sqrt();
    Ok(ClReport {
        xi,
        xi_h,
        xi_a,
        psi_plus: z + root,
        psi_minus: z - root,
    })
}

/// Embed the Caldeira-Leggett generator into the quadratic family at a
/// given Hessian and temperature: position coupling off, momentum rate
/// `gamma_p = zeta sech(Theta)`. Requires `H_12 = 0`; otherwise the
/// first row of `Xi` picks up a forbidden real off-diagonal part.
pub fn cl_embedding(
    zeta: f64,
    beta: f64,
    hbar: f64,
    h: &RMat,
) -> Result<ClEmbedding, QmeError> {
    if zeta < 0.0 {
        return Err(QmeError::InvalidSpec("zeta must be nonnegative".into()));
    }
    if h.nrows() != 2 || h.ncols() != 2 {
        return Err(QmeError::InvalidSpec("embedding needs a 2 x 2 Hessian".into()));
    }
    let h12 = h[(0, 1)];
    if h12.abs() > 1e-12 * h.norm().max(1.0) {
        return Err(QmeError::Unembeddable { h12 });
    }
    let (case, det_h) = classify(h);
    let theta = 0.5 * hbar * beta * det_h.abs().sqrt();
    let (ch, sh_over) = match case {
        N1Case::Elliptic => (theta.cosh(), 0.5 * sinhc(theta)),
        N1Case::Hyperbolic => (theta.cos(), 0.5 * sinc(theta)),
        N1Case::Parabolic => (1.0, 0.5),
    };
    let gamma_p = zeta / ch;
    let gamma_o_implied = gamma_p * h[(1, 1)] * sh_over;
    Ok(ClEmbedding {
        gamma_p,
        gamma_q: 0.0,
        gamma_o_implied,
        theta,
    })
}

/// Position of a hyperbolic-class `Theta` relative to the trace windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThetaWindow {
    /// Strictly inside a window: the trace condition can hold.
    Inside,
    /// Within tolerance of a window endpoint: classified Marginal.
    Boundary,
    /// Strictly between windows: the trace of `Xi_H` is negative.
    Outside,
}

/// Classify `theta >= 0` against the hyperbolic trace-window union
/// `[0, pi/2] ∪ ⋃_N [pi/2 + (2N+1) pi, pi/2 + 2(N+1) pi]`, scanning
/// `N = 0..n_max`. These are exactly the intervals with
/// `cos(theta) >= 0`, where the trace of `Xi_H` is nonnegative; points
/// within `tol` of an endpoint come back [`ThetaWindow::Boundary`].
/// A `theta` beyond the last scanned window is unsupported.
pub fn hyperbolic_theta_window(
    theta: f64,
    n_max: usize,
    tol: f64,
) -> Result<ThetaWindow, QmeError> {
    if !(theta >= 0.0) {
        return Err(QmeError::InvalidSpec("theta must be nonnegative".into()));
    }
    if !(tol >= 0.0) {
        return Err(QmeError::InvalidSpec("tol must be nonnegative".into()));
    }
    use std::f64::consts::PI;
    let mut windows = vec![(0.0, 0.5 * PI)];
    for n in 0..=n_max {
        let lo = 0.5 * PI + (2 * n + 1) as f64 * PI;
        let hi = 0.5 * PI + 2.0 * (n + 1) as f64 * PI;
        windows.push((lo, hi));
    }
    let last_hi = windows.last().unwrap().1;
    if theta > last_hi + tol {
        return Err(QmeError::Unsupported(format!(
            "theta = {theta} exceeds the scanned window bound {last_hi} (n_max = {n_max})"
        )));
    }
    for &(lo, hi) in &windows {
        // sign-switching endpoints only: theta = 0 starts inside
        if (lo > 0.0 && (theta - lo).abs() <= tol) || (theta - hi).abs() <= tol {
            return Ok(ThetaWindow::Boundary);
        }
        if theta >= lo && theta < hi {
            return Ok(ThetaWindow::Inside);
        }
    }
    Ok(ThetaWindow::Outside)
}

/// Closed-form `det Xi_H` for pure momentum damping (`gamma_q = 0`):
/// `det Xi_H = -[gamma_p H_22 sinh(Theta)/(2 Theta)]^2 <= 0`, vanishing
/// only for `H_22 = 0`. Position-only friction therefore never yields a
/// GKSL generator for a genuinely kinetic Hamiltonian.
pub fn kramers_obstruction(
    h: &RMat,
    gamma_p: f64,
    beta: f64,
    hbar: f64,
) -> Result<f64, QmeError> {
    if h.nrows() != 2 || h.ncols() != 2 {
        return Err(QmeError::InvalidSpec("obstruction needs a 2 x 2 Hessian".into()));
    }
    if gamma_p < 0.0 {
        return Err(QmeError::InvalidSpec("gamma_p must be nonnegative".into()));
    }
    let (case, det_h) = classify(h);
    let theta = 0.5 * hbar * beta * det_h.abs().sqrt();
    let sh_over = match case {
        N1Case::Elliptic => 0.5 * sinhc(theta),
        N1Case::Hyperbolic => 0.5 * sinc(theta),
        N1Case::Parabolic => 0.5,
    };
    Ok(-(gamma_p * h[(1, 1)] * sh_over).powi(2))
}
