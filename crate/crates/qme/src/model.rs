//! System description and the canonical parametrization of a general
//! quadratic generator.
//!
//! Phase-space ordering is `x = (q_1, ..., q_n, p_1, ..., p_n)` throughout,
//! with canonical commutators `[x_j, x_k] = i hbar J_jk` for the symplectic
//! form `J`. Each degree of freedom `i` carries its own bath `(gamma_q_i,
//! gamma_p_i, beta_i)`; row `i + n` of any per-row temperature assignment
//! shares `beta_i` (a momentum couples to the same bath as its position).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::QmeError;
use crate::linalg::{pseudo_solve, CMat, CVec, RMat, RVec, C64};

/// Heat-bath parameters for one degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    /// Position-coupling rate, `>= 0`.
    pub gamma_q: f64,
    /// Momentum-coupling rate, `>= 0`.
    pub gamma_p: f64,
    /// Inverse temperature, `> 0`.
    pub beta: f64,
}

/// Complete system description: quadratic Hamiltonian
/// `H(x) = (x - xi) . hessian (x - xi) / 2 + phi` plus one bath per degree
/// of freedom. This is the single source of truth consumed by every module.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    /// Number of degrees of freedom `n >= 1`.
    pub n: usize,
    /// Planck constant `hbar > 0`.
    pub hbar: f64,
    /// Real symmetric `2n x 2n` energy curvature.
    pub hessian: RMat,
    /// Real `2n` equilibrium displacement.
    pub xi: RVec,
    /// Energy offset.
    pub phi: f64,
    /// One bath per degree of freedom (length `n`).
    pub baths: Vec<BathSpec>,
}

/// JSON mirror of [`SystemSpec`] (row-major nested arrays for the Hessian).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSpecJson {
    n: usize,
    hbar: f64,
    hessian: Vec<Vec<f64>>,
    xi: Vec<f64>,
    phi: f64,
    baths: Vec<BathSpec>,
}

impl Serialize for SystemSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let d = self.dim();
        let hessian = (0..d)
            .map(|i| (0..d).map(|j| self.hessian[(i, j)]).collect())
            .collect();
        SystemSpecJson {
            n: self.n,
            hbar: self.hbar,
            hessian,
            xi: self.xi.iter().copied().collect(),
            phi: self.phi,
            baths: self.baths.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SystemSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let raw = SystemSpecJson::deserialize(de)?;
        let d = 2 * raw.n;
        if raw.hessian.len() != d || raw.hessian.iter().any(|row| row.len() != d) {
            return Err(serde::de::Error::custom(format!(
                "hessian must be {d}x{d} for n = {}",
                raw.n
            )));
        }
        if raw.xi.len() != d {
            return Err(serde::de::Error::custom(format!(
                "xi must have length {d} for n = {}",
                raw.n
            )));
        }
        if raw.baths.len() != raw.n {
            return Err(serde::de::Error::custom(format!(
                "baths must have length {} (one per degree of freedom)",
                raw.n
            )));
        }
        let hessian = RMat::from_fn(d, d, |i, j| raw.hessian[i][j]);
        let spec = SystemSpec {
            n: raw.n,
            hbar: raw.hbar,
            hessian,
            xi: RVec::from_vec(raw.xi),
            phi: raw.phi,
            baths: raw.baths,
        };
        spec.validate().map_err(serde::de::Error::custom)?;
        Ok(spec)
    }
}

impl SystemSpec {
    /// Phase-space dimension `2n`.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Validate all structural invariants.
    pub fn validate(&self) -> Result<(), QmeError> {
        if self.n == 0 {
            return Err(QmeError::InvalidSpec("n must be >= 1".into()));
        }
        let d = self.dim();
        if self.hessian.shape() != (d, d) {
            return Err(QmeError::InvalidSpec(format!(
                "hessian must be {d}x{d}"
            )));
        }
        if self.xi.len() != d {
            return Err(QmeError::InvalidSpec(format!("xi must have length {d}")));
        }
        if self.baths.len() != self.n {
            return Err(QmeError::InvalidSpec(
                "exactly one bath per degree of freedom".into(),
            ));
        }
        if !self.hbar.is_finite() || self.hbar <= 0.0 {
            return Err(QmeError::InvalidSpec("hbar must be positive".into()));
        }
        if !self.phi.is_finite()
            || self.hessian.iter().any(|x| !x.is_finite())
            || self.xi.iter().any(|x| !x.is_finite())
        {
            return Err(QmeError::InvalidSpec("nonfinite entries".into()));
        }
        let asym = (&self.hessian - self.hessian.transpose()).norm();
        let scale = self.hessian.norm().max(1.0);
        if asym > 1e-12 * scale {
            return Err(QmeError::InvalidSpec(format!(
                "hessian asymmetry {asym:.3e} exceeds 1e-12 relative"
            )));
        }
        for (i, b) in self.baths.iter().enumerate() {
            if !b.beta.is_finite() || b.beta <= 0.0 {
                return Err(QmeError::InvalidSpec(format!(
                    "bath {i}: beta must be positive"
                )));
            }
            if !b.gamma_q.is_finite() || b.gamma_q < 0.0 || !b.gamma_p.is_finite() || b.gamma_p < 0.0
            {
                return Err(QmeError::InvalidSpec(format!(
                    "bath {i}: gamma values must be nonnegative"
                )));
            }
        }
        Ok(())
    }

    /// The common inverse temperature, or an error reporting the spread.
    pub fn uniform_beta(&self) -> Result<f64, QmeError> {
        let b0 = self.baths[0].beta;
        let spread = self
            .baths
            .iter()
            .map(|b| (b.beta - b0).abs())
            .fold(0.0, f64::max);
        if spread > 1e-12 * b0.abs().max(1.0) {
            return Err(QmeError::NonUniformTemperature(spread));
        }
        Ok(b0)
    }

    /// Parse a spec from its JSON representation (validates on the way in).
    pub fn from_json(text: &str) -> Result<Self, QmeError> {
        serde_json::from_str(text).map_err(|e| QmeError::InvalidSpec(e.to_string()))
    }

    /// Serialize the spec to pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialization cannot fail")
    }

    /// Single-oscillator spec with `hessian = Diag(m omega^2, 1/m)`.
    pub fn harmonic(
        m: f64,
        omega: f64,
        hbar: f64,
        gamma_q: f64,
        gamma_p: f64,
        beta: f64,
    ) -> Self {
        let hessian = RMat::from_diagonal(&RVec::from_vec(vec![m * omega * omega, 1.0 / m]));
        SystemSpec {
            n: 1,
            hbar,
            hessian,
            xi: RVec::zeros(2),
            phi: 0.0,
            baths: vec![BathSpec {
                gamma_q,
                gamma_p,
                beta,
            }],
        }
    }

    /// Two linearly coupled oscillators, each with frequency `omega` and
    /// coupling `kappa` between the positions; `H_pp = omega I`,
    /// `H_qq = [[omega + kappa, -kappa], [-kappa, omega + kappa]]`.
    pub fn network(omega: f64, kappa: f64, hbar: f64, baths: [BathSpec; 2]) -> Self {
        SystemSpec {
            n: 2,
            hbar,
            hessian: network_hessian(omega, kappa),
            xi: RVec::zeros(4),
            phi: 0.0,
            baths: baths.to_vec(),
        }
    }
}

/// Hessian of the two-oscillator network in `(q1, q2, p1, p2)` ordering.
pub fn network_hessian(omega: f64, kappa: f64) -> RMat {
    RMat::from_row_slice(
        4,
        4,
        &[
            omega + kappa,
            -kappa,
            0.0,
            0.0,
            -kappa,
            omega + kappa,
            0.0,
            0.0,
            0.0,
            0.0,
            omega,
            0.0,
            0.0,
            0.0,
            0.0,
            omega,
        ],
    )
}

/// The symplectic form `J` with blocks `[[0, I], [-I, 0]]`.
pub fn symplectic_form(n: usize) -> RMat {
    assert!(n >= 1, "n must be >= 1");
    let mut j = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// The diagonal coupling matrices `C`, `D`, `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrices {
    /// `C = Diag(gamma_q_1, ..., gamma_q_n, gamma_p_1, ..., gamma_p_n)`.
    pub c: RMat,
    /// `D = Diag(gamma_q_i / beta_i ..., gamma_p_i / beta_i ...)`.
    pub d: RMat,
    /// `K = (1/hbar) J D J^T`; note the q/p swap:
    /// `K = Diag(gamma_p_i/(hbar beta_i) ..., gamma_q_i/(hbar beta_i) ...)`.
    pub k: RMat,
}

/// Build the coupling matrices from a spec.
pub fn coupling_matrices(spec: &SystemSpec) -> Result<CouplingMatrices, QmeError> {
    spec.validate()?;
    let n = spec.n;
    let mut c_diag = RVec::zeros(2 * n);
    let mut d_diag = RVec::zeros(2 * n);
    for (i, b) in spec.baths.iter().enumerate() {
        c_diag[i] = b.gamma_q;
        c_diag[n + i] = b.gamma_p;
        d_diag[i] = b.gamma_q / b.beta;
        d_diag[n + i] = b.gamma_p / b.beta;
    }
    let c = RMat::from_diagonal(&c_diag);
    let d = RMat::from_diagonal(&d_diag);
    let j = symplectic_form(n);
    let k = (&j * &d * j.transpose()) / spec.hbar;
    Ok(CouplingMatrices { c, d, k })
}

/// Raw coefficients of the most general quadratic dissipator
///
/// `D[rho] = -(1/hbar) [ sum_jk ( L_jk rho x_j x_k + M_jk x_j rho x_k
///            + N_jk x_j x_k rho ) + sum_j ( alpha_j rho x_j
///            + beta_j x_j rho ) + c rho ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorCoefficients {
    /// Coefficient of `rho x_j x_k`.
    pub l: CMat,
    /// Coefficient of `x_j rho x_k`.
    pub m: CMat,
    /// Coefficient of `x_j x_k rho`.
    pub n_mat: CMat,
    /// Coefficient of `rho x_j`.
    pub alpha: CVec,
    /// Coefficient of `x_j rho`.
    pub beta_vec: CVec,
    /// Coefficient of `rho`.
    pub c: C64,
}

/// Expand the canonical quadratic dissipator
///
/// `D[rho] = -(1/hbar) sum_jk Xi^T_jk rho X_j X_k
///           + (1/hbar) sum_jk (Xi + Xi^dag)_jk X_j rho X_k
///           - (1/hbar) sum_jk conj(Xi)_jk X_j X_k rho`,  `X = x - eta`,
///
/// into raw [`GeneratorCoefficients`]; the inverse of
/// [`canonicalize_generator`].
pub fn qtcl_coefficients(xi: &CMat, eta: &RVec) -> GeneratorCoefficients {
    let dim = xi.nrows();
    let xi_h = xi + xi.adjoint();
    let im_xi = crate::linalg::im_part(xi);
    // alpha = (conj(Xi) - Xi) eta = -2i Im(Xi) eta; beta = -alpha; c = 0.
    let alpha_r = &im_xi * eta;
    let alpha = CVec::from_iterator(dim, alpha_r.iter().map(|&x| Complex64::new(0.0, -2.0 * x)));
    GeneratorCoefficients {
        l: xi.transpose(),
        m: -xi_h,
        n_mat: xi.map(|z| z.conj()),
        alpha: alpha.clone(),
        beta_vec: -alpha,
        c: Complex64::new(0.0, 0.0),
    }
}

/// Verify the structural constraints of raw generator coefficients and
/// recover the canonical pair `(Xi, eta)`.
///
/// Trace preservation requires `L + M^T + N = 0`, `alpha + beta = 0`,
/// `c = 0`; Hermiticity requires `L = N^dag`, `M = M^dag`,
/// `alpha = conj(beta)`. The displacement solves the real-linear system
/// `2 Im(Xi) eta = -Im(alpha)` in the minimum-norm least-squares sense;
/// a residual above `tol * max(1, |alpha|)` (including any real part of
/// `alpha`, which no real displacement can produce) is an error.
pub fn canonicalize_generator(
    g: &GeneratorCoefficients,
    tol: f64,
) -> Result<(CMat, RVec), QmeError> {
    let dim = g.l.nrows();
    let scale = crate::linalg::frob(&g.l)
        .max(crate::linalg::frob(&g.m))
        .max(crate::linalg::frob(&g.n_mat))
        .max(1.0);

    let trace_res = crate::linalg::frob(&(&g.l + g.m.transpose() + &g.n_mat))
        .max((&g.alpha + &g.beta_vec).norm())
        .max(g.c.norm());
    if trace_res > tol * scale {
        return Err(QmeError::ConstraintViolation {
            kind: "trace",
            residual: trace_res,
            tol: tol * scale,
        });
    }
    let herm_res = crate::linalg::frob(&(&g.l - g.n_mat.adjoint()))
        .max(crate::linalg::frob(&(&g.m - g.m.adjoint())))
        .max((&g.alpha - g.beta_vec.map(|z| z.conj())).norm());
    if herm_res > tol * scale {
        return Err(QmeError::ConstraintViolation {
            kind: "hermiticity",
            residual: herm_res,
            tol: tol * scale,
        });
    }

    let xi = g.l.transpose();
    // Solve 2 Im(Xi) eta = -Im(alpha); reject any real part of alpha.
    let im_xi = crate::linalg::im_part(&xi) * 2.0;
    let rhs = RVec::from_iterator(dim, g.alpha.iter().map(|z| -z.im));
    let (eta, lsq_res) = pseudo_solve(&im_xi, &rhs, 1e-12);
    let re_alpha = g.alpha.iter().map(|z| z.re * z.re).sum::<f64>().sqrt();
    let residual = (lsq_res * lsq_res + re_alpha * re_alpha).sqrt();
    let alpha_scale = g.alpha.norm().max(1e-8);
    if residual > 1e-8 * alpha_scale.max(1.0) {
        return Err(QmeError::NoRealShift {
            residual,
            tol: 1e-8 * alpha_scale.max(1.0),
        });
    }
    Ok((xi, eta))
}
