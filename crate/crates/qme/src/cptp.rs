//! Complete positivity analysis of the quadratic generator: build the
//! coefficient matrix `Xi` from the bath couplings and the Wick-rotated
//! propagator, decide whether `Xi_H = Xi + Xi^dagger` is positive
//! semidefinite (the CPTP criterion), extract signed Lindblad coupling
//! vectors from its eigendecomposition, and assemble the Hermitian
//! effective Hamiltonian including the antisymmetric-part shift.

use serde::{Deserialize, Serialize};

use crate::error::QmeError;
use crate::linalg::{adjoint, complexify, frob, herm_eigen, matmul, CMat, CVec, RMat, RVec, C64, IM};
use crate::model::{coupling_matrices, SystemSpec};
use crate::propagators::{wick_propagator, WickConvention};

/// Outcome of the positivity test on `Xi_H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// `Xi_H` is positive semidefinite within tolerance: the generator is
    /// a legitimate Lindblad generator (all signs `+1`).
    Cptp,
    /// `Xi_H` has a negative eigenvalue beyond tolerance.
    NotCptp,
    /// The smallest eigenvalue sits inside the tolerance band around zero.
    Marginal,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Cptp => write!(f, "CPTP"),
            Verdict::NotCptp => write!(f, "NotCPTP"),
            Verdict::Marginal => write!(f, "Marginal"),
        }
    }
}

/// Hermitian/antisymmetric split of `Xi` with the spectrum of `Xi_H`.
#[derive(Debug, Clone)]
pub struct XiDecomposition {
    /// The full coefficient matrix `Xi`.
    pub xi: CMat,
    /// `Xi_H = Xi + Xi^dagger` (Hermitian; note: not halved).
    pub xi_h: CMat,
    /// `Xi_A = Xi - Xi^dagger` (anti-Hermitian; note: not halved).
    pub xi_a: CMat,
    /// Eigenvalues of `Xi_H`, ascending.
    pub eigenvalues: RVec,
    /// Unit-norm eigenvectors of `Xi_H`, columns matching `eigenvalues`.
    pub eigenvectors: CMat,
    /// Positivity verdict at the tolerance handed to [`decompose`].
    pub verdict: Verdict,
}

/// Signed Lindblad coupling vectors `lambda_mu` with their signs
/// `g_mu = +-1`, such that `sum_mu g_mu lambda_mu lambda_mu^dagger = Xi_H`
/// and the jump operators are `L_mu = lambda_mu . (x - eta)`.
#[derive(Debug, Clone)]
pub struct LindbladSet {
    /// Coupling vectors, ordered by descending eigenvalue of `Xi_H`.
    pub lambdas: Vec<CVec>,
    /// Signs `+1.0` / `-1.0` matching `lambdas`.
    pub signs: Vec<f64>,
    /// Real displacement entering every jump operator.
    pub eta: RVec,
    /// Effective-Hamiltonian bookkeeping: the bare Hessian `H` and the
    /// Hermitian quadratic kernel `-(i/2) conj(Xi_A)` of the shift term
    /// `(x - eta) . [-(i/2) conj(Xi_A)] (x - eta)`.
    pub h_eff: (RMat, CMat),
    /// Linear Hamiltonian coefficient accumulated by gauge shifts
    /// (`w` such that `Delta H = (hbar / 2i) [w . (x - eta) - h.c.]`).
    pub gauge_linear: CVec,
}

/// Effective Hamiltonian as an explicit quadratic form
/// `H_eff(x) = (1/2) x . kernel x + linear . x + constant`,
/// combining `(1/2)(x - xi) . H (x - xi) + phi` with the dissipative shift
/// `(1/2)(x - eta) . (-i conj(Xi_A)) (x - eta)`.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    /// Hermitian kernel `H - i conj(Xi_A)`.
    pub kernel: CMat,
    /// Linear coefficient (real because the kernel is Hermitian).
    pub linear: RVec,
    /// Constant offset.
    pub constant: f64,
    /// Hermiticity residual of the kernel before symmetrization.
    pub hermiticity_residual: f64,
}

/// Build the coefficient matrix `Xi` row-wise: row `j` equals
/// `K_jj` times row `j` of the Wick propagator at that row's bath
/// temperature (rows `j` and `j + n` share bath `j`'s temperature).
pub fn xi_matrix(spec: &SystemSpec, sign: WickConvention) -> Result<CMat, QmeError> {
    spec.validate()?;
    let n = spec.n;
    let dim = 2 * n;
    let cm = coupling_matrices(spec)?;
    // one propagator per distinct bath temperature
    let mut props: Vec<(f64, CMat)> = Vec::new();
    let mut xi = CMat::zeros(dim, dim);
    for j in 0..dim {
        let beta_j = spec.baths[j % n].beta;
        let s = match props.iter().find(|(b, _)| *b == beta_j) {
            Some((_, s)) => s.clone(),
            None => {
                let w = wick_propagator(&spec.hessian, beta_j, spec.hbar, sign)?;
                props.push((beta_j, w.matrix.clone()));
                w.matrix
            }
        };
        let kjj = C64::new(cm.k[(j, j)], 0.0);
        for k in 0..dim {
            xi[(j, k)] = kjj * s[(j, k)];
        }
    }
    Ok(xi)
}

/// Split `Xi` into Hermitian and antisymmetric parts and classify the
/// spectrum of `Xi_H` at the given absolute-band tolerance (scaled by
/// `max(1, |Xi_H|_F)`).
pub fn decompose(xi: &CMat, tol: f64) -> XiDecomposition {
    let xi_h = xi + adjoint(xi);
    let xi_a = xi - adjoint(xi);
    let (eigenvalues, eigenvectors) = herm_eigen(&xi_h);
    let scale = frob(&xi_h).max(1.0);
    let min_eig = eigenvalues[0];
    let verdict = if min_eig.abs() < tol * scale {
        Verdict::Marginal
    } else if min_eig > 0.0 {
        Verdict::Cptp
    } else {
        Verdict::NotCptp
    };
    XiDecomposition {
        xi: xi.clone(),
        xi_h,
        xi_a,
        eigenvalues,
        eigenvectors,
        verdict,
    }
}

/// Extract the signed Lindblad coupling vectors
/// `lambda_mu = sqrt(|a_mu|) v_mu`, `g_mu = sign(a_mu)` from the
/// eigendecomposition of `Xi_H`, dropping eigenvalues below
/// `rank_tol * max |a|` (default `rank_tol = 1e-12`). `h` is the bare
/// Hessian carried along for effective-Hamiltonian bookkeeping.
pub fn lindblad_decomposition(
    dec: &XiDecomposition,
    eta: &RVec,
    h: &RMat,
    rank_tol: Option<f64>,
) -> LindbladSet {
    let dim = dec.xi_h.nrows();
    let rank_tol = rank_tol.unwrap_or(1e-12);
    let max_abs = dec
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &a| acc.max(a.abs()));
    let cutoff = rank_tol * max_abs;
    let mut lambdas = Vec::new();
    let mut signs = Vec::new();
    // descending eigenvalue order: dominant channel first
    for idx in (0..dim).rev() {
        let a = dec.eigenvalues[idx];
        if a.abs() <= cutoff {
            continue;
        }
        let v = dec.eigenvectors.column(idx).into_owned();
        lambdas.push(v * C64::new(a.abs().sqrt(), 0.0));
        signs.push(if a >= 0.0 { 1.0 } else { -1.0 });
    }
    let shift_kernel = dec.xi_a.map(|z| z.conj()) * (-IM * C64::new(0.5, 0.0));
    LindbladSet {
        lambdas,
        signs,
        eta: eta.clone(),
        h_eff: (h.clone(), shift_kernel),
        gauge_linear: CVec::zeros(dim),
    }
}

/// `sum_mu g_mu lambda_mu lambda_mu^dagger` — must reproduce `Xi_H`.
pub fn reconstruct_xi_h(ls: &LindbladSet) -> CMat {
    let dim = ls.eta.len();
    let mut acc = CMat::zeros(dim, dim);
    for (lambda, &g) in ls.lambdas.iter().zip(&ls.signs) {
        let outer = lambda * adjoint(&CMat::from_columns(&[lambda.clone()]));
        acc += outer * C64::new(g, 0.0);
    }
    acc
}

/// Apply the gauge freedom `lambda'_mu = sum_nu U_{mu nu} lambda_nu`,
/// `L'_mu = L'_mu + varsigma_mu`, which leaves the generator invariant
/// provided `U` is unitary and commutes with the sign matrix
/// `G = diag(g)`. The constant shifts are absorbed into a linear
/// Hamiltonian term recorded in `gauge_linear`.
pub fn gauge_transform(
    ls: &LindbladSet,
    u: &CMat,
    varsigma: &CVec,
) -> Result<LindbladSet, QmeError> {
    let m = ls.lambdas.len();
    if u.nrows() != m || u.ncols() != m || varsigma.len() != m {
        return Err(QmeError::InvalidSpec(format!(
            "gauge transform needs an {m} x {m} unitary and a length-{m} shift"
        )));
    }
    let ident = CMat::identity(m, m);
    let unitarity = frob(&(matmul(&adjoint(u), u) - &ident)) / (m as f64).sqrt();
    if unitarity > 1e-10 {
        return Err(QmeError::NotUnitary(unitarity));
    }
    let g = CMat::from_diagonal(&CVec::from_iterator(
        m,
        ls.signs.iter().map(|&s| C64::new(s, 0.0)),
    ));
    let comm = frob(&(matmul(u, &g) - matmul(&g, u))) / (m as f64).sqrt();
    if comm > 1e-10 {
        return Err(QmeError::NotGCommuting(comm));
    }
    let dim = ls.eta.len();
    let mut new_lambdas = Vec::with_capacity(m);
    for mu in 0..m {
        let mut acc = CVec::zeros(dim);
        for nu in 0..m {
            acc += &ls.lambdas[nu] * u[(mu, nu)];
        }
        new_lambdas.push(acc);
    }
    // Delta H = (hbar / 2i) [ w . (x - eta) - h.c. ],
    // w = sum_mu g_mu conj(varsigma_mu) lambda'_mu
    let mut w = ls.gauge_linear.clone();
    for mu in 0..m {
        w += &new_lambdas[mu] * (varsigma[mu].conj() * C64::new(ls.signs[mu], 0.0));
    }
    Ok(LindbladSet {
        lambdas: new_lambdas,
        signs: ls.signs.clone(),
        eta: ls.eta.clone(),
        h_eff: ls.h_eff.clone(),
        gauge_linear: w,
    })
}

/// Assemble the effective Hamiltonian quadratic form
/// `(1/2)(x - xi) . H (x - xi) + phi + (1/2)(x - eta) . G (x - eta)` with
/// `G = -i conj(Xi_A)`, expanded around the origin. `eta` is taken equal
/// to the Hamiltonian displacement `xi` (the forward construction).
pub fn effective_hamiltonian(spec: &SystemSpec, dec: &XiDecomposition) -> EffectiveHamiltonian {
    let h = complexify(&spec.hessian);
    let g = dec.xi_a.map(|z| z.conj()) * (-IM);
    let raw = &h + &g;
    let herm = (&raw + adjoint(&raw)) * C64::new(0.5, 0.0);
    let hermiticity_residual = frob(&(&raw - &herm)) / frob(&herm).max(1.0);
    let eta = &spec.xi;
    // linear = -H xi - Re(G) eta ; constant = xi.H xi / 2 + phi + eta.Re(G) eta / 2
    let g_re = RMat::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)].re);
    let linear = -(&spec.hessian * &spec.xi) - &g_re * eta;
    let constant = 0.5 * (spec.xi.dot(&(&spec.hessian * &spec.xi)))
        + spec.phi
        + 0.5 * eta.dot(&(&g_re * eta));
    EffectiveHamiltonian {
        kernel: herm,
        linear,
        constant,
        hermiticity_residual,
    }
}
