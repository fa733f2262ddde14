//! Detailed-balance conditions and invariance relations at uniform
//! temperature, plus Hamiltonian ellipticity classification.
//!
//! For a uniform inverse temperature `beta`, the stationarity structure of
//! the quadratic generator is captured by conjugation identities of the
//! coefficient matrix under the Wick propagator `S_beta` and the real
//! flow `S_t = e^{J H t}`:
//!
//! * commutation of the effective Hamiltonian with `H` is equivalent to
//!   `S_t^T Xi_A S_t = Xi_A` for all `t`;
//! * the jump-vector eigenproblem `S_t^T lambda = e^{-i omega t} lambda`
//!   is solvable exactly when `lambda` lies in an invariant subspace of
//!   `(J H)^T` with a purely imaginary eigenvalue `-i omega`;
//! * conjugate jump channels pair as
//!   `lambda_{mu + n} = e^{-beta hbar omega_mu / 2} conj(lambda_mu)`.
//!
//! Everything reports residuals rather than booleans; the necessary
//! conditions `Xi_A = 0` and `Xi_H = 2 K S_beta` are evaluated through an
//! independent code path so the two computations can cross-check each
//! other.

use serde::Serialize;

use crate::cptp::{LindbladSet, XiDecomposition};
use crate::error::QmeError;
use crate::linalg::{complexify, expm_real, frob, CMat, CVec, RMat, C64};
use crate::model::{coupling_matrices, symplectic_form, SystemSpec};
use crate::propagators::{wick_propagator, WickConvention};

/// Tolerance on real parts of `J H` eigenvalues in the ellipticity test.
pub const ELLIPTIC_TOL: f64 = 1e-10;

/// One conjugate-channel pairing produced by the minimum-weight matching.
#[derive(Debug, Clone, Serialize)]
pub struct BalancePairing {
    /// Index (into the jump-vector list) of the source channel.
    pub source: usize,
    /// Index of the matched partner channel.
    pub partner: usize,
    /// Bohr frequency assigned to the source channel.
    pub omega: f64,
    /// Pairing weight `e^{-beta hbar omega / 2}`.
    pub weight: f64,
    /// Phase-minimized relative distance
    /// `min_phi |lambda_partner - e^{i phi} w conj(lambda_source)| / |lambda_partner|`.
    pub residual: f64,
}

/// Residual report of the uniform-temperature balance conditions.
#[derive(Debug, Clone, Serialize)]
pub struct BalanceReport {
    /// `max_t |S_t^T Xi_A S_t - Xi_A|` over a 16-point grid spanning one
    /// fundamental period `2 pi / omega_min` (1.0 when no positive Bohr
    /// frequency exists).
    pub commutes_residual: f64,
    /// `|S_beta^T Xi_H S_beta - Xi_H|`.
    pub xi_h_invariance_residual: f64,
    /// `|S_beta^T Xi S_beta - Xi|`.
    pub xi_invariance_residual: f64,
    /// `|S_beta^T Xi_A S_beta - Xi_A|`.
    pub xi_a_invariance_residual: f64,
    /// `|Xi_A|`.
    pub xi_a_norm: f64,
    /// `|Xi_H - 2 K S_beta|` — the forward-construction necessary
    /// condition, computed independently of the invariance residuals.
    pub necessary_xi_h_residual: f64,
    /// Whether the Hessian is elliptic (all `J H` eigenvalues purely
    /// imaginary at [`ELLIPTIC_TOL`]).
    pub elliptic: bool,
    /// Positive imaginary parts of the purely imaginary `J H` eigenvalues,
    /// ascending.
    pub bohr_frequencies: Vec<f64>,
    /// Bohr frequency assigned to each jump vector by the least-squares
    /// eigenproblem (`-Im` of the Rayleigh quotient of `(J H)^T`).
    pub channel_frequencies: Vec<f64>,
    /// Largest per-channel eigenproblem residual
    /// `|(J H)^T lambda - a lambda| / |lambda|` (0.0 for an empty set).
    pub condition_ii_residual: f64,
    /// Whether the jump vectors admit a perfect conjugate pairing (true
    /// for an empty set, false for an odd channel count).
    pub pairable: bool,
    /// The minimum-weight conjugate pairing (empty when unpairable).
    pub pairing: Vec<BalancePairing>,
}

/// Classify a Hessian: elliptic iff every eigenvalue of `J H` is purely
/// imaginary within [`ELLIPTIC_TOL`] (relative to the matrix scale).
/// Returns the flag and the `J H` spectrum. A Hessian that is positive
/// definite with margin is asserted to classify as elliptic.
pub fn elliptic_classify(h: &RMat) -> (bool, Vec<C64>) {
    let n = h.nrows() / 2;
    let jh = symplectic_form(n) * h;
    let spectrum = crate::linalg::real_eigenvalues(&jh);
    let scale = frob(&complexify(&jh)).max(1.0);
    let elliptic = spectrum.iter().all(|z| z.re.abs() <= ELLIPTIC_TOL * scale);
    let (h_eigs, _) = crate::linalg::sym_eigen_real(h);
    let h_scale = h.norm().max(1.0);
    if h_eigs.min() > 1e-8 * h_scale {
        assert!(
            elliptic,
            "positive definite Hessian must classify as elliptic"
        );
    }
    (elliptic, spectrum)
}

/// Positive imaginary parts of the purely imaginary eigenvalues, ascending.
fn positive_frequencies(spectrum: &[C64], scale: f64) -> Vec<f64> {
    let mut out: Vec<f64> = spectrum
        .iter()
        .filter(|z| z.re.abs() <= ELLIPTIC_TOL * scale && z.im > ELLIPTIC_TOL * scale)
        .map(|z| z.im)
        .collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Least-squares eigenvalue assignment for one jump vector: the Rayleigh
/// quotient `a = <lambda, M lambda> / <lambda, lambda>` of `M = (J H)^T`
/// and the relative residual `|M lambda - a lambda| / |lambda|`. A vector
/// inside a degenerate invariant subspace gets residual zero without any
/// explicit eigenvector bookkeeping.
fn channel_eigenproblem(m: &CMat, lambda: &CVec) -> (C64, f64) {
    let norm2 = lambda.norm_squared();
    if norm2 == 0.0 {
        return (C64::new(0.0, 0.0), 0.0);
    }
    let ml = m * lambda;
    let a = lambda.dotc(&ml) / C64::new(norm2, 0.0);
    let resid = (&ml - lambda * a).norm() / norm2.sqrt();
    (a, resid)
}

/// Phase-minimized relative distance between `target` and
/// `w * conj(source)`.
fn pairing_residual(source: &CVec, target: &CVec, w: f64) -> f64 {
    let ts = target.norm();
    if ts == 0.0 {
        return if w * source.norm() == 0.0 { 0.0 } else { 1.0 };
    }
    let sc: CVec = source.map(|z| z.conj()) * C64::new(w, 0.0);
    // min over phi of |target - e^{i phi} sc|^2
    //   = |target|^2 + |sc|^2 - 2 |<sc, target>|
    let overlap = sc.dotc(target).norm();
    let d2 = (ts * ts + sc.norm_squared() - 2.0 * overlap).max(0.0);
    d2.sqrt() / ts
}

/// All ways to split `items` into ordered pairs.
fn matchings(items: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let first = items[0];
    let mut out = Vec::new();
    for k in 1..items.len() {
        let other = items[k];
        let rest: Vec<usize> = items[1..]
            .iter()
            .copied()
            .filter(|&x| x != other)
            .collect();
        for tail in matchings(&rest) {
            for &(s, t) in &[(first, other), (other, first)] {
                let mut m = vec![(s, t)];
                m.extend_from_slice(&tail);
                out.push(m);
            }
        }
    }
    out
}

/// Evaluate the uniform-temperature balance conditions for a decomposed
/// coefficient matrix and its extracted jump vectors.
pub fn balance_check(
    spec: &SystemSpec,
    dec: &XiDecomposition,
    ls: &LindbladSet,
) -> Result<BalanceReport, QmeError> {
    spec.validate()?;
    let beta = spec.uniform_beta()?;
    let n = spec.n;
    let j = symplectic_form(n);
    let jh = &j * &spec.hessian;
    let jh_c = complexify(&jh);
    let scale = frob(&jh_c).max(1.0);

    // invariance residuals under the Wick propagator
    let sb = wick_propagator(&spec.hessian, beta, spec.hbar, WickConvention::MinusI)?.matrix;
    let conj_resid = |m: &CMat| frob(&(sb.transpose() * m * &sb - m));
    let xi_h_invariance_residual = conj_resid(&dec.xi_h);
    let xi_invariance_residual = conj_resid(&dec.xi);
    let xi_a_invariance_residual = conj_resid(&dec.xi_a);
    let xi_a_norm = frob(&dec.xi_a);

    // forward-construction necessary condition, independent path
    let cm = coupling_matrices(spec)?;
    let necessary_xi_h_residual = frob(&(&dec.xi_h - complexify(&cm.k) * &sb * C64::new(2.0, 0.0)));

    // ellipticity and Bohr frequencies
    let (elliptic, spectrum) = elliptic_classify(&spec.hessian);
    let bohr_frequencies = positive_frequencies(&spectrum, scale);

    // commutation proxy over one fundamental period
    let period = bohr_frequencies
        .first()
        .map(|w| 2.0 * std::f64::consts::PI / w)
        .unwrap_or(1.0);
    let mut commutes_residual: f64 = 0.0;
    for k in 1..=16 {
        let t = period * k as f64 / 16.0;
        let st = complexify(&expm_real(&(&jh * t)));
        let r = frob(&(st.transpose() * &dec.xi_a * &st - &dec.xi_a));
        commutes_residual = commutes_residual.max(r);
    }

    // condition (ii): per-channel eigenproblem on (J H)^T
    let m_t = jh_c.transpose();
    let mut channel_frequencies = Vec::with_capacity(ls.lambdas.len());
    let mut condition_ii_residual: f64 = 0.0;
    let mut assigned: Vec<f64> = Vec::with_capacity(ls.lambdas.len());
    for lam in &ls.lambdas {
        let (a, r) = channel_eigenproblem(&m_t, lam);
        // S_t^T lambda = e^{a t} lambda must equal e^{-i omega t} lambda
        let omega = -a.im;
        channel_frequencies.push(omega);
        assigned.push(omega);
        condition_ii_residual = condition_ii_residual.max(r);
    }

    // condition (iii): minimum-weight conjugate pairing
    let m = ls.lambdas.len();
    let pairable = m % 2 == 0;
    let mut pairing = Vec::new();
    if pairable && m > 0 {
        let items: Vec<usize> = (0..m).collect();
        // Both orientations of a satisfied Boltzmann pair have zero
        // residual, so break ties toward the dominant (larger-norm)
        // channel acting as the source.
        let mut best: Option<(f64, f64, Vec<(usize, usize)>)> = None;
        for cand in matchings(&items) {
            let total: f64 = cand
                .iter()
                .map(|&(s, t)| {
                    let w = (-0.5 * beta * spec.hbar * assigned[s]).exp();
                    pairing_residual(&ls.lambdas[s], &ls.lambdas[t], w)
                })
                .sum();
            let dominance: f64 = cand.iter().map(|&(s, _)| ls.lambdas[s].norm()).sum();
            let better = match &best {
                None => true,
                Some((bt, bd, _)) => {
                    total < bt - 1e-12 || (total <= bt + 1e-12 && dominance > *bd)
                }
            };
            if better {
                best = Some((total, dominance, cand));
            }
        }
        if let Some((_, _, cand)) = best {
            for (s, t) in cand {
                let w = (-0.5 * beta * spec.hbar * assigned[s]).exp();
                pairing.push(BalancePairing {
                    source: s,
                    partner: t,
                    omega: assigned[s],
                    weight: w,
                    residual: pairing_residual(&ls.lambdas[s], &ls.lambdas[t], w),
                });
            }
        }
    }

    Ok(BalanceReport {
        commutes_residual,
        xi_h_invariance_residual,
        xi_invariance_residual,
        xi_a_invariance_residual,
        xi_a_norm,
        necessary_xi_h_residual,
        elliptic,
        bohr_frequencies,
        channel_frequencies,
        condition_ii_residual,
        pairable,
        pairing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cptp::{decompose, lindblad_decomposition, xi_matrix};
    use crate::model::{network_hessian, BathSpec, SystemSpec};
    use crate::linalg::RVec;

    const SQRT3: f64 = 1.732_050_807_568_877_19;

    fn report_for(spec: &SystemSpec) -> BalanceReport {
        let xi = xi_matrix(spec, WickConvention::MinusI).unwrap();
        let dec = decompose(&xi, 1e-12);
        let ls = lindblad_decomposition(&dec, &spec.xi, &spec.hessian, None);
        balance_check(spec, &dec, &ls).unwrap()
    }

    fn tuned_spec(beta: f64, gt: f64) -> SystemSpec {
        let theta = beta / 2.0;
        let gp = beta * gt / (2.0 * theta.sinh());
        SystemSpec::harmonic(1.0, 1.0, 1.0, gp, gp, beta)
    }

    #[test]
    fn tuned_oscillator_balances() {
        let beta = 2.0;
        let rep = report_for(&tuned_spec(beta, 0.3));
        assert!(rep.xi_a_norm <= 1e-12, "xi_a {}", rep.xi_a_norm);
        assert!(rep.commutes_residual <= 1e-12);
        assert!(rep.xi_h_invariance_residual <= 1e-10);
        assert!(rep.xi_invariance_residual <= 1e-10);
        assert!(rep.xi_a_invariance_residual <= 1e-10);
        assert!(rep.necessary_xi_h_residual <= 1e-10);
        assert!(rep.elliptic);
        assert_eq!(rep.bohr_frequencies.len(), 1);
        assert!((rep.bohr_frequencies[0] - 1.0).abs() <= 1e-10);
        assert!(rep.condition_ii_residual <= 1e-10);
        assert!(rep.pairable);
        assert_eq!(rep.pairing.len(), 1);
        let p = &rep.pairing[0];
        // dominant channel (descending eigenvalue order) is the source
        assert_eq!((p.source, p.partner), (0, 1));
        assert!((p.omega - 1.0).abs() <= 1e-10);
        assert!((p.weight - (-beta / 2.0).exp()).abs() <= 1e-10);
        assert!(p.residual <= 1e-10, "pairing residual {}", p.residual);
    }

    #[test]
    fn detuned_oscillator_breaks_balance_consistently() {
        // generic couplings: both the invariance residual and the
        // independent necessary conditions must be nonzero together
        let spec = SystemSpec::harmonic(1.0, 1.0, 1.0, 0.5, 0.1, 2.0);
        let rep = report_for(&spec);
        assert!(rep.xi_invariance_residual > 1e-3);
        assert!(rep.xi_a_norm > 1e-3);
        assert!(rep.necessary_xi_h_residual > 1e-3);
    }

    #[test]
    fn caldeira_leggett_effective_hamiltonian_shift_detected() {
        // gamma_q = 0, gamma_p = zeta sech(Theta) embeds the high-friction
        // form; its Xi_A is nonzero and fails to commute with the flow
        let zeta = 0.8;
        let beta = 1.0_f64;
        let theta = beta / 2.0;
        let spec = SystemSpec::harmonic(1.0, 1.0, 1.0, 0.0, zeta / theta.cosh(), beta);
        let rep = report_for(&spec);
        assert!(rep.xi_a_norm > 1e-3);
        assert!(rep.commutes_residual > 1e-3);
    }

    #[test]
    fn zero_coupling_is_vacuously_balanced() {
        let spec = SystemSpec::harmonic(1.0, 1.3, 1.0, 0.0, 0.0, 2.0);
        let rep = report_for(&spec);
        assert_eq!(rep.pairing.len(), 0);
        assert!(rep.pairable);
        assert_eq!(rep.channel_frequencies.len(), 0);
        assert!(rep.xi_a_norm == 0.0);
        assert!(rep.commutes_residual == 0.0);
        assert!(rep.xi_h_invariance_residual == 0.0);
        assert!(rep.condition_ii_residual == 0.0);
    }

    #[test]
    fn network_is_elliptic_with_two_frequencies() {
        let bath = BathSpec {
            gamma_q: 0.25,
            gamma_p: 0.25,
            beta: 1.5,
        };
        let spec = SystemSpec::network(1.0, 1.0, 1.0, [bath.clone(), bath]);
        let rep = report_for(&spec);
        assert!(rep.elliptic);
        assert_eq!(rep.bohr_frequencies.len(), 2);
        assert!((rep.bohr_frequencies[0] - 1.0).abs() <= 1e-10);
        assert!((rep.bohr_frequencies[1] - SQRT3).abs() <= 1e-10);
    }

    #[test]
    fn non_uniform_temperature_rejected() {
        let baths = [
            BathSpec {
                gamma_q: 0.1,
                gamma_p: 0.1,
                beta: 1.0,
            },
            BathSpec {
                gamma_q: 0.1,
                gamma_p: 0.1,
                beta: 2.0,
            },
        ];
        let spec = SystemSpec::network(1.0, 0.4, 1.0, baths);
        let xi = xi_matrix(&spec, WickConvention::MinusI).unwrap();
        let dec = decompose(&xi, 1e-12);
        let ls = lindblad_decomposition(&dec, &spec.xi, &spec.hessian, None);
        let err = balance_check(&spec, &dec, &ls).unwrap_err();
        assert!(matches!(err, QmeError::NonUniformTemperature(_)), "{err}");
    }

    #[test]
    fn classify_inverted_oscillator() {
        let h = RMat::from_diagonal(&RVec::from_vec(vec![-1.0, 1.0]));
        let (elliptic, spectrum) = elliptic_classify(&h);
        assert!(!elliptic);
        assert!(spectrum.iter().any(|z| z.re.abs() > 0.5));
    }

    #[test]
    fn classify_harmonic_and_network() {
        let h = RMat::from_diagonal(&RVec::from_vec(vec![2.0, 0.5]));
        assert!(elliptic_classify(&h).0);
        assert!(elliptic_classify(&network_hessian(1.0, 0.4)).0);
    }

    #[test]
    fn classify_free_particle_as_marginally_elliptic() {
        // nilpotent J H: both eigenvalues zero, which the operational
        // purely-imaginary test accepts
        let h = RMat::from_diagonal(&RVec::from_vec(vec![0.0, 1.0]));
        let (elliptic, spectrum) = elliptic_classify(&h);
        assert!(elliptic);
        assert!(spectrum.iter().all(|z| z.norm() <= 1e-10));
    }

    #[test]
    fn report_serializes() {
        let rep = report_for(&tuned_spec(2.0, 0.3));
        let text = serde_json::to_string(&rep).unwrap();
        assert!(text.contains("\"bohr_frequencies\""));
        assert!(text.contains("\"pairing\""));
    }
}
