//! Gaussian moment dynamics. The quadratic generator preserves
//! polynomial degree, so first and second moments close exactly:
//! `d<x>/dt = A (<x> - xi)` and `d sigma/dt = A sigma + sigma A^T + D_dyn`
//! with `A = J H - 2 J Im(Xi)` and `D_dyn = -hbar J Re(Xi_H) J`. This
//! module builds those matrices, integrates trajectories, solves for the
//! stationary covariance, and provides the thermal (Gibbs) covariance and
//! the classical Fokker-Planck limit for comparison.

use crate::cptp::XiDecomposition;
use crate::error::QmeError;
use crate::linalg::{complexify, eigvalsh, real_eigenvalues, lyapunov_solve, williamson, RMat, RVec, C64};
use crate::model::{coupling_matrices, symplectic_form, SystemSpec};

/// First and second moments of a Gaussian state at one time.
#[derive(Debug, Clone)]
pub struct MomentState {
    /// Mean vector `<x>` in `(q_1..q_n, p_1..p_n)` ordering.
    pub mean: RVec,
    /// Symmetrized covariance
    /// `sigma_ij = (1/2) <{x_i - <x_i>, x_j - <x_j>}>`.
    pub cov: RMat,
    /// Time stamp.
    pub time: f64,
}

impl MomentState {
    pub fn new(mean: RVec, cov: RMat, time: f64) -> Result<Self, QmeError> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(QmeError::InvalidSpec(
                "covariance shape must match the mean vector".into(),
            ));
        }
        let asym = (&cov - cov.transpose()).norm();
        if asym > 1e-12 * cov.norm().max(1.0) {
            return Err(QmeError::InvalidSpec(format!(
                "covariance must be symmetric (residual {asym:.3e})"
            )));
        }
        Ok(MomentState { mean, cov, time })
    }

    /// Heisenberg physicality: smallest eigenvalue of
    /// `sigma + (i hbar / 2) J` is at least `-1e-10 |sigma|`.
    pub fn is_physical(&self, hbar: f64) -> bool {
        let n = self.mean.len() / 2;
        let j = complexify(&symplectic_form(n));
        let m = complexify(&self.cov) + j * C64::new(0.0, 0.5 * hbar);
        let eigs = eigvalsh(&m);
        eigs[0] >= -1e-10 * self.cov.norm().max(1.0)
    }
}

/// Drift/diffusion closure of the quadratic master equation.
#[derive(Debug, Clone)]
pub struct MomentGenerator {
    /// Drift matrix `A`.
    pub drift: RMat,
    /// Diffusion matrix `D_dyn` (symmetric).
    pub diffusion: RMat,
    /// Fixed point of the mean flow.
    pub fixed_point_shift: RVec,
    /// Planck constant carried along for physicality checks.
    pub hbar: f64,
}

/// Moment closure of the quadratic generator.
pub fn moment_generator(spec: &SystemSpec, dec: &XiDecomposition) -> Result<MomentGenerator, QmeError> {
    spec.validate()?;
    let n = spec.n;
    let j = symplectic_form(n);
    let im_xi = RMat::from_fn(2 * n, 2 * n, |r, c| dec.xi[(r, c)].im);
    let re_xih = RMat::from_fn(2 * n, 2 * n, |r, c| dec.xi_h[(r, c)].re);
    let drift = &j * &spec.hessian - (&j * &im_xi) * 2.0;
    let diffusion = -(&j * &re_xih * &j) * spec.hbar;
    let diffusion = (&diffusion + diffusion.transpose()) * 0.5;
    Ok(MomentGenerator {
        drift,
        diffusion,
        fixed_point_shift: spec.xi.clone(),
        hbar: spec.hbar,
    })
}

/// One RK4 step of the coupled mean/covariance flow.
fn rk4_step(g: &MomentGenerator, mean: &RVec, cov: &RMat, h: f64) -> (RVec, RMat) {
    let a = &g.drift;
    let f_mean = |m: &RVec| a * (m - &g.fixed_point_shift);
    let f_cov = |s: &RMat| a * s + s * a.transpose() + &g.diffusion;

    let k1m = f_mean(mean);
    let k1s = f_cov(cov);
    let k2m = f_mean(&(mean + &k1m * (h / 2.0)));
    let k2s = f_cov(&(cov + &k1s * (h / 2.0)));
    let k3m = f_mean(&(mean + &k2m * (h / 2.0)));
    let k3s = f_cov(&(cov + &k2s * (h / 2.0)));
    let k4m = f_mean(&(mean + &k3m * h));
    let k4s = f_cov(&(cov + &k3s * h));

    let mean_next = mean + (k1m + k2m * 2.0 + k3m * 2.0 + k4m) * (h / 6.0);
    let cov_next = cov + (k1s + &k2s * 2.0 + &k3s * 2.0 + k4s) * (h / 6.0);
    let cov_next = (&cov_next + cov_next.transpose()) * 0.5;
    (mean_next, cov_next)
}

/// Integrate the moment flow over an ascending time grid with a
/// fixed-step fourth-order scheme (internal step at most a tenth of the
/// smallest grid spacing, or finer if `max_step` demands it). Returns the
/// trajectory and a step-halving error estimate (sup norm over the grid).
pub fn evolve_moments(
    g: &MomentGenerator,
    init: &MomentState,
    t_grid: &[f64],
    max_step: Option<f64>,
) -> Result<(Vec<MomentState>, f64), QmeError> {
    if t_grid.is_empty() {
        return Ok((Vec::new(), 0.0));
    }
    if (t_grid[0] - init.time).abs() > 1e-12 * t_grid[0].abs().max(1.0) {
        return Err(QmeError::InvalidSpec(
            "time grid must start at the initial state's time".into(),
        ));
    }
    let mut min_spacing = f64::INFINITY;
    for w in t_grid.windows(2) {
        let dt = w[1] - w[0];
        if dt <= 0.0 {
            return Err(QmeError::InvalidSpec("time grid must be ascending".into()));
        }
        min_spacing = min_spacing.min(dt);
    }
    let mut h_target = if min_spacing.is_finite() {
        min_spacing / 10.0
    } else {
        // single-point grid: nothing to integrate
        return Ok((vec![init.clone()], 0.0));
    };
    if let Some(hm) = max_step {
        if hm <= 0.0 {
            return Err(QmeError::InvalidSpec("max_step must be positive".into()));
        }
        h_target = h_target.min(hm);
    }
    let t_end = *t_grid.last().unwrap();
    if h_target < f64::EPSILON * t_end.abs().max(1.0) * 4.0 {
        return Err(QmeError::StepUnderflow(h_target));
    }

    let run = |h_target: f64| -> (Vec<MomentState>, f64) {
        let mut out = Vec::with_capacity(t_grid.len());
        let mut mean = init.mean.clone();
        let mut cov = init.cov.clone();
        let mut t = init.time;
        out.push(MomentState {
            mean: mean.clone(),
            cov: cov.clone(),
            time: t,
        });
        let mut max_cov = cov.norm();
        for w in t_grid.windows(2) {
            let span = w[1] - w[0];
            let steps = (span / h_target).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                let (m2, s2) = rk4_step(g, &mean, &cov, h);
                mean = m2;
                cov = s2;
            }
            t = w[1];
            max_cov = max_cov.max(cov.norm());
            out.push(MomentState {
                mean: mean.clone(),
                cov: cov.clone(),
                time: t,
            });
        }
        (out, max_cov)
    };

    let (coarse, scale) = run(h_target);
    let (fine, _) = run(h_target / 2.0);
    let mut err = 0.0f64;
    for (a, b) in coarse.iter().zip(&fine) {
        err = err.max((&a.mean - &b.mean).norm() + (&a.cov - &b.cov).norm());
    }
    let _ = scale;
    Ok((fine, err))
}

/// Stationary covariance: the unique solution of
/// `A sigma + sigma A^T + D_dyn = 0` when `A` is Hurwitz.
pub fn stationary_covariance(g: &MomentGenerator) -> Result<RMat, QmeError> {
    let eigs = real_eigenvalues(&g.drift);
    let max_re = eigs.iter().fold(f64::NEG_INFINITY, |acc, z| acc.max(z.re));
    if max_re >= 0.0 {
        return Err(QmeError::NotHurwitz(max_re));
    }
    let sigma = lyapunov_solve(&g.drift, &g.diffusion);
    Ok((&sigma + sigma.transpose()) * 0.5)
}

/// Thermal covariance of `exp(-beta H_op)` for a positive definite
/// Hessian, via the normal-mode (Williamson) decomposition
/// `H = S^T Diag(nu, nu) S`:
/// `sigma = (hbar/2) S^{-1} Diag(coth(hbar beta nu_k / 2)) S^{-T}`.
pub fn gibbs_covariance(h: &RMat, beta: f64, hbar: f64) -> Result<RMat, QmeError> {
    if !(beta > 0.0) || !(hbar > 0.0) {
        return Err(QmeError::InvalidSpec("beta and hbar must be positive".into()));
    }
    let dim = h.nrows();
    let n = dim / 2;
    if dim != 2 * n || h.ncols() != dim || n == 0 {
        return Err(QmeError::InvalidSpec("Hessian must be 2n x 2n".into()));
    }
    let min_eig = crate::linalg::sym_eigen_real(h).0[0];
    if min_eig <= 0.0 {
        return Err(QmeError::NotPositiveDefinite(min_eig));
    }
    let j = symplectic_form(n);
    let (s, nu) = williamson(h, &j)?;
    let mut coth = RVec::zeros(dim);
    for k in 0..n {
        let c = 1.0 / (0.5 * hbar * beta * nu[k]).tanh();
        coth[k] = c;
        coth[k + n] = c;
    }
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or_else(|| QmeError::InvalidSpec("symplectic factor not invertible".into()))?;
    let sigma = &s_inv * RMat::from_diagonal(&coth) * s_inv.transpose() * (0.5 * hbar);
    Ok((&sigma + sigma.transpose()) * 0.5)
}

/// Symplectic eigenvalues of a positive definite Hessian (the
/// normal-mode frequencies), ascending.
pub fn symplectic_eigenvalues(h: &RMat) -> Result<RVec, QmeError> {
    let n = h.nrows() / 2;
    let j = symplectic_form(n);
    let (_, nu) = williamson(h, &j)?;
    Ok(nu)
}

/// Classical Fokker-Planck limit: drift `(I + C J) J H` and diffusion
/// `2 D`.
pub fn classical_limit_matrices(spec: &SystemSpec) -> Result<(RMat, RMat), QmeError> {
    spec.validate()?;
    let n = spec.n;
    let cm = coupling_matrices(spec)?;
    let j = symplectic_form(n);
    let a_cl = (RMat::identity(2 * n, 2 * n) + &cm.c * &j) * (&j * &spec.hessian);
    let d_cl = &cm.d * 2.0;
    Ok((a_cl, d_cl))
}
