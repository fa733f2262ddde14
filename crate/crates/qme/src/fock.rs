//! Truncated Fock-space oracle.
//!
//! Builds the master-equation generator on a dense truncated Fock space by
//! two independent routes — operator-exponential conjugation and the
//! quadratic coefficient-matrix form — plus the first-order high-temperature
//! form and the damped-oscillator two-channel form, integrates density
//! matrices, and extracts moments and positivity diagnostics. Everything
//! here is deliberately brute-force: it is a correctness oracle for the
//! closed forms elsewhere in the crate, not a production solver.

use nalgebra::Complex;
use serde::Serialize;

use crate::cptp::LindbladSet;
use crate::error::QmeError;
use crate::linalg::{
    eigvalsh, expm, expm_real, frob, gemm_into, herm_eigen, kron, unvec, vec_col, CMat, CVec,
    RMat, RVec, C64, ONE, ZERO,
};
use crate::model::{coupling_matrices, symplectic_form, SystemSpec};

/// Largest Hilbert-space dimension for which a generator may be
/// materialized as a dense matrix on vectorized density matrices
/// (`64^4` complex entries is ~268 MB).
pub const MATERIALIZE_DIM_CAP: usize = 64;

/// Largest Hilbert-space dimension [`build_fock`] will construct.
pub const FOCK_DIM_CAP: usize = 1024;

/// Occupation threshold on the top two levels of any mode beyond which a
/// trajectory is considered to have outgrown its truncation.
pub const TRUNCATION_OCCUPATION_TOL: f64 = 1e-6;

/// Which construction produced a [`Superoperator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// Operator-exponential conjugation build (`y = e^{beta H/2} x e^{-beta H/2}`).
    DirectConjugation,
    /// Quadratic coefficient-matrix build from `(Xi, eta)`.
    Quadratic,
    /// First-order high-temperature build.
    HighTemperature,
    /// Two-channel damped-oscillator build.
    Optics,
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Source::DirectConjugation => "direct-conjugation",
            Source::Quadratic => "quadratic",
            Source::HighTemperature => "high-temperature",
            Source::Optics => "optics",
        };
        write!(f, "{s}")
    }
}

/// Dense truncated Fock representation of a system.
#[derive(Debug, Clone)]
pub struct FockRep {
    /// The system the representation was built for.
    pub spec: SystemSpec,
    /// Number of modes (1 or 2).
    pub n_modes: usize,
    /// Levels kept per mode.
    pub trunc: Vec<usize>,
    /// Ladder scale per mode (`q = sqrt(hbar/2s)(a + a^dag)`).
    pub scale: Vec<f64>,
    /// Total Hilbert-space dimension, `prod(trunc)`.
    pub dim: usize,
    /// Planck constant copied from the spec.
    pub hbar: f64,
    /// Position operators, one per mode, each `dim x dim`.
    pub q_ops: Vec<CMat>,
    /// Momentum operators, one per mode, each `dim x dim`.
    pub p_ops: Vec<CMat>,
    /// Hamiltonian operator assembled from the spec.
    pub hamiltonian: CMat,
    /// Identity matrix of the full dimension.
    pub identity: CMat,
}

impl FockRep {
    /// The `j`-th phase-space operator in the `(q_1..q_n, p_1..p_n)` ordering.
    pub fn x_op(&self, j: usize) -> &CMat {
        if j < self.n_modes {
            &self.q_ops[j]
        } else {
            &self.p_ops[j - self.n_modes]
        }
    }
}

/// Per-mode ladder pair `(q, p)` at `nlev` levels and scale `s`.
fn mode_ladder(nlev: usize, hbar: f64, s: f64) -> (CMat, CMat) {
    let mut a = CMat::zeros(nlev, nlev);
    for k in 0..nlev - 1 {
        a[(k, k + 1)] = C64::new(((k + 1) as f64).sqrt(), 0.0);
    }
    let ad = a.adjoint();
    let q = (&a + &ad) * C64::new((hbar / (2.0 * s)).sqrt(), 0.0);
    let p = (&ad - &a) * C64::new(0.0, (hbar * s / 2.0).sqrt());
    (q, p)
}

/// Embed a single-mode operator into the tensor product, mode `i` of `n`
/// (mode 0 is the slowest / leftmost Kronecker factor).
fn embed(op: &CMat, trunc: &[usize], i: usize) -> CMat {
    let pre: usize = trunc[..i].iter().product();
    let post: usize = trunc[i + 1..].iter().product();
    let mut m = if pre > 1 {
        kron(&CMat::identity(pre, pre), op)
    } else {
        op.clone()
    };
    if post > 1 {
        m = kron(&m, &CMat::identity(post, post));
    }
    m
}

/// Build a dense Fock representation. `scale = None` picks
/// `s_i = sqrt(H_ii / H_{n+i,n+i})` whenever both diagonal entries are
/// positive, else `1.0`.
pub fn build_fock(
    spec: &SystemSpec,
    trunc: &[usize],
    scale: Option<&[f64]>,
) -> Result<FockRep, QmeError> {
    spec.validate()?;
    let n = spec.n;
    if n > 2 {
        return Err(QmeError::Unsupported(
            "the dense Fock oracle supports at most two modes".into(),
        ));
    }
    if trunc.len() != n {
        return Err(QmeError::InvalidSpec(format!(
            "expected {n} truncation entries, got {}",
            trunc.len()
        )));
    }
    if trunc.iter().any(|&t| t < 4) {
        return Err(QmeError::InvalidSpec(
            "Fock truncation must keep at least 4 levels per mode".into(),
        ));
    }
    let dim: usize = trunc.iter().product();
    if dim > FOCK_DIM_CAP {
        return Err(QmeError::BudgetExceeded(format!(
            "Fock dimension {dim} exceeds the dense-oracle cap {FOCK_DIM_CAP}"
        )));
    }
    let scale_vec: Vec<f64> = match scale {
        Some(s) => {
            if s.len() != n {
                return Err(QmeError::InvalidSpec(format!(
                    "expected {n} scale entries, got {}",
                    s.len()
                )));
            }
            if s.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(QmeError::InvalidSpec(
                    "Fock ladder scales must be positive and finite".into(),
                ));
            }
            s.to_vec()
        }
        None => (0..n)
            .map(|i| {
                let hq = spec.hessian[(i, i)];
                let hp = spec.hessian[(n + i, n + i)];
                if hq > 1e-9 && hp > 1e-9 {
                    (hq / hp).sqrt()
                } else {
                    1.0
                }
            })
            .collect(),
    };
    let mut q_ops = Vec::with_capacity(n);
    let mut p_ops = Vec::with_capacity(n);
    for i in 0..n {
        let (q, p) = mode_ladder(trunc[i], spec.hbar, scale_vec[i]);
        q_ops.push(embed(&q, trunc, i));
        p_ops.push(embed(&p, trunc, i));
    }
    let identity = CMat::identity(dim, dim);
    let mut shifted: Vec<CMat> = Vec::with_capacity(2 * n);
    for j in 0..2 * n {
        let op = if j < n { &q_ops[j] } else { &p_ops[j - n] };
        shifted.push(op - &identity * C64::new(spec.xi[j], 0.0));
    }
    let mut hamiltonian = &identity * C64::new(spec.phi, 0.0);
    let mut tmp = CMat::zeros(dim, dim);
    for j in 0..2 * n {
        for k in 0..2 * n {
            let w = 0.5 * spec.hessian[(j, k)];
            if w != 0.0 {
                gemm_into(
                    C64::new(w, 0.0),
                    &shifted[j],
                    &shifted[k],
                    ZERO,
                    &mut tmp,
                );
                hamiltonian += &tmp;
            }
        }
    }
    Ok(FockRep {
        spec: spec.clone(),
        n_modes: n,
        trunc: trunc.to_vec(),
        scale: scale_vec,
        dim,
        hbar: spec.hbar,
        q_ops,
        p_ops,
        hamiltonian,
        identity,
    })
}

/// Multi-indices whose digit in every mode stays below `keep[i]`, as flat
/// indices into the `full` tensor-product basis (mode 0 slowest).
pub fn restricted_indices(full: &[usize], keep: &[usize]) -> Vec<usize> {
    assert_eq!(full.len(), keep.len());
    let mut out = vec![0usize];
    for (&f, &k) in full.iter().zip(keep.iter()) {
        assert!(k <= f, "restriction must not exceed the full truncation");
        let mut next = Vec::with_capacity(out.len() * k);
        for &b in &out {
            for d in 0..k {
                next.push(b * f + d);
            }
        }
        out = next;
    }
    out
}

/// Square submatrix on a row/column index subset.
fn select(a: &CMat, keep: &[usize]) -> CMat {
    CMat::from_fn(keep.len(), keep.len(), |i, j| a[(keep[i], keep[j])])
}

/// A generator in factored form: `L(rho) = sum_t c_t A_t rho B_t`.
#[derive(Debug, Clone)]
pub struct Superoperator {
    /// Which construction produced the terms.
    pub source: Source,
    /// Hilbert-space dimension the factors act on.
    pub dim: usize,
    /// Planck constant used in the coefficients.
    pub hbar: f64,
    /// Terms `(c, A, B)` meaning `c * A rho B`.
    pub terms: Vec<(C64, CMat, CMat)>,
}

impl Superoperator {
    /// Apply the generator to a density matrix.
    pub fn apply(&self, rho: &CMat) -> CMat {
        let d = self.dim;
        let mut out = CMat::zeros(d, d);
        let mut tmp = CMat::zeros(d, d);
        for (c, a, b) in &self.terms {
            gemm_into(ONE, a, rho, ZERO, &mut tmp);
            gemm_into(*c, &tmp, b, ONE, &mut out);
        }
        out
    }

    /// Dense matrix on column-major vectorized density matrices,
    /// `sum_t c_t kron(B_t^T, A_t)`. Guarded by [`MATERIALIZE_DIM_CAP`].
    pub fn materialize(&self) -> Result<CMat, QmeError> {
        if self.dim > MATERIALIZE_DIM_CAP {
            return Err(QmeError::BudgetExceeded(format!(
                "materializing a dim-{} generator needs {}^4 complex entries; cap is {MATERIALIZE_DIM_CAP}",
                self.dim, self.dim
            )));
        }
        let keep: Vec<usize> = (0..self.dim).collect();
        Ok(self.materialize_restricted(&keep))
    }

    /// Dense matrix of the generator compressed onto the span of a basis
    /// subset: rows and columns of every factor are restricted to `keep`
    /// before the Kronecker assembly.
    pub fn materialize_restricted(&self, keep: &[usize]) -> CMat {
        let m = keep.len();
        let mut out = CMat::zeros(m * m, m * m);
        for (c, a, b) in &self.terms {
            let ac = select(a, keep);
            let bc = select(b, keep);
            for j in 0..m {
                for l in 0..m {
                    let w = *c * bc[(l, j)];
                    if w.re == 0.0 && w.im == 0.0 {
                        continue;
                    }
                    for k in 0..m {
                        let col = k + m * l;
                        for i in 0..m {
                            out[(i + m * j, col)] += w * ac[(i, k)];
                        }
                    }
                }
            }
        }
        out
    }

    /// Frobenius norm of `sum_t c_t B_t A_t`; zero exactly when the
    /// generator annihilates the trace.
    pub fn trace_preservation_residual(&self) -> f64 {
        let d = self.dim;
        let mut acc = CMat::zeros(d, d);
        for (c, a, b) in &self.terms {
            gemm_into(*c, b, a, ONE, &mut acc);
        }
        frob(&acc)
    }
}

/// Representation used internally by the padded builders: either the
/// caller's own, or a larger one with a cut list back to the caller's basis.
struct BuildRep {
    rep: FockRep,
    keep: Option<Vec<usize>>,
}

fn padded_rep(f: &FockRep, pad: usize) -> Result<BuildRep, QmeError> {
    if pad == 0 {
        return Ok(BuildRep {
            rep: f.clone(),
            keep: None,
        });
    }
    let tp: Vec<usize> = f.trunc.iter().map(|t| t + pad).collect();
    let rep = build_fock(&f.spec, &tp, Some(&f.scale))?;
    let keep = restricted_indices(&tp, &f.trunc);
    Ok(BuildRep {
        rep,
        keep: Some(keep),
    })
}

impl BuildRep {
    fn cut(&self, m: &CMat) -> CMat {
        match &self.keep {
            None => m.clone(),
            Some(k) => select(m, k),
        }
    }
}

/// Commutator terms `(i/hbar)(rho H - H rho)` with an already-cut factor.
fn commutator_terms(hbar: f64, ident: &CMat, ham_cut: &CMat) -> Vec<(C64, CMat, CMat)> {
    vec![
        (C64::new(0.0, 1.0 / hbar), ident.clone(), ham_cut.clone()),
        (C64::new(0.0, -1.0 / hbar), ham_cut.clone(), ident.clone()),
    ]
}

/// Build the generator by operator-exponential conjugation: for every
/// nonzero diagonal coupling `K_jj` the conjugated operator
/// `y_j = e^{beta_j H/2} x_j e^{-beta_j H/2}` is formed by Hermitian
/// eigendecomposition and the dissipator is assembled from the four factor
/// pairs it produces. `pad` extra levels per mode absorb edge effects of
/// the (non-banded) conjugation; factors are built padded, products are
/// formed padded, and everything is cut back to `f`'s basis.
pub fn generator_direct(f: &FockRep, pad: usize) -> Result<Superoperator, QmeError> {
    let spec = &f.spec;
    let cm = coupling_matrices(spec)?;
    let n = spec.n;
    let b = padded_rep(f, pad)?;
    let ident = CMat::identity(f.dim, f.dim);
    let mut terms = commutator_terms(spec.hbar, &ident, &b.cut(&b.rep.hamiltonian));
    let (e, v) = herm_eigen(&b.rep.hamiltonian);
    let vh = v.adjoint();
    for j in 0..2 * n {
        let kjj = cm.k[(j, j)];
        if kjj == 0.0 {
            continue;
        }
        let beta_j = spec.baths[j % n].beta;
        let spread = 0.5 * beta_j * (e.max() - e.min());
        if spread > 700.0 {
            return Err(QmeError::Overflow(spread));
        }
        let x = b.rep.x_op(j);
        // y = V (exp(beta/2 (E_a - E_b)) .* (V^dag x V)) V^dag
        let xe = &vh * x * &v;
        let ye = CMat::from_fn(b.rep.dim, b.rep.dim, |a_i, b_i| {
            xe[(a_i, b_i)] * (0.5 * beta_j * (e[a_i] - e[b_i])).exp()
        });
        let y = &v * ye * &vh;
        let yd = y.adjoint();
        let c = C64::new(-kjj / spec.hbar, 0.0);
        terms.push((c, ident.clone(), b.cut(&(&y * x))));
        terms.push((c, b.cut(&(x * &yd)), ident.clone()));
        terms.push((-c, b.cut(x), b.cut(&y)));
        terms.push((-c, b.cut(&yd), b.cut(x)));
    }
    Ok(Superoperator {
        source: Source::DirectConjugation,
        dim: f.dim,
        hbar: spec.hbar,
        terms,
    })
}

/// Build the generator from the quadratic coefficient matrix `Xi` and
/// displacement `eta`. Same padding protocol as [`generator_direct`].
pub fn generator_quadratic(
    f: &FockRep,
    xi: &CMat,
    eta: &RVec,
    pad: usize,
) -> Result<Superoperator, QmeError> {
    let spec = &f.spec;
    let twon = 2 * spec.n;
    if xi.nrows() != twon || xi.ncols() != twon || eta.len() != twon {
        return Err(QmeError::InvalidSpec(format!(
            "coefficient matrix must be {twon}x{twon} and the displacement length {twon}"
        )));
    }
    let b = padded_rep(f, pad)?;
    let ident = CMat::identity(f.dim, f.dim);
    let mut terms = commutator_terms(spec.hbar, &ident, &b.cut(&b.rep.hamiltonian));
    let big_i = CMat::identity(b.rep.dim, b.rep.dim);
    let xs: Vec<CMat> = (0..twon)
        .map(|j| b.rep.x_op(j) - &big_i * C64::new(eta[j], 0.0))
        .collect();
    let xs_cut: Vec<CMat> = xs.iter().map(|x| b.cut(x)).collect();
    for j in 0..twon {
        for k in 0..twon {
            let xx = b.cut(&(&xs[j] * &xs[k]));
            let xih_jk = xi[(j, k)] + xi[(k, j)].conj();
            terms.push((-xi[(k, j)] / spec.hbar, ident.clone(), xx.clone()));
            terms.push((xih_jk / spec.hbar, xs_cut[j].clone(), xs_cut[k].clone()));
            terms.push((-xi[(j, k)].conj() / spec.hbar, xx, ident.clone()));
        }
    }
    Ok(Superoperator {
        source: Source::Quadratic,
        dim: f.dim,
        hbar: spec.hbar,
        terms,
    })
}

/// Build the first-order high-temperature generator: for every nonzero
/// `K_ii`, the zeroth-order double-commutator piece plus the first-order
/// correction `(beta_i K_ii / 2 hbar) [{rho, [x_i, H]}, x_i]`. Relative to
/// the conjugation build its defect shrinks quadratically in `beta`.
pub fn generator_high_temperature(f: &FockRep) -> Result<Superoperator, QmeError> {
    let spec = &f.spec;
    let cm = coupling_matrices(spec)?;
    let n = spec.n;
    let ident = CMat::identity(f.dim, f.dim);
    let mut terms = commutator_terms(spec.hbar, &ident, &f.hamiltonian);
    for i in 0..2 * n {
        let kii = cm.k[(i, i)];
        if kii == 0.0 {
            continue;
        }
        let beta_i = spec.baths[i % n].beta;
        let x = f.x_op(i);
        let xx = x * x;
        let c0 = C64::new(-kii / spec.hbar, 0.0);
        terms.push((c0, ident.clone(), xx.clone()));
        terms.push((c0, xx, ident.clone()));
        terms.push((-2.0 * c0, x.clone(), x.clone()));
        let ci = x * &f.hamiltonian - &f.hamiltonian * x;
        let c1 = C64::new(beta_i * kii / (2.0 * spec.hbar), 0.0);
        terms.push((c1, ident.clone(), &ci * x));
        terms.push((c1, ci.clone(), x.clone()));
        terms.push((-c1, x.clone(), ci.clone()));
        terms.push((-c1, x * &ci, ident.clone()));
    }
    Ok(Superoperator {
        source: Source::HighTemperature,
        dim: f.dim,
        hbar: spec.hbar,
        terms,
    })
}

/// Jump channels `(rate, L)` of the two-channel damped-oscillator form for
/// a single diagonal mode: `(2 gamma_tilde (nbar + 1), a)` and
/// `(2 gamma_tilde nbar, a^dag)`.
pub fn optics_channels(f: &FockRep, gamma_tilde: f64) -> Result<Vec<(f64, CMat)>, QmeError> {
    let spec = &f.spec;
    if spec.n != 1 {
        return Err(QmeError::Unsupported(
            "the two-channel oscillator build is single-mode".into(),
        ));
    }
    let h = &spec.hessian;
    let hn = h.norm();
    if h[(0, 1)].abs() > 1e-12 * hn.max(1.0) || h[(0, 0)] <= 0.0 || h[(1, 1)] <= 0.0 {
        return Err(QmeError::Unsupported(
            "the two-channel oscillator build needs a diagonal positive Hessian".into(),
        ));
    }
    let omega = (h[(0, 0)] * h[(1, 1)]).sqrt();
    let s_phys = (h[(0, 0)] / h[(1, 1)]).sqrt();
    let beta = spec.uniform_beta()?;
    let nbar = 1.0 / (beta * spec.hbar * omega).exp_m1();
    let a = &f.q_ops[0] * C64::new((s_phys / (2.0 * spec.hbar)).sqrt(), 0.0)
        + &f.p_ops[0] * C64::new(0.0, 1.0 / (2.0 * spec.hbar * s_phys).sqrt());
    let gamma_big = 2.0 * gamma_tilde;
    Ok(vec![
        (gamma_big * (nbar + 1.0), a.clone()),
        (gamma_big * nbar, a.adjoint()),
    ])
}

/// Dissipator-only generator `sum_mu rate_mu (L rho L^dag - 1/2 {L^dag L, rho})`
/// from explicit jump channels. Rates may be negative (conditionally
/// positive builds); the trace is annihilated term by term regardless.
pub fn dissipator_from_channels(
    f: &FockRep,
    channels: &[(f64, CMat)],
    source: Source,
) -> Superoperator {
    let ident = CMat::identity(f.dim, f.dim);
    let mut terms = Vec::with_capacity(3 * channels.len());
    for (rate, l) in channels {
        let ld = l.adjoint();
        let ll = &ld * l;
        let r = C64::new(*rate, 0.0);
        terms.push((r, l.clone(), ld));
        terms.push((-0.5 * r, ll.clone(), ident.clone()));
        terms.push((-0.5 * r, ident.clone(), ll));
    }
    Superoperator {
        source,
        dim: f.dim,
        hbar: f.hbar,
        terms,
    }
}

/// Full two-channel damped-oscillator generator: commutator plus
/// [`dissipator_from_channels`] over [`optics_channels`].
pub fn generator_optics(f: &FockRep, gamma_tilde: f64) -> Result<Superoperator, QmeError> {
    let channels = optics_channels(f, gamma_tilde)?;
    let mut g = dissipator_from_channels(f, &channels, Source::Optics);
    let ident = CMat::identity(f.dim, f.dim);
    let mut terms = commutator_terms(f.hbar, &ident, &f.hamiltonian);
    terms.append(&mut g.terms);
    g.terms = terms;
    Ok(g)
}

/// Dissipator-only generator of an extracted jump-vector set:
/// `(1/hbar) sum_mu g_mu (L_mu rho L_mu^dag - 1/2 {L_mu^dag L_mu, rho})`
/// with `L_mu = lambda_mu . (x - eta)`.
pub fn lindblad_dissipator(f: &FockRep, ls: &LindbladSet) -> Superoperator {
    let twon = 2 * f.n_modes;
    let ident = CMat::identity(f.dim, f.dim);
    let xs: Vec<CMat> = (0..twon)
        .map(|j| f.x_op(j) - &ident * C64::new(ls.eta[j], 0.0))
        .collect();
    let channels: Vec<(f64, CMat)> = ls
        .lambdas
        .iter()
        .zip(ls.signs.iter())
        .map(|(lam, g)| {
            let mut l = CMat::zeros(f.dim, f.dim);
            for j in 0..twon {
                l += &xs[j] * lam[j];
            }
            (g / f.hbar, l)
        })
        .collect();
    dissipator_from_channels(f, &channels, Source::Quadratic)
}

/// Thermal state `e^{-beta H} / Z` by Hermitian eigendecomposition.
pub fn thermal_state(f: &FockRep, beta: f64) -> CMat {
    let (e, v) = herm_eigen(&f.hamiltonian);
    let e0 = e.min();
    let w: Vec<f64> = e.iter().map(|&x| (-beta * (x - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    let d = CMat::from_fn(f.dim, f.dim, |i, j| {
        if i == j {
            C64::new(w[i] / z, 0.0)
        } else {
            ZERO
        }
    });
    &v * d * v.adjoint()
}

/// Single-mode coherent-state amplitude vector (normalized on the
/// truncated space).
pub fn coherent_vector(nlev: usize, alpha: C64) -> CVec {
    let mut c = CVec::zeros(nlev);
    c[0] = ONE;
    for k in 0..nlev - 1 {
        c[k + 1] = c[k] * alpha / ((k + 1) as f64).sqrt();
    }
    let norm = c.norm();
    c / C64::new(norm, 0.0)
}

/// Single-mode squeezed-vacuum amplitude vector; `phi = 0` squeezes the
/// mode's `q` quadrature by `e^{-2r}` (normalized on the truncated space).
pub fn squeezed_vacuum_vector(nlev: usize, r: f64, phi: f64) -> CVec {
    let mut c = CVec::zeros(nlev);
    c[0] = ONE;
    let factor = -Complex::from_polar(r.tanh(), phi);
    let mut k = 0usize;
    while 2 * k + 2 < nlev {
        let num = ((2 * k + 1) as f64 * (2 * k + 2) as f64).sqrt();
        c[2 * k + 2] = c[2 * k] * factor * C64::new(num / (2.0 * (k + 1) as f64), 0.0);
        k += 1;
    }
    let norm = c.norm();
    c / C64::new(norm, 0.0)
}

/// Pure product state `|v_1 x ... x v_n><...|` from per-mode amplitude
/// vectors (mode 0 leftmost).
pub fn product_state(f: &FockRep, mode_vectors: &[CVec]) -> Result<CMat, QmeError> {
    if mode_vectors.len() != f.n_modes {
        return Err(QmeError::InvalidSpec(format!(
            "expected {} mode vectors, got {}",
            f.n_modes,
            mode_vectors.len()
        )));
    }
    for (v, &t) in mode_vectors.iter().zip(f.trunc.iter()) {
        if v.len() != t {
            return Err(QmeError::InvalidSpec(
                "mode vector length must match the mode truncation".into(),
            ));
        }
    }
    let mut v = mode_vectors[0].clone();
    for w in &mode_vectors[1..] {
        let mut out = CVec::zeros(v.len() * w.len());
        for (i, &vi) in v.iter().enumerate() {
            for (j, &wj) in w.iter().enumerate() {
                out[i * w.len() + j] = vi * wj;
            }
        }
        v = out;
    }
    let norm = v.norm();
    if norm == 0.0 {
        return Err(QmeError::InvalidSpec("zero state vector".into()));
    }
    v /= C64::new(norm, 0.0);
    Ok(CMat::from_fn(f.dim, f.dim, |i, j| v[i] * v[j].conj()))
}

/// First and symmetrized second moments of a density matrix:
/// `mean_j = Re tr(rho x_j)`, `cov_jk = Re tr(rho x_j x_k) - mean_j mean_k`.
pub fn moments(f: &FockRep, rho: &CMat) -> (RVec, RMat) {
    let twon = 2 * f.n_modes;
    let d = f.dim;
    let mut mean = RVec::zeros(twon);
    let mut prods: Vec<CMat> = Vec::with_capacity(twon);
    let mut tmp = CMat::zeros(d, d);
    for j in 0..twon {
        gemm_into(ONE, rho, f.x_op(j), ZERO, &mut tmp);
        let mut tr = ZERO;
        for i in 0..d {
            tr += tmp[(i, i)];
        }
        mean[j] = tr.re;
        prods.push(tmp.clone());
    }
    let mut cov = RMat::zeros(twon, twon);
    for j in 0..twon {
        for k in j..twon {
            // tr(rho x_j x_k) = sum_ab (rho x_j)_ab (x_k)_ba
            let xk = f.x_op(k);
            let mut t = ZERO;
            for a in 0..d {
                for bq in 0..d {
                    t += prods[j][(a, bq)] * xk[(bq, a)];
                }
            }
            let val = t.re - mean[j] * mean[k];
            cov[(j, k)] = val;
            cov[(k, j)] = val;
        }
    }
    (mean, cov)
}

/// Total population on basis states whose occupation in any mode lies in
/// that mode's top two levels.
pub fn edge_occupation(f: &FockRep, rho: &CMat) -> f64 {
    let mut occ = 0.0;
    for idx in 0..f.dim {
        let mut rem = idx;
        let mut edge = false;
        for i in (0..f.n_modes).rev() {
            let digit = rem % f.trunc[i];
            rem /= f.trunc[i];
            if digit + 2 >= f.trunc[i] {
                edge = true;
            }
        }
        if edge {
            occ += rho[(idx, idx)].re;
        }
    }
    occ
}

/// State diagnostics recorded along a trajectory.
#[derive(Debug, Clone)]
pub struct DensitySnapshot {
    /// Time of the snapshot.
    pub time: f64,
    /// Density matrix (Hermitized, not renormalized).
    pub rho: CMat,
    /// `|tr rho - 1|`.
    pub trace_drift: f64,
    /// Smallest eigenvalue of `rho`.
    pub min_eigenvalue: f64,
    /// First moments.
    pub mean: RVec,
    /// Symmetrized second moments.
    pub cov: RMat,
    /// Population of the top two levels of any mode.
    pub edge_occupation: f64,
}

fn check_initial_state(rho0: &CMat, dim: usize) -> Result<(), QmeError> {
    if rho0.nrows() != dim || rho0.ncols() != dim {
        return Err(QmeError::InvalidSpec(
            "initial state dimension mismatch".into(),
        ));
    }
    let herm = frob(&(rho0 - rho0.adjoint()));
    if herm > 1e-10 {
        return Err(QmeError::ConstraintViolation {
            kind: "initial state Hermiticity".into(),
            residual: herm,
            tol: 1e-10,
        });
    }
    let tr: C64 = (0..dim).map(|i| rho0[(i, i)]).sum();
    if (tr - ONE).norm() > 1e-10 {
        return Err(QmeError::ConstraintViolation {
            kind: "initial state trace".into(),
            residual: (tr - ONE).norm(),
            tol: 1e-10,
        });
    }
    let min_eig = eigvalsh(rho0).min();
    if min_eig < -1e-10 {
        return Err(QmeError::ConstraintViolation {
            kind: "initial state positivity".into(),
            residual: -min_eig,
            tol: 1e-10,
        });
    }
    Ok(())
}

fn snapshot(f: &FockRep, time: f64, rho: CMat) -> Result<DensitySnapshot, QmeError> {
    let tr: C64 = (0..f.dim).map(|i| rho[(i, i)]).sum();
    let trace_drift = (tr - ONE).norm();
    let min_eigenvalue = eigvalsh(&rho).min();
    let (mean, cov) = moments(f, &rho);
    let occ = edge_occupation(f, &rho);
    if occ > TRUNCATION_OCCUPATION_TOL {
        return Err(QmeError::TruncationBreach {
            occupation: occ,
            tol: TRUNCATION_OCCUPATION_TOL,
            time,
        });
    }
    Ok(DensitySnapshot {
        time,
        rho,
        trace_drift,
        min_eigenvalue,
        mean,
        cov,
        edge_occupation: occ,
    })
}

/// Integrate `d rho / dt = L(rho)` by dense matrix-exponential stepping on
/// the vectorized state (the propagator over one grid gap is cached and
/// reused while consecutive gaps agree). The state is Hermitized after
/// every step; snapshots record trace drift, the minimum eigenvalue,
/// moments, and edge occupation, and a
/// [`QmeError::TruncationBreach`] aborts the run when the top two levels
/// of any mode accumulate more than [`TRUNCATION_OCCUPATION_TOL`].
pub fn evolve_density(
    g: &Superoperator,
    f: &FockRep,
    rho0: &CMat,
    t_grid: &[f64],
) -> Result<Vec<DensitySnapshot>, QmeError> {
    if t_grid.is_empty() {
        return Err(QmeError::InvalidSpec("empty time grid".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(QmeError::InvalidSpec(
            "time grid must be strictly increasing".into(),
        ));
    }
    check_initial_state(rho0, f.dim)?;
    let l = g.materialize()?;
    let mut snaps = Vec::with_capacity(t_grid.len());
    snaps.push(snapshot(f, t_grid[0], rho0.clone())?);
    let mut state = vec_col(rho0);
    let mut cached: Option<(f64, CMat)> = None;
    for w in t_grid.windows(2) {
        let dt = w[1] - w[0];
        let reuse = cached
            .as_ref()
            .map(|(d, _)| (d - dt).abs() <= 1e-12 * dt.abs())
            .unwrap_or(false);
        if !reuse {
            let prop = expm(&(&l * C64::new(dt, 0.0)));
            cached = Some((dt, prop));
        }
        let (_, prop) = cached.as_ref().unwrap();
        state = prop * &state;
        let mut rho = unvec(&state, f.dim);
        rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
        state = vec_col(&rho);
        snaps.push(snapshot(f, w[1], rho)?);
    }
    Ok(snaps)
}

/// Integrate the quadratic generator in the interaction picture: with
/// `R(t) = e^{J H t}` the dissipator coefficients rotate as
/// `Xi'(t) = R(t)^T Xi R(t)` while the operators stay fixed, and the state
/// is rotated back to the lab frame at every snapshot. Classical RK4 with
/// `substeps` stages per grid gap; no dense superoperator is ever formed,
/// so this is the two-mode path.
pub fn evolve_density_interaction(
    f: &FockRep,
    xi: &CMat,
    eta: &RVec,
    rho0: &CMat,
    t_grid: &[f64],
    substeps: usize,
) -> Result<Vec<DensitySnapshot>, QmeError> {
    if t_grid.is_empty() {
        return Err(QmeError::InvalidSpec("empty time grid".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(QmeError::InvalidSpec(
            "time grid must be strictly increasing".into(),
        ));
    }
    if substeps == 0 {
        return Err(QmeError::InvalidSpec(
            "need at least one substep per grid gap".into(),
        ));
    }
    check_initial_state(rho0, f.dim)?;
    let spec = &f.spec;
    let twon = 2 * spec.n;
    if xi.nrows() != twon || eta.len() != twon {
        return Err(QmeError::InvalidSpec(
            "coefficient matrix / displacement dimension mismatch".into(),
        ));
    }
    let jh = symplectic_form(spec.n) * &spec.hessian;
    let (eh, vh) = herm_eigen(&f.hamiltonian);
    let vhd = vh.adjoint();
    let rotate_back = |rho_ia: &CMat, t: f64| -> CMat {
        // rho_lab = U rho_IA U^dag, U = e^{-i H t / hbar}
        let phase = CMat::from_fn(f.dim, f.dim, |i, j| {
            if i == j {
                Complex::from_polar(1.0, -eh[i] * t / f.hbar)
            } else {
                ZERO
            }
        });
        let u = &vh * phase * &vhd;
        &u * rho_ia * u.adjoint()
    };
    let ident = CMat::identity(f.dim, f.dim);
    let xs: Vec<CMat> = (0..twon)
        .map(|j| f.x_op(j) - &ident * C64::new(eta[j], 0.0))
        .collect();
    // products P_jk = X_j X_k, flattened row-major over (j, k)
    let prods: Vec<CMat> = (0..twon)
        .flat_map(|j| (0..twon).map(move |k| (j, k)))
        .map(|(j, k)| &xs[j] * &xs[k])
        .collect();
    let stage_matrices = |xi_t: &CMat| -> (CMat, CMat, Vec<CMat>) {
        let d = f.dim;
        let mut m1 = CMat::zeros(d, d);
        let mut m3 = CMat::zeros(d, d);
        for j in 0..twon {
            for k in 0..twon {
                let p = &prods[j * twon + k];
                m1 += p * (-xi_t[(k, j)] / f.hbar);
                m3 += p * (-xi_t[(j, k)].conj() / f.hbar);
            }
        }
        let ys: Vec<CMat> = (0..twon)
            .map(|j| {
                let mut y = CMat::zeros(d, d);
                for k in 0..twon {
                    let c = (xi_t[(j, k)] + xi_t[(k, j)].conj()) / f.hbar;
                    y += &xs[k] * c;
                }
                y
            })
            .collect();
        (m1, m3, ys)
    };
    let apply_stage = |rho: &CMat, mats: &(CMat, CMat, Vec<CMat>)| -> CMat {
        let (m1, m3, ys) = mats;
        let d = f.dim;
        let mut out = CMat::zeros(d, d);
        gemm_into(ONE, rho, m1, ONE, &mut out);
        gemm_into(ONE, m3, rho, ONE, &mut out);
        let mut tmp = CMat::zeros(d, d);
        for (x_j, y_j) in xs.iter().zip(ys.iter()) {
            gemm_into(ONE, rho, y_j, ZERO, &mut tmp);
            gemm_into(ONE, x_j, &tmp, ONE, &mut out);
        }
        out
    };
    let rotated_xi = |t: f64| -> CMat {
        let r = crate::linalg::complexify(&expm_real(&(&jh * t)));
        r.transpose() * xi * r
    };
    let mut snaps = Vec::with_capacity(t_grid.len());
    snaps.push(snapshot(f, t_grid[0], rho0.clone())?);
    let mut rho_ia = rho0.clone();
    let t0 = t_grid[0];
    // the interaction frame is anchored at t_grid[0]
    for w in t_grid.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        for s in 0..substeps {
            let t = w[0] + s as f64 * h - t0;
            let mats0 = stage_matrices(&rotated_xi(t));
            let mats1 = stage_matrices(&rotated_xi(t + 0.5 * h));
            let mats2 = stage_matrices(&rotated_xi(t + h));
            let k1 = apply_stage(&rho_ia, &mats0);
            let k2 = apply_stage(&(&rho_ia + &k1 * C64::new(0.5 * h, 0.0)), &mats1);
            let k3 = apply_stage(&(&rho_ia + &k2 * C64::new(0.5 * h, 0.0)), &mats1);
            let k4 = apply_stage(&(&rho_ia + &k3 * C64::new(h, 0.0)), &mats2);
            let two = C64::new(2.0, 0.0);
            rho_ia += (k1 + k2 * two + k3 * two + k4) * C64::new(h / 6.0, 0.0);
        }
        rho_ia = (&rho_ia + rho_ia.adjoint()) * C64::new(0.5, 0.0);
        let rho_lab = rotate_back(&rho_ia, w[1] - t0);
        snaps.push(snapshot(f, w[1], rho_lab)?);
    }
    Ok(snaps)
}

/// One sampled point of a moment trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct MomentSample {
    /// Sample time.
    pub time: f64,
    /// First moments.
    pub mean: Vec<f64>,
    /// Symmetrized covariance, row-major.
    pub cov: Vec<Vec<f64>>,
}

/// Oracle run summary for serialization.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    /// Which construction generated the run.
    pub source: String,
    /// Levels kept per mode.
    #[serde(rename = "N")]
    pub truncation: Vec<usize>,
    /// Ladder scale per mode.
    pub scale: Vec<f64>,
    /// Largest `|tr rho - 1|` along the trajectory.
    pub trace_drift: f64,
    /// Smallest density-matrix eigenvalue along the trajectory.
    pub min_rho_eigenvalue: f64,
    /// Moment samples along the trajectory.
    pub moment_series: Vec<MomentSample>,
}

/// Summarize a trajectory for the oracle report JSON.
pub fn oracle_report(source: Source, f: &FockRep, snaps: &[DensitySnapshot]) -> OracleReport {
    let trace_drift = snaps.iter().map(|s| s.trace_drift).fold(0.0, f64::max);
    let min_rho_eigenvalue = snaps
        .iter()
        .map(|s| s.min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    let moment_series = snaps
        .iter()
        .map(|s| MomentSample {
            time: s.time,
            mean: s.mean.iter().copied().collect(),
            cov: (0..s.cov.nrows())
                .map(|i| (0..s.cov.ncols()).map(|j| s.cov[(i, j)]).collect())
                .collect(),
        })
        .collect();
    OracleReport {
        source: source.to_string(),
        truncation: f.trunc.clone(),
        scale: f.scale.clone(),
        trace_drift,
        min_rho_eigenvalue,
        moment_series,
    }
}
