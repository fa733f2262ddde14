//! Dense complex/real linear algebra kernels used across the library:
//! fast complex matrix multiplication, Pade scaling-and-squaring matrix
//! exponential, Hermitian eigendecomposition wrappers, Williamson normal
//! form, Lyapunov solves, and pseudo-inverse least squares.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::QmeError;

/// Complex scalar used throughout.
pub type C64 = Complex64;
/// Dense complex matrix.
pub type CMat = DMatrix<C64>;
/// Dense complex vector.
pub type CVec = DVector<C64>;
/// Dense real matrix.
pub type RMat = DMatrix<f64>;
/// Dense real vector.
pub type RVec = DVector<f64>;

/// `1i` as a complex scalar.
pub const IM: C64 = C64::new(0.0, 1.0);
/// `1` as a complex scalar.
pub const ONE: C64 = C64::new(1.0, 0.0);
/// `0` as a complex scalar.
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// In-place complex GEMM: `c = alpha * a * b + beta * c`.
///
/// Uses the blocked SIMD kernel from `matrixmultiply`; nalgebra's own
/// `Complex64` products fall back to a scalar loop, which is too slow for
/// the dense superoperator exponentials.
pub fn gemm_into(alpha: C64, a: &CMat, b: &CMat, beta: C64, c: &mut CMat) {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "inner dimensions must agree");
    assert_eq!(c.shape(), (m, n), "output shape must agree");
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    // nalgebra stores column-major: row stride 1, column stride = nrows.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [alpha.re, alpha.im],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [beta.re, beta.im],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
}

/// Complex matrix product `a * b` using the fast kernel.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let mut c = CMat::zeros(a.nrows(), b.ncols());
    gemm_into(ONE, a, b, ZERO, &mut c);
    c
}

/// Kronecker product of complex matrices.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let aij = a[(i, j)];
            if aij != ZERO {
                out.view_mut((i * br, j * bc), (br, bc))
                    .copy_from(&(b * aij));
            }
        }
    }
    out
}

/// Matrix 1-norm (maximum absolute column sum).
pub fn one_norm(a: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Frobenius norm of a complex matrix.
pub fn frob(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate transpose.
pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint()
}

/// Promote a real matrix to complex.
pub fn complexify(a: &RMat) -> CMat {
    a.map(|x| C64::new(x, 0.0))
}

/// Real part of a complex matrix.
pub fn re_part(a: &CMat) -> RMat {
    a.map(|z| z.re)
}

/// Imaginary part of a complex matrix.
pub fn im_part(a: &CMat) -> RMat {
    a.map(|z| z.im)
}

const PADE13_B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const PADE13_THETA: f64 = 5.371920351148152;

/// Dense complex matrix exponential by degree-13 Pade approximation with
/// scaling and squaring.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    let norm = one_norm(a);
    let s = if norm > PADE13_THETA {
        ((norm / PADE13_THETA).log2().ceil() as i32).max(0)
    } else {
        0
    };
    let scale = C64::new((0.5f64).powi(s), 0.0);
    let a = a * scale;

    let ident = CMat::identity(n, n);
    let a2 = matmul(&a, &a);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a2, &a4);
    let b = &PADE13_B;

    // u = a * (a6*(b13 a6 + b11 a4 + b9 a2) + b7 a6 + b5 a4 + b3 a2 + b1 I)
    let w1 = &a6 * C64::new(b[13], 0.0) + &a4 * C64::new(b[11], 0.0) + &a2 * C64::new(b[9], 0.0);
    let w2 = matmul(&a6, &w1)
        + &a6 * C64::new(b[7], 0.0)
        + &a4 * C64::new(b[5], 0.0)
        + &a2 * C64::new(b[3], 0.0)
        + &ident * C64::new(b[1], 0.0);
    let u = matmul(&a, &w2);
    // v = a6*(b12 a6 + b10 a4 + b8 a2) + b6 a6 + b4 a4 + b2 a2 + b0 I
    let z1 = &a6 * C64::new(b[12], 0.0) + &a4 * C64::new(b[10], 0.0) + &a2 * C64::new(b[8], 0.0);
    let v = matmul(&a6, &z1)
        + &a6 * C64::new(b[6], 0.0)
        + &a4 * C64::new(b[4], 0.0)
        + &a2 * C64::new(b[2], 0.0)
        + &ident * C64::new(b[0], 0.0);

    let lhs = &v - &u;
    let rhs = &v + &u;
    let lu = lhs.lu();
    let mut x = lu.solve(&rhs).expect("Pade denominator is singular");
    for _ in 0..s {
        x = matmul(&x, &x);
    }
    x
}

/// Real matrix exponential (promotes to complex internally).
pub fn expm_real(a: &RMat) -> RMat {
    re_part(&expm(&complexify(a)))
}

/// Eigendecomposition of a Hermitian complex matrix; eigenvalues ascending,
/// columns of the returned matrix are the matching orthonormal eigenvectors.
pub fn herm_eigen(a: &CMat) -> (RVec, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (RVec::zeros(0), CMat::zeros(0, 0));
    }
    let sym = na_hermitize(a);
    // The library eigensolver can leave a backward error several orders
    // above round-off on clustered spectra; its output only seeds a cyclic
    // Jacobi refinement that restores backward stability.
    let mut vecs = nalgebra::SymmetricEigen::new(sym.clone()).eigenvectors;
    let raw = jacobi_refine(&sym, &mut vecs);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| raw[i].partial_cmp(&raw[j]).expect("NaN eigenvalue"));
    let vals = RVec::from_iterator(n, idx.iter().map(|&i| raw[i]));
    let mut sorted = CMat::zeros(n, n);
    for (col, &i) in idx.iter().enumerate() {
        sorted.set_column(col, &vecs.column(i));
    }
    (vals, sorted)
}

/// Refine an approximate unitary eigenbasis `vecs` of the Hermitian matrix
/// `a` by cyclic complex Jacobi rotations applied to `vecs' * a * vecs`,
/// accumulating the rotations into `vecs`.  Returns the eigenvalues in
/// basis order (unsorted).  Convergence is quadratic, so a seed that is
/// already nearly diagonalizing finishes in one or two O(n^3) sweeps.
fn jacobi_refine(a: &CMat, vecs: &mut CMat) -> RVec {
    let n = a.nrows();
    let mut w = vecs.adjoint() * a * &*vecs;
    w = (&w + w.adjoint()) * C64::new(0.5, 0.0);
    let scale = frob(a).max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;
    for _ in 0..10 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += w[(p, q)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let beta = w[(p, q)];
                let r = beta.norm();
                if r <= 1e-18 * scale {
                    continue;
                }
                // Unitary 2x2 similarity G annihilating the (p, q) entry:
                // a phase turns the pivot real, then a real Jacobi rotation
                // with the stable small-angle tangent root clears it.
                let phase = beta / C64::new(r, 0.0);
                let alpha = w[(p, p)].re;
                let gamma = w[(q, q)].re;
                let tau = (gamma - alpha) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let g_pp = C64::new(c, 0.0);
                let g_pq = C64::new(s, 0.0);
                let g_qp = phase.conj() * (-s);
                let g_qq = phase.conj() * c;
                // Columns of W and of the accumulated basis: right-multiply
                // by G on the (p, q) plane.
                for i in 0..n {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = wp * g_pp + wq * g_qp;
                    w[(i, q)] = wp * g_pq + wq * g_qq;
                    let vp = vecs[(i, p)];
                    let vq = vecs[(i, q)];
                    vecs[(i, p)] = vp * g_pp + vq * g_qp;
                    vecs[(i, q)] = vp * g_pq + vq * g_qq;
                }
                // Rows of W: left-multiply by the adjoint of G.
                for j in 0..n {
                    let wp = w[(p, j)];
                    let wq = w[(q, j)];
                    w[(p, j)] = g_pp.conj() * wp + g_qp.conj() * wq;
                    w[(q, j)] = g_pq.conj() * wp + g_qq.conj() * wq;
                }
                w[(p, q)] = C64::new(0.0, 0.0);
                w[(q, p)] = C64::new(0.0, 0.0);
                w[(p, p)] = C64::new(w[(p, p)].re, 0.0);
                w[(q, q)] = C64::new(w[(q, q)].re, 0.0);
            }
        }
    }
    RVec::from_iterator(n, (0..n).map(|i| w[(i, i)].re))
}

/// Eigenvalues only of a Hermitian complex matrix, ascending.
pub fn eigvalsh(a: &CMat) -> RVec {
    herm_eigen(a).0
}

/// Eigendecomposition of a real symmetric matrix; ascending eigenvalues.
pub fn sym_eigen_real(a: &RMat) -> (RVec, RMat) {
    let n = a.nrows();
    if n == 0 {
        return (RVec::zeros(0), RMat::zeros(0, 0));
    }
    let sym = (a + a.transpose()) * 0.5;
    // Seed with the library solver and refine exactly as in `herm_eigen`;
    // a real seed keeps every Jacobi rotation real, so the accumulated
    // basis stays real and the imaginary parts are identically zero.
    let seed = nalgebra::SymmetricEigen::new(sym.clone()).eigenvectors;
    let mut cvecs = CMat::from_fn(n, n, |i, j| C64::new(seed[(i, j)], 0.0));
    let raw = jacobi_refine(&complexify(&sym), &mut cvecs);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| raw[i].partial_cmp(&raw[j]).expect("NaN eigenvalue"));
    let vals = RVec::from_iterator(n, idx.iter().map(|&i| raw[i]));
    let vecs = RMat::from_fn(n, n, |i, j| cvecs[(i, idx[j])].re);
    (vals, vecs)
}

fn na_hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Complex eigenvalues of a real matrix (via its real Schur form).
pub fn real_eigenvalues(a: &RMat) -> Vec<C64> {
    nalgebra::Schur::new(a.clone())
        .complex_eigenvalues()
        .iter()
        .map(|z| C64::new(z.re, z.im))
        .collect()
}

/// Williamson normal form of a positive-definite matrix on 2n-dimensional
/// phase space: returns `(S, nu)` with `H = S^T Diag(nu, nu) S`, `S` real
/// symplectic (`S J S^T = J`), and `nu` the positive symplectic eigenvalues
/// ordered per mode.
pub fn williamson(h: &RMat, j: &RMat) -> Result<(RMat, RVec), QmeError> {
    let dim = h.nrows();
    let n = dim / 2;
    let (vals, vecs) = sym_eigen_real(h);
    let min = vals[0];
    if min <= 0.0 {
        return Err(QmeError::NotPositiveDefinite(min));
    }
    let mut v12 = RMat::zeros(dim, dim);
    let mut vm12 = RMat::zeros(dim, dim);
    for k in 0..dim {
        let col = vecs.column(k);
        let outer = &col * col.transpose();
        v12 += &outer * vals[k].sqrt();
        vm12 += &outer * (1.0 / vals[k].sqrt());
    }
    let w = &vm12 * j * &vm12;
    // Real Schur form of the antisymmetric w is block-diagonal with
    // 2x2 blocks [[0, t], [-t, 0]]; |t| = 1/nu.
    let (mut q, t) = nalgebra::Schur::new(w).unpack();
    let mut nus = Vec::with_capacity(n);
    for k in 0..n {
        let tval = t[(2 * k, 2 * k + 1)];
        if tval.abs() < 1e-300 {
            return Err(QmeError::NotPositiveDefinite(0.0));
        }
        nus.push(1.0 / tval.abs());
        if tval < 0.0 {
            q.swap_columns(2 * k, 2 * k + 1);
        }
    }
    // Reorder interleaved (q1, p1, q2, p2, ...) columns into (q.., p..).
    let mut qp = RMat::zeros(dim, dim);
    for k in 0..n {
        qp.set_column(k, &q.column(2 * k));
        qp.set_column(n + k, &q.column(2 * k + 1));
    }
    let mut dinv = RMat::zeros(dim, dim);
    for k in 0..n {
        dinv[(k, k)] = 1.0 / nus[k].sqrt();
        dinv[(n + k, n + k)] = 1.0 / nus[k].sqrt();
    }
    let s_tilde = &v12 * &qp * &dinv; // H = s_tilde Diag(nu) s_tilde^T
    Ok((s_tilde.transpose(), RVec::from_vec(nus)))
}

/// Solve the continuous Lyapunov equation `A X + X A^T + Q = 0` for
/// symmetric `Q` by a dense Kronecker linearization (phase-space scale).
pub fn lyapunov_solve(a: &RMat, q: &RMat) -> RMat {
    let n = a.nrows();
    let mut big = RMat::zeros(n * n, n * n);
    // vec(AX) = (I (x) A) vec(X); vec(X A^T) = (A (x) I) vec(X)  [column-major vec]
    for col in 0..n {
        for row in 0..n {
            let val = a[(row, col)];
            if val != 0.0 {
                // I (x) A: block-diagonal copies of A
                for b in 0..n {
                    big[(b * n + row, b * n + col)] += val;
                }
                // A (x) I: scalar A[row, col] times identity block
                for d in 0..n {
                    big[(row * n + d, col * n + d)] += val;
                }
            }
        }
    }
    let mut rhs = RVec::zeros(n * n);
    for col in 0..n {
        for row in 0..n {
            rhs[col * n + row] = -q[(row, col)];
        }
    }
    let sol = big.lu().solve(&rhs).expect("Lyapunov system is singular");
    let mut x = RMat::zeros(n, n);
    for col in 0..n {
        for row in 0..n {
            x[(row, col)] = sol[col * n + row];
        }
    }
    // Symmetrize to kill roundoff asymmetry.
    (&x + x.transpose()) * 0.5
}

/// Minimum-norm least-squares solution of `M x = b` for real `M` (possibly
/// rank-deficient) via SVD. Returns `(x, residual_norm)`.
pub fn pseudo_solve(m: &RMat, b: &RVec, rank_tol: f64) -> (RVec, f64) {
    let svd = nalgebra::SVD::new(m.clone(), true, true);
    let u = svd.u.as_ref().expect("SVD U requested");
    let vt = svd.v_t.as_ref().expect("SVD V^T requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let cut = rank_tol * smax.max(1e-300);
    let mut y = RVec::zeros(vt.nrows());
    for k in 0..svd.singular_values.len() {
        let s = svd.singular_values[k];
        if s > cut {
            let proj = u.column(k).dot(b);
            y[k] = proj / s;
        }
    }
    let x = vt.transpose() * y;
    let residual = (m * &x - b).norm();
    (x, residual)
}

/// Column-major vectorization of a complex matrix.
pub fn vec_col(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

/// Inverse of [`vec_col`] for a square matrix of dimension `d`.
pub fn unvec(v: &CVec, d: usize) -> CMat {
    CMat::from_column_slice(d, d, v.as_slice())
}

/// Trace distance between Hermitian unit-trace matrices:
/// half the sum of absolute eigenvalues of the difference.
pub fn trace_distance(a: &CMat, b: &CMat) -> f64 {
    let diff = a - b;
    0.5 * eigvalsh(&diff).iter().map(|x| x.abs()).sum::<f64>()
}
