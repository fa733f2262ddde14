//! Capability and performance probes for the linear-algebra foundation.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use qme::linalg;
use std::time::Instant;

type CMat = DMatrix<C64>;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn gemm_known_product() {
    let a = CMat::from_row_slice(2, 2, &[c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0), c(1.0, 0.0)]);
    let b = CMat::from_row_slice(2, 2, &[c(0.0, 1.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let prod = linalg::matmul(&a, &b);
    let want = &a * &b;
    assert!(linalg::frob(&(&prod - &want)) < 1e-14);
}

#[test]
fn hermitian_eigen_known() {
    // Pauli-y-like matrix: eigenvalues -1, +1.
    let m = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
    let (vals, vecs) = linalg::herm_eigen(&m);
    assert!((vals[0] + 1.0).abs() < 1e-14);
    assert!((vals[1] - 1.0).abs() < 1e-14);
    let recon = &vecs
        * CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            2,
            vals.iter().map(|&x| c(x, 0.0)),
        ))
        * vecs.adjoint();
    assert!(linalg::frob(&(&recon - &m)) < 1e-12);
}

#[test]
fn expm_rotation() {
    // exp of [[0, t], [-t, 0]] is a rotation matrix.
    let t = 0.7f64;
    let m = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(t, 0.0), c(-t, 0.0), c(0.0, 0.0)]);
    let e = linalg::expm(&m);
    assert!((e[(0, 0)].re - t.cos()).abs() < 1e-14);
    assert!((e[(0, 1)].re - t.sin()).abs() < 1e-14);
    // scaling-and-squaring branch with a large argument
    let big = &m * c(100.0, 0.0);
    let eb = linalg::expm(&big);
    assert!((eb[(0, 0)].re - (100.0 * t).cos()).abs() < 1e-9);
}

#[test]
fn schur_antisymmetric_blocks() {
    let w = DMatrix::<f64>::from_row_slice(
        4,
        4,
        &[
            0.0, 0.3, 0.0, 0.0, //
            -0.3, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, -0.9, //
            0.0, 0.0, 0.9, 0.0,
        ],
    );
    let (q, t) = nalgebra::Schur::new(w.clone()).unpack();
    let recon = &q * &t * q.transpose();
    assert!((recon - &w).norm() < 1e-12);
    // quasi-triangular with 2x2 blocks on the diagonal
    assert!(t[(1, 0)].abs() < 1e-12 || t[(0, 1)].abs() > 0.0);
}

#[test]
fn pseudo_solve_rank_deficient() {
    let m = DMatrix::<f64>::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let b = nalgebra::DVector::from_vec(vec![2.0, 0.0]);
    let (x, res) = linalg::pseudo_solve(&m, &b, 1e-12);
    assert!((x[0] - 2.0).abs() < 1e-12);
    assert!(x[1].abs() < 1e-12);
    assert!(res < 1e-12);
}

#[test]
fn gemm_throughput() {
    let n = 900usize;
    let a = CMat::from_fn(n, n, |i, j| c((i as f64).sin(), (j as f64).cos()));
    let b = CMat::from_fn(n, n, |i, j| c((i as f64 + j as f64).cos(), 0.5));
    let start = Instant::now();
    let prod = linalg::matmul(&a, &b);
    let dt = start.elapsed().as_secs_f64();
    let gflops = 8.0 * (n as f64).powi(3) / dt / 1e9;
    println!("gemm {n}x{n}: {dt:.3} s  ({gflops:.2} GFLOP/s)  checksum {:.3e}", prod[(0, 0)].re);
    assert!(gflops > 0.5, "complex gemm is unusably slow: {gflops:.2} GFLOP/s");
}
