//! Acceptance gate: eleven numbered end-to-end criteria covering the
//! generator construction, the positivity verdict, the closed-form
//! special cases, the plane scans, thermal relaxation, oracle
//! cross-validation, the classical limit, gauge freedom, and the
//! positivity witness. Each test prints one `[PASS]`/`[FAIL]` line
//! with its measured figures and wall time, then asserts. Test names
//! are prefixed `c01_`..`c11_` so the default alphabetical order gives
//! a readable scoreboard under
//! `cargo test -p qme-cli --test acceptance -- --nocapture`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qme::analytic::{
    caldeira_leggett, cl_embedding, kramers_obstruction, n1_analysis, n1_cptp_here,
    optical_parameters,
};
use qme::cptp::{
    decompose, gauge_transform, lindblad_decomposition, reconstruct_xi_h, xi_matrix, Verdict,
};
use qme::dynamics::{
    classical_limit_matrices, evolve_moments, gibbs_covariance, moment_generator,
    stationary_covariance, MomentState,
};
use qme::fock::{
    build_fock, coherent_vector, dissipator_from_channels, evolve_density,
    evolve_density_interaction, generator_direct, generator_high_temperature, generator_optics,
    generator_quadratic, lindblad_dissipator, optics_channels, product_state, restricted_indices,
    squeezed_vacuum_vector, thermal_state, Source,
};
use qme::linalg::{complexify, frob, trace_distance, C64, CMat, CVec, RMat, RVec};
use qme::model::{coupling_matrices, BathSpec, SystemSpec};
use qme::propagators::{closed_form_sbeta_at, wick_propagator, WickConvention};

// ---------------------------------------------------------------- helpers

/// Print the scoreboard line for one criterion and assert it.
fn check(id: &str, budget_s: f64, started: Instant, pass: bool, detail: &str) {
    let secs = started.elapsed().as_secs_f64();
    let within = secs <= budget_s;
    let status = if pass && within { "PASS" } else { "FAIL" };
    println!("[{status}] {id} — {detail} ({secs:.1}s of {budget_s:.0}s budget)");
    assert!(pass, "{id}: {detail}");
    assert!(within, "{id}: wall time {secs:.1}s exceeded the {budget_s:.0}s budget");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unif(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.gen::<f64>()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn rel(a: &CMat, b: &CMat) -> f64 {
    frob(&(a - b)) / frob(b)
}

/// Single-mode spec with zero displacement.
fn spec1(h: &RMat, gamma_q: f64, gamma_p: f64, beta: f64, hbar: f64) -> SystemSpec {
    SystemSpec {
        n: 1,
        hbar,
        hessian: h.clone(),
        xi: RVec::zeros(2),
        phi: 0.0,
        baths: vec![BathSpec {
            gamma_q,
            gamma_p,
            beta,
        }],
    }
}

/// Least-squares slope of `ys` against `xs`.
fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    num / den
}

/// Damping pair that turns the unit harmonic oscillator at inverse
/// temperature `beta` into the damped-optics generator with rate
/// parameter `gamma_tilde`.
fn tuned_pair(beta: f64, gamma_tilde: f64) -> (f64, f64) {
    let (gp, gq, _) = optical_parameters(1.0, 1.0, beta, 1.0, gamma_tilde).unwrap();
    (gq, gp)
}

// ------------------------------------------------- criterion 1: keystone

/// Ten random single-mode specs across the elliptic / hyperbolic /
/// parabolic trichotomy: the conjugated-coordinate generator and the
/// coefficient-matrix generator agree on the low-occupation block.
#[test]
fn c01_generator_equivalence() {
    let t0 = Instant::now();
    let mut r = rng(101);
    let mut worst = 0.0f64;
    for draw in 0..10 {
        let h = match draw % 3 {
            0 => {
                let a = unif(&mut r, 0.8, 1.4);
                let d = unif(&mut r, 0.6, 1.2);
                let b = unif(&mut r, -0.25, 0.25);
                RMat::from_row_slice(2, 2, &[a, b, b, d])
            }
            1 => {
                let a = unif(&mut r, 0.8, 1.3);
                let d = unif(&mut r, -1.0, -0.5);
                let b = unif(&mut r, -0.25, 0.25);
                RMat::from_row_slice(2, 2, &[a, b, b, d])
            }
            _ => {
                // rank-one Hessian
                let s = unif(&mut r, 0.7, 1.2);
                let phi = unif(&mut r, 0.1, 1.4);
                let (c, g) = (phi.cos(), phi.sin());
                RMat::from_row_slice(2, 2, &[s * c * c, s * c * g, s * c * g, s * g * g])
            }
        };
        let mut spec = spec1(
            &h,
            unif(&mut r, 0.15, 0.7),
            unif(&mut r, 0.15, 0.7),
            unif(&mut r, 0.25, 0.45),
            1.0,
        );
        spec.xi = RVec::from_vec(vec![unif(&mut r, -0.2, 0.2), unif(&mut r, -0.2, 0.2)]);
        let f = build_fock(&spec, &[24], None).unwrap();
        let gd = generator_direct(&f, 32).unwrap();
        let xi = xi_matrix(&spec, WickConvention::MinusI).unwrap();
        let gq = generator_quadratic(&f, &xi, &spec.xi, 32).unwrap();
        let keep = restricted_indices(&[24], &[20]);
        let d = rel(
            &gd.materialize_restricted(&keep),
            &gq.materialize_restricted(&keep),
        );
        worst = worst.max(d);
    }
    check(
        "c01 generator equivalence",
        60.0,
        t0,
        worst <= 1e-8,
        &format!("10 draws, worst restricted-block relative distance {worst:.2e} (tol 1e-8)"),
    );
}

// ------------------------------------- criterion 2: elliptic criterion

/// 1000 diagonal elliptic draws: the scalar all-temperature condition
/// agrees with the numeric verdict at every point of a 20-beta sweep,
/// outside the marginal band. For diagonal positive `C` and `H` the
/// condition value is `>= 1` identically (arithmetic-geometric mean),
/// with equality exactly on the tuned locus, so the iff is exercised
/// from both sides by a margined family (`lhs >= 1.05`, must lose
/// positivity past its boundary temperature) and a tuned family
/// (`lhs = 1`, must stay CPTP on the whole sweep).
#[test]
fn c02_elliptic_criterion() {
    let t0 = Instant::now();
    let mut r = rng(202);
    let mut disagreements = 0usize;
    let mut iff_violations = 0usize;
    let mut band_skips = 0usize;
    let mut sweep = |h1: f64, h2: f64, gq: f64, gp: f64, beta_max: f64| -> (bool, f64) {
        let h = RMat::from_row_slice(2, 2, &[h1, 0.0, 0.0, h2]);
        let mut any_notcptp = false;
        let mut lhs_lib = f64::NAN;
        for i in 1..=20 {
            let beta = beta_max * i as f64 / 20.0;
            let spec = spec1(&h, gq, gp, beta, 1.0);
            let xi = xi_matrix(&spec, WickConvention::MinusI).unwrap();
            let dec = decompose(&xi, 1e-10);
            let rep = n1_analysis(gq, gp, &h, beta, 1.0).unwrap();
            lhs_lib = rep.condition_lhs.unwrap_or(f64::NAN);
            if dec.verdict == Verdict::NotCptp {
                any_notcptp = true;
            }
            let band = 1e-10 * frob(&dec.xi_h).max(1.0);
            if dec.verdict == Verdict::Marginal || dec.eigenvalues[0].abs() < band {
                band_skips += 1;
                continue;
            }
            if n1_cptp_here(&rep) != (dec.verdict == Verdict::Cptp) {
                disagreements += 1;
            }
        }
        (any_notcptp, lhs_lib)
    };
    // margined family: condition value at least 1.05
    for _ in 0..500 {
        let (h1, h2, gq, gp, lhs) = loop {
            let h1 = unif(&mut r, 0.25, 2.2);
            let h2 = unif(&mut r, 0.25, 2.2);
            let gq = unif(&mut r, 0.08, 1.0);
            let gp = unif(&mut r, 0.08, 1.0);
            let lhs = (gq * h1 + gp * h2).powi(2) / (4.0 * gq * gp * h1 * h2);
            if lhs >= 1.05 {
                break (h1, h2, gq, gp, lhs);
            }
        };
        let nu = (h1 * h2).sqrt();
        // this family crosses its boundary at
        // beta* = 2 artanh(1/sqrt(lhs)) / nu: sweep well past it
        let beta_max = 2.5 * 2.0 * (1.0 / lhs.sqrt()).atanh() / nu;
        let (any_notcptp, lhs_lib) = sweep(h1, h2, gq, gp, beta_max);
        let rep_all = n1_analysis(gq, gp, &RMat::from_row_slice(2, 2, &[h1, 0.0, 0.0, h2]), 1.0, 1.0)
            .unwrap()
            .cptp_all_beta;
        if rep_all || !any_notcptp || (lhs_lib - lhs).abs() > 1e-9 * lhs {
            iff_violations += 1;
        }
    }
    // tuned family: condition value exactly 1, CPTP at every beta
    for _ in 0..500 {
        let h1 = unif(&mut r, 0.25, 2.2);
        let gq = unif(&mut r, 0.08, 1.0);
        let (h2, gp) = (h1, gq);
        let beta_max = 6.0 / h1;
        let (any_notcptp, lhs_lib) = sweep(h1, h2, gq, gp, beta_max);
        if any_notcptp || (lhs_lib - 1.0).abs() > 1e-12 {
            iff_violations += 1;
        }
    }
    check(
        "c02 elliptic criterion",
        30.0,
        t0,
        disagreements == 0 && iff_violations == 0,
        &format!(
            "500 margined + 500 tuned draws x 20 betas: {disagreements} point \
             disagreements, {iff_violations} all-beta iff violations, {band_skips} \
             marginal-band skips"
        ),
    );
}

// ------------------------------------------ criterion 3: tuned optics

/// At the tuned damping ratio the quadratic generator equals the
/// damped-optics build, the extracted jump vectors reproduce the
/// two-channel dissipator, and the anti-Hermitian part vanishes.
#[test]
fn c03_tuned_optics_equivalence() {
    let t0 = Instant::now();
    let beta = 2.0;
    let gamma_tilde = 0.3;
    let (gq, gp) = tuned_pair(beta, gamma_tilde);
    let spec = SystemSpec::harmonic(1.0, 1.0, 1.0, gq, gp, beta);
    let f = build_fock(&spec, &[20], None).unwrap();
    let xi = xi_matrix(&spec, WickConvention::MinusI).unwrap();
    let keep = restricted_indices(&[20], &[16]);

    let g_quad = generator_quadratic(&f, &xi, &spec.xi, 0).unwrap();
    let g_opt = generator_optics(&f, gamma_tilde).unwrap();
    let rel_gen = rel(
        &g_quad.materialize_restricted(&keep),
        &g_opt.materialize_restricted(&keep),
    );

    let dec = decompose(&xi, 1e-10);
    let ls = lindblad_decomposition(&dec, &spec.xi, &spec.hessian, None);
    let d_lind = lindblad_dissipator(&f, &ls);
    let channels = optics_channels(&f, gamma_tilde).unwrap();
    let d_chan = dissipator_from_channels(&f, &channels, Source::Optics);
    let rel_diss = rel(
        &d_lind.materialize_restricted(&keep),
        &d_chan.materialize_restricted(&keep),
    );

    let xi_a_norm = frob(&dec.xi_a);
    check(
        "c03 tuned harmonic = damped optics",
        10.0,
        t0,
        rel_gen <= 1e-10 && rel_diss <= 1e-10 && xi_a_norm <= 1e-12,
        &format!(
            "generator rel {rel_gen:.2e}, dissipator rel {rel_diss:.2e} (tol 1e-10), \
             |Xi_A| {xi_a_norm:.2e} (tol 1e-12)"
        ),
    );
}

// -------------------------------------- criterion 4: Brownian motion

/// Closed-form spectrum of the high-temperature Brownian-motion
/// generator against the numeric eigensolver, the sign of its lower
/// branch, and the embedding round-trip into the quadratic family.
#[test]
fn c04_brownian_motion_closed_forms() {
    let t0 = Instant::now();
    let mut r = rng(404);
    let mut worst_eig = 0.0f64;
    let mut negative_ok = true;
    for _ in 0..100 {
        let zeta = unif(&mut r, 0.05, 1.5);
        let gamma_o = unif(&mut r, 0.02, 1.2);
        let hbar = unif(&mut r, 0.5, 1.5);
        let beta = unif(&mut r, 0.2, 3.0);
        let rep = caldeira_leggett(zeta, gamma_o, beta, hbar).unwrap();
        let dec = decompose(&rep.xi, 1e-10);
        worst_eig = worst_eig
            .max((dec.eigenvalues[0] - rep.psi_minus).abs())
            .max((dec.eigenvalues[1] - rep.psi_plus).abs());
        negative_ok &= rep.psi_minus < 0.0;
    }
    let mut worst_emb = 0.0f64;
    for _ in 0..100 {
        let zeta = unif(&mut r, 0.05, 1.5);
        let hbar = unif(&mut r, 0.5, 1.5);
        let beta = unif(&mut r, 0.2, 3.0);
        let h = RMat::from_row_slice(
            2,
            2,
            &[unif(&mut r, 0.3, 1.8), 0.0, 0.0, unif(&mut r, 0.3, 1.8)],
        );
        let emb = cl_embedding(zeta, beta, hbar, &h).unwrap();
        let spec = spec1(&h, emb.gamma_q, emb.gamma_p, beta, hbar);
        let xi = xi_matrix(&spec, WickConvention::MinusI).unwrap();
        let dec = decompose(&xi, 1e-10);
        let cl = caldeira_leggett(zeta, emb.gamma_o_implied, beta, hbar).unwrap();
        let scale = frob(&cl.xi_h).max(1.0);
        worst_emb = worst_emb
            .max(frob(&(&dec.xi_h - &cl.xi_h)) / scale)
            .max(frob(&(&dec.xi_a - &cl.xi_a)) / scale);
    }
    check(
        "c04 Brownian-motion spectrum and embedding",
        5.0,
        t0,
        worst_eig <= 1e-12 && negative_ok && worst_emb <= 1e-10,
        &format!(
            "100 spectra: worst |psi - eig| {worst_eig:.2e} (tol 1e-12), lower branch \
             always negative: {negative_ok}; 100 embeddings: worst Xi_H/Xi_A defect \
             {worst_emb:.2e} (tol 1e-10)"
        ),
    );
}

// ------------------------------------ criterion 5: Kramers obstruction

/// Position-only friction: the closed-form determinant matches the
/// numeric one, the verdict is NotCPTP across the temperature sweep
/// for a kinetic Hamiltonian, and only `H_22 = 0` rescues marginality.
#[test]
fn c05_kramers_obstruction() {
    let t0 = Instant::now();
    let gamma_p = 0.5;
    let h = RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
    let mut worst_det = 0.0f64;
    let mut all_notcptp = true;
    for beta in linspace(0.3, 3.0, 12) {
        let spec = SystemSpec::harmonic(1.0, 1.0, 1.0, 0.0, gamma_p, beta);
        let xi = xi_matrix(&spec, WickConvention::MinusI).unwrap();
        let dec = decompose(&xi, 1e-10);
        let closed = kramers_obstruction(&h, gamma_p, beta, 1.0).unwrap();
        let numeric = dec.eigenvalues[0] * dec.eigenvalues[1];
        worst_det = worst_det.max((closed - numeric).abs() / closed.abs().max(1.0));
        all_notcptp &= dec.verdict == Verdict::NotCptp;
    }
    let h0 = RMat::from_row_slice(2, 2, &[1.3, 0.0, 0.0, 0.0]);
    let mut worst_det0 = 0.0f64;
    let mut all_marginal = true;
    for beta in linspace(0.3, 3.0, 12) {
        let spec = spec1(&h0, 0.0, gamma_p, beta, 1.0);
        let xi = xi_matrix(&spec, WickConvention::MinusI).unwrap();
        let dec = decompose(&xi, 1e-10);
        let closed = kramers_obstruction(&h0, gamma_p, beta, 1.0).unwrap();
        worst_det0 = worst_det0
            .max(closed.abs())
            .max((dec.eigenvalues[0] * dec.eigenvalues[1]).abs());
        all_marginal &= dec.verdict == Verdict::Marginal;
    }
    check(
        "c05 Kramers obstruction",
        5.0,
        t0,
        worst_det <= 1e-10 && all_notcptp && all_marginal && worst_det0 <= 1e-10,
        &format!(
            "kinetic H: det defect {worst_det:.2e} (tol 1e-10), NotCPTP on all 12 betas: \
             {all_notcptp}; H_22 = 0: Marginal on all 12 betas: {all_marginal}, \
             |det| {worst_det0:.2e}"
        ),
    );
}

// ------------------------------------------ criterion 6: network scans

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn read_spec_json(path: &Path) -> SystemSpec {
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let n = v["n"].as_u64().unwrap() as usize;
    let hes = v["hessian"].as_array().unwrap();
    let hessian = RMat::from_fn(2 * n, 2 * n, |i, j| {
        hes[i].as_array().unwrap()[j].as_f64().unwrap()
    });
    let xi = match v.get("xi").and_then(|x| x.as_array()) {
        Some(a) => RVec::from_iterator(2 * n, a.iter().map(|x| x.as_f64().unwrap())),
        None => RVec::zeros(2 * n),
    };
    let baths = v["baths"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| BathSpec {
            gamma_q: b["gamma_q"].as_f64().unwrap(),
            gamma_p: b["gamma_p"].as_f64().unwrap(),
            beta: b["beta"].as_f64().unwrap(),
        })
        .collect();
    SystemSpec {
        n,
        hbar: v["hbar"].as_f64().unwrap(),
        hessian,
        xi,
        phi: v.get("phi").and_then(|x| x.as_f64()).unwrap_or(0.0),
        baths,
    }
}

struct ScanRow {
    beta1: f64,
    eigs: Vec<f64>,
    verdict: String,
}

fn parse_scan_csv(text: &str, n_eigs: usize) -> Vec<ScanRow> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().expect("empty scan output");
    assert!(
        header.starts_with("beta1,beta2,eig_1"),
        "unexpected scan header: {header}"
    );
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), n_eigs + 3, "bad row: {l}");
            ScanRow {
                beta1: f[0].parse().unwrap(),
                eigs: f[2..2 + n_eigs].iter().map(|s| s.parse().unwrap()).collect(),
                verdict: f[n_eigs + 2].to_string(),
            }
        })
        .collect()
}

/// Closed-form two-mode propagator entries against the numeric
/// exponential, plus four 200 x 200 plane scans through the binary:
/// CPTP corner at small beta, eigenvalue continuity along the diagonal
/// (within the matching perturbation bound), and the small-beta limit
/// of the Hermitian part.
#[test]
fn c06_network_closed_forms_and_scans() {
    let t0 = Instant::now();
    // (A) closed-form propagator entries
    let mut r = rng(606);
    let mut worst_entry = 0.0f64;
    for _ in 0..50 {
        let omega = unif(&mut r, 0.4, 1.6);
        let kappa = unif(&mut r, -0.45 * omega, 1.2);
        let beta = unif(&mut r, 0.1, 2.0);
        let hbar = unif(&mut r, 0.6, 1.3);
        let bath = BathSpec {
            gamma_q: 0.25,
            gamma_p: 0.25,
            beta: 1.0,
        };
        let spec = SystemSpec::network(omega, kappa, hbar, [bath.clone(), bath]);
        let closed = closed_form_sbeta_at(&spec, beta, WickConvention::MinusI).unwrap();
        let numeric = wick_propagator(&spec.hessian, beta, hbar, WickConvention::MinusI)
            .unwrap()
            .matrix;
        for i in 0..4 {
            for j in 0..4 {
                worst_entry = worst_entry.max((closed[(i, j)] - numeric[(i, j)]).norm());
            }
        }
    }

    // (B) plane scans through the installed binary
    let exe = env!("CARGO_BIN_EXE_qme");
    let dir = tempfile::tempdir().unwrap();
    let scan_started = Instant::now();
    let mut corners_cptp = true;
    let mut min_cptp_cells = usize::MAX;
    let mut weyl_ok = true;
    let mut worst_csv_vs_lib = 0.0f64;
    let mut worst_small_beta = 0.0f64;
    for name in ["network_a", "network_b", "network_c", "network_d"] {
        let cfg = configs_dir().join(format!("{name}.json"));
        let out = dir.path().join(format!("{name}.csv"));
        let status = Command::new(exe)
            .arg("scan")
            .arg("--config")
            .arg(&cfg)
            .args(["--beta1", "1e-3:4:200", "--beta2", "1e-3:4:200"])
            .args(["--jobs", "4", "--no-meta"])
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success(), "{name}: scan exited with {status}");
        let rows = parse_scan_csv(&fs::read_to_string(&out).unwrap(), 4);
        assert_eq!(rows.len(), 200 * 200, "{name}: row count");
        for idx in [0usize, 1, 200, 201] {
            corners_cptp &= rows[idx].verdict == "CPTP";
        }
        min_cptp_cells = min_cptp_cells.min(rows.iter().filter(|r| r.verdict == "CPTP").count());

        let spec0 = read_spec_json(&cfg);
        let mut prev: Option<(Vec<f64>, CMat)> = None;
        for i in 0..200 {
            let row = &rows[i * 200 + i];
            let mut s = spec0.clone();
            for b in &mut s.baths {
                b.beta = row.beta1;
            }
            let xi = xi_matrix(&s, WickConvention::MinusI).unwrap();
            let dec = decompose(&xi, 1e-10);
            for k in 0..4 {
                worst_csv_vs_lib = worst_csv_vs_lib
                    .max((row.eigs[k] - dec.eigenvalues[k]).abs() / frob(&dec.xi_h).max(1.0));
            }
            if i == 0 {
                let two_k = complexify(&coupling_matrices(&s).unwrap().k) * C64::new(2.0, 0.0);
                worst_small_beta =
                    worst_small_beta.max(frob(&(&dec.xi_h - &two_k)) / frob(&two_k));
            }
            if let Some((pe, pxh)) = &prev {
                // eigenvalue increments are bounded by the generator
                // increment (matching/perturbation inequality)
                let bound = frob(&(&dec.xi_h - pxh)) + 1e-9;
                for k in 0..4 {
                    weyl_ok &= (row.eigs[k] - pe[k]).abs() <= bound;
                }
            }
            prev = Some((row.eigs.clone(), dec.xi_h.clone()));
        }
    }
    let scan_secs = scan_started.elapsed().as_secs_f64();
    check(
        "c06 network closed forms and plane scans",
        120.0,
        t0,
        worst_entry <= 1e-12
            && corners_cptp
            && min_cptp_cells > 0
            && weyl_ok
            && worst_csv_vs_lib <= 1e-8
            && worst_small_beta <= 1e-3,
        &format!(
            "50 propagators: worst entry diff {worst_entry:.2e} (tol 1e-12); 4 scans in \
             {scan_secs:.1}s: small-beta corner CPTP {corners_cptp}, >= {min_cptp_cells} \
             CPTP cells each, diagonal continuity {weyl_ok}, csv-vs-library \
             {worst_csv_vs_lib:.2e}, |Xi_H - 2K|/|2K| at beta=1e-3: {worst_small_beta:.2e} \
             (tol 1e-3)"
        ),
    );
}

// -------------------------------------- criterion 7: thermal relaxation

/// Tuned harmonic case: the Lyapunov fixed point equals the Gibbs
/// covariance, and the number-basis oracle relaxes to the thermal
/// state. The two-bath network case reports its Gibbs residual, which
/// is asserted only under a vanishing anti-Hermitian part.
#[test]
fn c07_thermal_relaxation() {
    let t0 = Instant::now();
    let beta = 2.0;
    let gamma_tilde = 0.3;
    let (gq, gp) = tuned_pair(beta, gamma_tilde);
    let spec = SystemSpec::harmonic(1.0, 1.0, 1.0, gq, gp, beta);
    let xi = xi_matrix(&spec, WickConvention::MinusI).unwrap();
    let dec = decompose(&xi, 1e-10);
    let mg = moment_generator(&spec, &dec).unwrap();
    let sigma_inf = stationary_covariance(&mg).unwrap();
    // Gibbs covariance of the unit oscillator at beta = 2 is
    // (1/2) coth(1) on both diagonal entries
    let half_coth = 0.5 / 1.0f64.tanh();
    let mut worst_cov = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { half_coth } else { 0.0 };
            worst_cov = worst_cov.max((sigma_inf[(i, j)] - want).abs());
        }
    }
    let gibbs = gibbs_covariance(&spec.hessian, beta, 1.0).unwrap();
    worst_cov = worst_cov.max((&sigma_inf - &gibbs).norm());

    // number-basis relaxation to the thermal state
    let f = build_fock(&spec, &[30], None).unwrap();
    let rho0 = product_state(&f, &[coherent_vector(30, C64::new(0.5, 0.0))]).unwrap();
    let grid = linspace(0.0, 20.0 / gamma_tilde, 11);
    let snaps = evolve_density_interaction(&f, &xi, &spec.xi, &rho0, &grid, 84).unwrap();
    let dist = trace_distance(&snaps.last().unwrap().rho, &thermal_state(&f, beta));

    // two-bath network at uniform temperature: report the residual of
    // the Gibbs covariance under the moment flow; assert it only if
    // the anti-Hermitian part vanishes (it does not here)
    let bath = BathSpec {
        gamma_q: 0.2,
        gamma_p: 0.2,
        beta,
    };
    let net = SystemSpec::network(1.0, 0.4, 1.0, [bath.clone(), bath]);
    let xi_n = xi_matrix(&net, WickConvention::MinusI).unwrap();
    let dec_n = decompose(&xi_n, 1e-10);
    let mg_n = moment_generator(&net, &dec_n).unwrap();
    let sigma_g = gibbs_covariance(&net.hessian, beta, 1.0).unwrap();
    let residual = (&mg_n.drift * &sigma_g + &sigma_g * mg_n.drift.transpose() + &mg_n.diffusion)
        .norm()
        / mg_n.diffusion.norm();
    let xi_a_norm = frob(&dec_n.xi_a);
    let network_ok = xi_a_norm > 1e-10 || residual <= 1e-6;

    check(
        "c07 thermal relaxation",
        60.0,
        t0,
        worst_cov <= 1e-8 && dist <= 1e-4 && network_ok,
        &format!(
            "stationary-vs-Gibbs defect {worst_cov:.2e} (tol 1e-8); oracle trace distance \
             at t=20/rate: {dist:.2e} (tol 1e-4); network Gibbs residual {residual:.2e} \
             with |Xi_A| {xi_a_norm:.2e} (asserted only if |Xi_A| <= 1e-10)"
        ),
    );
}

// ------------------------------- criterion 8: moment-oracle agreement

/// Moment flow against number-basis oracle moments, with the
/// truncation-convergence protocol: every oracle trajectory is
/// recomputed four levels deeper and must move by less than the
/// claimed tolerance.
#[test]
fn c08_moment_oracle_agreement() {
    let t0 = Instant::now();
    let tol = 1e-6;
    let mut r = rng(808);
    let mut worst_sup = 0.0f64;
    let mut worst_shift = 0.0f64;

    // five single-mode draws near (but off) the tuned ratio, all CPTP
    // at the drawn temperature
    for _ in 0..5 {
        let m = unif(&mut r, 0.8, 1.3);
        let omega = unif(&mut r, 0.8, 1.3);
        let gq = unif(&mut r, 0.05, 0.2);
        let gp = (m * omega).powi(2) * gq * unif(&mut r, 0.8, 1.2);
        let beta = unif(&mut r, 0.8, 2.0);
        let spec = SystemSpec::harmonic(m, omega, 1.0, gq, gp, beta);
        let xi = xi_matrix(&spec, WickConvention::MinusI).unwrap();
        let dec = decompose(&xi, 1e-10);
        assert_eq!(dec.verdict, Verdict::Cptp, "draw must be CPTP");
        let grid = linspace(0.0, 2.0, 9);
        let mg = moment_generator(&spec, &dec).unwrap();
        let mut series: Vec<Vec<(RVec, RMat)>> = Vec::new();
        for nlev in [16usize, 20] {
            let f = build_fock(&spec, &[nlev], None).unwrap();
            let rho0 =
                product_state(&f, &[coherent_vector(nlev, C64::new(0.35, 0.1))]).unwrap();
            let g = generator_quadratic(&f, &xi, &spec.xi, 0).unwrap();
            let snaps = evolve_density(&g, &f, &rho0, &grid).unwrap();
            let init =
                MomentState::new(snaps[0].mean.clone(), snaps[0].cov.clone(), 0.0).unwrap();
            let (traj, _) = evolve_moments(&mg, &init, &grid, None).unwrap();
            let mut sup = 0.0f64;
            for (s, mm) in snaps.iter().zip(traj.iter()) {
                sup = sup.max((&s.mean - &mm.mean).norm());
                sup = sup.max((&s.cov - &mm.cov).norm());
            }
            worst_sup = worst_sup.max(sup);
            series.push(snaps.iter().map(|s| (s.mean.clone(), s.cov.clone())).collect());
        }
        for (a, b) in series[0].iter().zip(series[1].iter()) {
            worst_shift = worst_shift.max((&a.0 - &b.0).norm()).max((&a.1 - &b.1).norm());
        }
    }

    // one coupled two-mode case through the interaction-frame
    // integrator
    let bath = BathSpec {
        gamma_q: 0.05,
        gamma_p: 0.05,
        beta: 1.0,
    };
    let net = SystemSpec::network(1.0, 0.4, 1.0, [bath.clone(), bath]);
    let xi = xi_matrix(&net, WickConvention::MinusI).unwrap();
    let dec = decompose(&xi, 1e-10);
    assert_eq!(dec.verdict, Verdict::Cptp);
    let mg = moment_generator(&net, &dec).unwrap();
    let grid = linspace(0.0, 1.5, 5);
    let mut series: Vec<Vec<(RVec, RMat)>> = Vec::new();
    for nlev in [12usize, 16] {
        let f = build_fock(&net, &[nlev, nlev], None).unwrap();
        let rho0 = product_state(
            &f,
            &[
                coherent_vector(nlev, C64::new(0.25, 0.0)),
                coherent_vector(nlev, C64::new(-0.1, 0.15)),
            ],
        )
        .unwrap();
        let snaps = evolve_density_interaction(&f, &xi, &net.xi, &rho0, &grid, 30).unwrap();
        let init = MomentState::new(snaps[0].mean.clone(), snaps[0].cov.clone(), 0.0).unwrap();
        let (traj, _) = evolve_moments(&mg, &init, &grid, None).unwrap();
        let mut sup = 0.0f64;
        for (s, mm) in snaps.iter().zip(traj.iter()) {
            sup = sup.max((&s.mean - &mm.mean).norm());
            sup = sup.max((&s.cov - &mm.cov).norm());
        }
        worst_sup = worst_sup.max(sup);
        series.push(snaps.iter().map(|s| (s.mean.clone(), s.cov.clone())).collect());
    }
    for (a, b) in series[0].iter().zip(series[1].iter()) {
        worst_shift = worst_shift.max((&a.0 - &b.0).norm()).max((&a.1 - &b.1).norm());
    }

    check(
        "c08 moment-oracle agreement",
        120.0,
        t0,
        worst_sup <= tol && worst_shift <= tol,
        &format!(
            "5 single-mode + 1 two-mode trajectories: worst moment sup distance \
             {worst_sup:.2e} (tol 1e-6), worst deeper-truncation shift {worst_shift:.2e}"
        ),
    );
}

// ----------------------------------------- criterion 9: classical limit

/// Leading-order structure as hbar -> 0: the generator approaches
/// `K - (i/2) J C H` at slope one, while the drift/diffusion closure
/// converges one order faster (the first correction to the imaginary
/// part of the propagator is cubic in hbar, and `K` carries `1/hbar`,
/// leaving a quadratic defect). The high-temperature generator defect
/// is quadratic in beta.
#[test]
fn c09_classical_limit() {
    let t0 = Instant::now();
    let h = RMat::from_row_slice(2, 2, &[1.3, 0.2, 0.2, 0.8]);
    let (gq, gp, beta) = (0.3, 0.45, 0.8);
    let j = qme::model::symplectic_form(1);
    let hbars = [0.8, 0.4, 0.2, 0.1, 0.05];
    let mut d_gen = Vec::new();
    let mut d_closure = Vec::new();
    for &hbar in &hbars {
        let spec = spec1(&h, gq, gp, beta, hbar);
        let cm = coupling_matrices(&spec).unwrap();
        let xi = xi_matrix(&spec, WickConvention::MinusI).unwrap();
        let jch = complexify(&(&j * &cm.c * &h)) * C64::new(0.0, 0.5);
        d_gen.push(frob(&(&xi - &complexify(&cm.k) + &jch)));
        let dec = decompose(&xi, 1e-10);
        let mg = moment_generator(&spec, &dec).unwrap();
        let (a_cl, d_cl) = classical_limit_matrices(&spec).unwrap();
        d_closure.push((&mg.drift - &a_cl).norm() + (&mg.diffusion - &d_cl).norm());
    }
    let xs: Vec<f64> = hbars.iter().map(|x| x.log2()).collect();
    let slope_gen = lsq_slope(&xs, &d_gen.iter().map(|x| x.log2()).collect::<Vec<_>>());
    let slope_closure = lsq_slope(&xs, &d_closure.iter().map(|x| x.log2()).collect::<Vec<_>>());

    // high-temperature generator defect, quadratic in beta
    let betas = [0.2, 0.1, 0.05, 0.025];
    let mut d_ht = Vec::new();
    for &b in &betas {
        let spec = spec1(&h, gq, gp, b, 1.0);
        let f = build_fock(&spec, &[16], Some(&[1.1])).unwrap();
        let gd = generator_direct(&f, 0).unwrap();
        let ght = generator_high_temperature(&f).unwrap();
        let keep = restricted_indices(&[16], &[12]);
        d_ht.push(rel(
            &ght.materialize_restricted(&keep),
            &gd.materialize_restricted(&keep),
        ));
    }
    let xb: Vec<f64> = betas.iter().map(|x| x.log2()).collect();
    let slope_ht = lsq_slope(&xb, &d_ht.iter().map(|x| x.log2()).collect::<Vec<_>>());

    check(
        "c09 classical limit",
        30.0,
        t0,
        (0.9..=1.1).contains(&slope_gen)
            && (1.8..=2.2).contains(&slope_closure)
            && (1.8..=2.2).contains(&slope_ht),
        &format!(
            "generator slope {slope_gen:.3} (1.0 +- 0.1), drift/diffusion slope \
             {slope_closure:.3} (2.0 +- 0.2, one order beyond the generator), \
             high-temperature defect slope {slope_ht:.3} (2.0 +- 0.2)"
        ),
    );
}

// ---------------------------------------- criterion 10: gauge freedom

/// One hundred random unitary mixings plus displacement shifts of the
/// extracted jump vectors leave the reconstructed Hermitian part
/// invariant.
#[test]
fn c10_gauge_invariance() {
    let t0 = Instant::now();
    let mut r = rng(1010);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = unif(&mut r, 0.7, 1.4);
        let omega = unif(&mut r, 0.7, 1.4);
        let beta = unif(&mut r, 0.5, 2.5);
        let gq = unif(&mut r, 0.1, 0.5);
        let gp = (m * omega).powi(2) * gq;
        let spec = SystemSpec::harmonic(m, omega, 1.0, gq, gp, beta);
        let xi = xi_matrix(&spec, WickConvention::MinusI).unwrap();
        let dec = decompose(&xi, 1e-10);
        assert_eq!(dec.verdict, Verdict::Cptp, "tuned draws are CPTP");
        let ls = lindblad_decomposition(&dec, &spec.xi, &spec.hessian, None);
        let k = ls.lambdas.len();
        let g = CMat::from_fn(k, k, |_, _| {
            C64::new(unif(&mut r, -1.0, 1.0), unif(&mut r, -1.0, 1.0))
        });
        let u = g.qr().q();
        let varsigma = CVec::from_fn(k, |_, _| {
            C64::new(unif(&mut r, -1.0, 1.0), unif(&mut r, -1.0, 1.0))
        });
        let ls2 = gauge_transform(&ls, &u, &varsigma).unwrap();
        let d = frob(&(&reconstruct_xi_h(&ls2) - &dec.xi_h)) / frob(&dec.xi_h).max(1.0);
        worst = worst.max(d);
    }
    check(
        "c10 gauge invariance",
        5.0,
        t0,
        worst <= 1e-12,
        &format!("100 random (U, shift) gauges: worst Xi_H defect {worst:.2e} (tol 1e-12)"),
    );
}

// ------------------------------------- criterion 11: positivity witness

/// A squeezed initial state exhibits a genuinely negative density
/// eigenvalue under the position-friction (NotCPTP) generator, while
/// the tuned (CPTP) generator keeps the same family positive.
#[test]
fn c11_positivity_witness() {
    let t0 = Instant::now();
    let nlev = 32;
    let grid = linspace(0.0, 1.5, 16);
    let run = |spec: &SystemSpec| -> f64 {
        let f = build_fock(spec, &[nlev], None).unwrap();
        let xi = xi_matrix(spec, WickConvention::MinusI).unwrap();
        let rho0 = product_state(&f, &[squeezed_vacuum_vector(nlev, 0.5, 0.0)]).unwrap();
        let snaps = evolve_density_interaction(&f, &xi, &spec.xi, &rho0, &grid, 20).unwrap();
        snaps
            .iter()
            .map(|s| s.min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    };

    let kramers = SystemSpec::harmonic(1.0, 1.0, 1.0, 0.0, 0.5, 1.0);
    assert_eq!(
        decompose(&xi_matrix(&kramers, WickConvention::MinusI).unwrap(), 1e-10).verdict,
        Verdict::NotCptp
    );
    let min_kramers = run(&kramers);

    let (gq, gp) = tuned_pair(2.0, 0.3);
    let tuned = SystemSpec::harmonic(1.0, 1.0, 1.0, gq, gp, 2.0);
    assert_eq!(
        decompose(&xi_matrix(&tuned, WickConvention::MinusI).unwrap(), 1e-10).verdict,
        Verdict::Cptp
    );
    let min_tuned = run(&tuned);

    check(
        "c11 positivity witness",
        60.0,
        t0,
        min_kramers < -1e-6 && min_tuned >= -1e-8,
        &format!(
            "squeezed start: NotCPTP generator reaches min eigenvalue {min_kramers:.2e} \
             (< -1e-6), tuned generator stays at {min_tuned:.2e} (>= -1e-8)"
        ),
    );
}
