//! `qme` — command-line surface over the quadratic-master-equation
//! library: positivity checks, (beta1, beta2) region scans, moment and
//! Fock-oracle evolution runs, Lindblad extraction, and detailed-balance
//! reports. Outputs are CSV or JSON artifacts for external plotting.
//!
//! Exit codes: 0 = CPTP (or success for non-verdict commands),
//! 1 = NotCPTP, 2 = usage or data error, 3 = Marginal.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use qme::balance::balance_check;
use qme::cptp::{
    decompose, effective_hamiltonian, lindblad_decomposition, reconstruct_xi_h, xi_matrix,
    Verdict, XiDecomposition,
};
use qme::dynamics::{evolve_moments, moment_generator, MomentState};
use qme::fock::{
    build_fock, coherent_vector, evolve_density, generator_direct, generator_high_temperature,
    generator_optics, generator_quadratic, oracle_report, product_state, Source, Superoperator,
};
use qme::linalg::{frob, CMat, RMat, RVec, C64};
use qme::model::SystemSpec;
use qme::propagators::WickConvention;

/// Quadratic-master-equation toolkit: CPTP checks, region scans,
/// moment/oracle evolution, Lindblad extraction, detailed balance.
#[derive(Parser)]
#[command(name = "qme", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to a system-description JSON file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Relative tolerance band for the positivity verdict.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,

    /// Sign convention of the Wick-rotated propagator exponent.
    #[arg(long, global = true, value_enum, default_value_t = ConventionArg::MinusI)]
    convention: ConventionArg,

    /// Worker threads for grid scans.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Write the primary artifact here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Suppress the reproducibility header (timestamp, resolved config).
    #[arg(long, global = true)]
    no_meta: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConventionArg {
    /// exp(-i hbar beta J H / 2)
    #[value(name = "minus-i")]
    MinusI,
    /// exp(+i hbar beta J H / 2)
    #[value(name = "plus-i")]
    PlusI,
}

impl ConventionArg {
    fn to_lib(self) -> WickConvention {
        match self {
            ConventionArg::MinusI => WickConvention::MinusI,
            ConventionArg::PlusI => WickConvention::PlusI,
        }
    }
    fn name(self) -> &'static str {
        match self {
            ConventionArg::MinusI => "minus-i",
            ConventionArg::PlusI => "plus-i",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SourceArg {
    /// Wick-conjugated coupling build.
    Direct,
    /// Ordered coefficient-matrix build.
    Quadratic,
    /// First-order-in-beta friction form.
    HighTemperature,
    /// Two-channel thermal ladder channels.
    Optics,
}

impl SourceArg {
    fn to_lib(self) -> Source {
        match self {
            SourceArg::Direct => Source::DirectConjugation,
            SourceArg::Quadratic => Source::Quadratic,
            SourceArg::HighTemperature => Source::HighTemperature,
            SourceArg::Optics => Source::Optics,
        }
    }
}

/// Inclusive linear range `MIN:MAX:COUNT` for one scan axis.
#[derive(Clone, Copy, Debug)]
struct AxisRange {
    min: f64,
    max: f64,
    count: usize,
}

fn parse_axis(s: &str) -> Result<AxisRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected MIN:MAX:COUNT".into());
    }
    let min: f64 = parts[0].parse().map_err(|e| format!("min: {e}"))?;
    let max: f64 = parts[1].parse().map_err(|e| format!("max: {e}"))?;
    let count: usize = parts[2].parse().map_err(|e| format!("count: {e}"))?;
    if !(min > 0.0) {
        return Err("axis minimum must be > 0".into());
    }
    if !(max >= min) {
        return Err("axis maximum must be >= minimum".into());
    }
    if count < 2 {
        return Err("axis count must be >= 2".into());
    }
    Ok(AxisRange { min, max, count })
}

/// Comma-separated real list (newtype so clap reads one argument).
#[derive(Clone, Debug)]
struct F64List(Vec<f64>);

/// Comma-separated level-count list.
#[derive(Clone, Debug)]
struct UsizeList(Vec<usize>);

/// Semicolon-separated per-mode complex amplitudes `re,im[;re,im…]`.
#[derive(Clone, Debug)]
struct AlphaList(Vec<C64>);

fn parse_f64_list(s: &str) -> Result<F64List, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<Vec<f64>, String>>()
        .map(F64List)
}

fn parse_usize_list(s: &str) -> Result<UsizeList, String> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<Vec<usize>, String>>()
        .map(UsizeList)
}

fn parse_alpha_list(s: &str) -> Result<AlphaList, String> {
    s.split(';')
        .map(|pair| {
            let comps: Vec<&str> = pair.split(',').collect();
            if comps.len() != 2 {
                return Err(format!("{pair:?}: expected RE,IM"));
            }
            let re: f64 = comps[0].trim().parse().map_err(|e| format!("{e}"))?;
            let im: f64 = comps[1].trim().parse().map_err(|e| format!("{e}"))?;
            Ok(C64::new(re, im))
        })
        .collect::<Result<Vec<C64>, String>>()
        .map(AlphaList)
}

#[derive(Subcommand)]
enum Command {
    /// Decide the positivity verdict and print the spectrum report.
    Check,
    /// Scan the (beta1, beta2) plane and emit one CSV row per grid point.
    Scan {
        /// First-bath inverse-temperature axis, MIN:MAX:COUNT.
        #[arg(long, value_parser = parse_axis)]
        beta1: AxisRange,
        /// Second-axis range; omit to lock beta2 = beta1 along the diagonal.
        #[arg(long, value_parser = parse_axis)]
        beta2: Option<AxisRange>,
    },
    /// Integrate the Gaussian moment flow and emit a trajectory CSV.
    Evolve {
        /// Final time of the trajectory.
        #[arg(long, default_value_t = 20.0)]
        t_final: f64,
        /// Number of output samples (including t = 0).
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Initial mean vector, comma-separated (default: zeros).
        #[arg(long, value_parser = parse_f64_list)]
        mean: Option<F64List>,
        /// Initial covariance diagonal (default: hbar/2 on every entry).
        #[arg(long, value_parser = parse_f64_list)]
        cov_diag: Option<F64List>,
        /// Upper bound on the internal integrator step.
        #[arg(long)]
        max_step: Option<f64>,
    },
    /// Evolve a truncated number-basis density matrix and report moments.
    Oracle {
        /// Generator construction to exercise.
        #[arg(long, value_enum, default_value_t = SourceArg::Direct)]
        source: SourceArg,
        /// Levels per mode, comma-separated (single value broadcast).
        #[arg(long, value_parser = parse_usize_list, default_value = "16")]
        truncation: UsizeList,
        /// Extra levels used while assembling conjugated operators.
        #[arg(long, default_value_t = 8)]
        pad: usize,
        /// Final time of the trajectory.
        #[arg(long, default_value_t = 5.0)]
        t_final: f64,
        /// Number of snapshots (including t = 0).
        #[arg(long, default_value_t = 11)]
        points: usize,
        /// Initial coherent amplitude per mode, RE,IM[;RE,IM…].
        #[arg(long, value_parser = parse_alpha_list, default_value = "0.5,0")]
        alpha: AlphaList,
        /// Damping rate for the optics source (required there).
        #[arg(long)]
        gamma_tilde: Option<f64>,
    },
    /// Extract signed jump vectors and the effective Hamiltonian.
    Lindblad,
    /// Report uniform-temperature balance residuals and ellipticity.
    Balance,
}

/// Data or I/O failure mapped to exit code 2.
struct CliError(String);

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(CliError(msg)) => {
            eprintln!("qme: error: {msg}");
            std::process::exit(2);
        }
    }
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let spec = load_spec(cli)?;
    let conv = cli.convention.to_lib();
    match &cli.command {
        Command::Check => cmd_check(cli, &spec, conv),
        Command::Scan { beta1, beta2 } => cmd_scan(cli, &spec, conv, *beta1, *beta2),
        Command::Evolve {
            t_final,
            points,
            mean,
            cov_diag,
            max_step,
        } => cmd_evolve(
            cli,
            &spec,
            conv,
            *t_final,
            *points,
            mean.as_ref().map(|l| l.0.as_slice()),
            cov_diag.as_ref().map(|l| l.0.as_slice()),
            *max_step,
        ),
        Command::Oracle {
            source,
            truncation,
            pad,
            t_final,
            points,
            alpha,
            gamma_tilde,
        } => cmd_oracle(
            cli,
            &spec,
            conv,
            *source,
            &truncation.0,
            *pad,
            *t_final,
            *points,
            &alpha.0,
            *gamma_tilde,
        ),
        Command::Lindblad => cmd_lindblad(cli, &spec, conv),
        Command::Balance => cmd_balance(cli, &spec, conv),
    }
}

fn load_spec(cli: &Cli) -> Result<SystemSpec, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError(format!("cannot read config {}: {e}", path.display())))?;
    let spec: SystemSpec = serde_json::from_str(&text).map_err(|e| {
        CliError(format!(
            "config {}: line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    Ok(spec)
}

// ---------------------------------------------------------------------------
// output plumbing

fn write_artifact(cli: &Cli, content: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// 17-significant-digit scientific notation: round-trippable doubles.
fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// '#'-prefixed reproducibility header for CSV artifacts.
fn csv_meta(cli: &Cli, command: &str, spec: &SystemSpec, extra: &[(String, String)]) -> String {
    if cli.no_meta {
        return String::new();
    }
    let mut s = String::new();
    let _ = writeln!(s, "# qme {command}");
    let _ = writeln!(s, "# generated-unix: {}", unix_now());
    let _ = writeln!(s, "# convention: {}", cli.convention.name());
    let _ = writeln!(s, "# tol: {}", fmt_f(cli.tol));
    for (k, v) in extra {
        let _ = writeln!(s, "# {k}: {v}");
    }
    let compact = serde_json::to_string(spec).expect("spec serialization cannot fail");
    let _ = writeln!(s, "# config: {compact}");
    s
}

/// Reproducibility object embedded in JSON artifacts.
fn json_meta(cli: &Cli, command: &str, spec: &SystemSpec) -> Value {
    json!({
        "command": command,
        "generated_unix": unix_now(),
        "convention": cli.convention.name(),
        "tol": cli.tol,
        "config": serde_json::to_value(spec).expect("spec serialization cannot fail"),
    })
}

fn finish_json(cli: &Cli, command: &str, spec: &SystemSpec, mut body: Value) -> Result<(), CliError> {
    if !cli.no_meta {
        body.as_object_mut()
            .expect("artifact body is an object")
            .insert("meta".into(), json_meta(cli, command, spec));
    }
    let mut text = serde_json::to_string_pretty(&body).expect("JSON artifacts serialize");
    text.push('\n');
    write_artifact(cli, &text)
}

fn complex_value(z: C64) -> Value {
    json!([z.re, z.im])
}

fn cmat_value(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array((0..m.ncols()).map(|j| complex_value(m[(i, j)])).collect())
            })
            .collect(),
    )
}

fn rvec_value(v: &RVec) -> Value {
    Value::Array(v.iter().map(|&x| json!(x)).collect())
}

fn verdict_exit(v: Verdict) -> i32 {
    match v {
        Verdict::Cptp => 0,
        Verdict::NotCptp => 1,
        Verdict::Marginal => 3,
    }
}

fn decompose_spec(
    spec: &SystemSpec,
    conv: WickConvention,
    tol: f64,
) -> Result<XiDecomposition, CliError> {
    let xi = xi_matrix(spec, conv)?;
    Ok(decompose(&xi, tol))
}

// ---------------------------------------------------------------------------
// check

fn cmd_check(cli: &Cli, spec: &SystemSpec, conv: WickConvention) -> Result<i32, CliError> {
    let dec = decompose_spec(spec, conv, cli.tol)?;
    let body = json!({
        "verdict": dec.verdict.to_string(),
        "eigenvalues": rvec_value(&dec.eigenvalues),
        "xi_h": cmat_value(&dec.xi_h),
        "xi_a_norm": frob(&dec.xi_a),
    });
    finish_json(cli, "check", spec, body)?;
    Ok(verdict_exit(dec.verdict))
}

// ---------------------------------------------------------------------------
// scan

fn axis_points(r: AxisRange) -> Vec<f64> {
    (0..r.count)
        .map(|i| r.min + (r.max - r.min) * i as f64 / (r.count - 1) as f64)
        .collect()
}

fn cmd_scan(
    cli: &Cli,
    spec: &SystemSpec,
    conv: WickConvention,
    beta1: AxisRange,
    beta2: Option<AxisRange>,
) -> Result<i32, CliError> {
    if cli.jobs == 0 {
        return Err(CliError("--jobs must be >= 1".into()));
    }
    if beta2.is_some() && spec.n < 2 {
        return Err(CliError(
            "--beta2 needs a second bath; a single-bath system scans the locked diagonal".into(),
        ));
    }
    // row-major grid: beta1 is the slow (row) axis
    let b1s = axis_points(beta1);
    let points: Vec<(f64, f64)> = match beta2 {
        Some(r2) => {
            let b2s = axis_points(r2);
            b1s.iter()
                .flat_map(|&b1| b2s.iter().map(move |&b2| (b1, b2)))
                .collect()
        }
        None => b1s.iter().map(|&b| (b, b)).collect(),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError(format!("worker pool: {e}")))?;
    let tol = cli.tol;
    let rows: Result<Vec<(f64, f64, Vec<f64>, Verdict)>, qme::error::QmeError> =
        pool.install(|| {
            points
                .par_iter()
                .map(|&(b1, b2)| {
                    let mut s = spec.clone();
                    s.baths[0].beta = b1;
                    for b in s.baths.iter_mut().skip(1) {
                        b.beta = b2;
                    }
                    let xi = xi_matrix(&s, conv)?;
                    let dec = decompose(&xi, tol);
                    Ok((b1, b2, dec.eigenvalues.iter().copied().collect(), dec.verdict))
                })
                .collect()
        });
    let rows = rows?;

    let grid_desc = match beta2 {
        Some(r2) => format!(
            "beta1 {}:{}:{} x beta2 {}:{}:{}",
            beta1.min, beta1.max, beta1.count, r2.min, r2.max, r2.count
        ),
        None => format!("beta1 {}:{}:{} (beta2 locked)", beta1.min, beta1.max, beta1.count),
    };
    let mut csv = csv_meta(
        cli,
        "scan",
        spec,
        &[
            ("grid".into(), grid_desc),
            ("jobs".into(), cli.jobs.to_string()),
        ],
    );
    csv.push_str("beta1,beta2");
    for k in 1..=2 * spec.n {
        let _ = write!(csv, ",eig_{k}");
    }
    csv.push_str(",verdict\n");
    for (b1, b2, eigs, verdict) in &rows {
        let _ = write!(csv, "{},{}", fmt_f(*b1), fmt_f(*b2));
        for e in eigs {
            let _ = write!(csv, ",{}", fmt_f(*e));
        }
        let _ = writeln!(csv, ",{verdict}");
    }
    write_artifact(cli, &csv)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// evolve

#[allow(clippy::too_many_arguments)]
fn cmd_evolve(
    cli: &Cli,
    spec: &SystemSpec,
    conv: WickConvention,
    t_final: f64,
    points: usize,
    mean: Option<&[f64]>,
    cov_diag: Option<&[f64]>,
    max_step: Option<f64>,
) -> Result<i32, CliError> {
    if !(t_final > 0.0) {
        return Err(CliError("--t-final must be > 0".into()));
    }
    if points < 2 {
        return Err(CliError("--points must be >= 2".into()));
    }
    let d = spec.dim();
    let mean = match mean {
        Some(m) if m.len() == d => RVec::from_column_slice(m),
        Some(m) => {
            return Err(CliError(format!(
                "--mean needs {d} entries, got {}",
                m.len()
            )))
        }
        None => RVec::zeros(d),
    };
    let cov = match cov_diag {
        Some(c) if c.len() == d => RMat::from_diagonal(&RVec::from_column_slice(c)),
        Some(c) => {
            return Err(CliError(format!(
                "--cov-diag needs {d} entries, got {}",
                c.len()
            )))
        }
        None => RMat::identity(d, d) * (spec.hbar / 2.0),
    };

    let dec = decompose_spec(spec, conv, cli.tol)?;
    let gen = moment_generator(spec, &dec)?;
    let init = MomentState::new(mean, cov, 0.0)?;
    let grid: Vec<f64> = (0..points)
        .map(|i| t_final * i as f64 / (points - 1) as f64)
        .collect();
    let (traj, err) = evolve_moments(&gen, &init, &grid, max_step)?;

    let mut csv = csv_meta(
        cli,
        "evolve",
        spec,
        &[
            ("verdict".into(), dec.verdict.to_string()),
            ("step-halving-error".into(), fmt_f(err)),
        ],
    );
    csv.push_str("t");
    for j in 1..=d {
        let _ = write!(csv, ",mean_{j}");
    }
    for j in 1..=d {
        for k in j..=d {
            let _ = write!(csv, ",cov_{j}_{k}");
        }
    }
    csv.push_str(",physical\n");
    for st in &traj {
        let _ = write!(csv, "{}", fmt_f(st.time));
        for j in 0..d {
            let _ = write!(csv, ",{}", fmt_f(st.mean[j]));
        }
        for j in 0..d {
            for k in j..d {
                let _ = write!(csv, ",{}", fmt_f(st.cov[(j, k)]));
            }
        }
        let _ = writeln!(csv, ",{}", i32::from(st.is_physical(spec.hbar)));
    }
    write_artifact(cli, &csv)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// oracle

#[allow(clippy::too_many_arguments)]
fn cmd_oracle(
    cli: &Cli,
    spec: &SystemSpec,
    conv: WickConvention,
    source: SourceArg,
    truncation: &[usize],
    pad: usize,
    t_final: f64,
    points: usize,
    alpha: &[C64],
    gamma_tilde: Option<f64>,
) -> Result<i32, CliError> {
    if !(t_final >= 0.0) {
        return Err(CliError("--t-final must be >= 0".into()));
    }
    if points < 1 {
        return Err(CliError("--points must be >= 1".into()));
    }
    let trunc: Vec<usize> = if truncation.len() == 1 {
        vec![truncation[0]; spec.n]
    } else if truncation.len() == spec.n {
        truncation.to_vec()
    } else {
        return Err(CliError(format!(
            "--truncation needs 1 or {} entries, got {}",
            spec.n,
            truncation.len()
        )));
    };
    let f = build_fock(spec, &trunc, None)?;

    let g: Superoperator = match source {
        SourceArg::Direct => generator_direct(&f, pad)?,
        SourceArg::Quadratic => {
            let xi = xi_matrix(spec, conv)?;
            generator_quadratic(&f, &xi, &spec.xi, pad)?
        }
        SourceArg::HighTemperature => generator_high_temperature(&f)?,
        SourceArg::Optics => {
            let gt = gamma_tilde
                .ok_or_else(|| CliError("--gamma-tilde is required with --source optics".into()))?;
            generator_optics(&f, gt)?
        }
    };

    let amps: Vec<C64> = if alpha.len() == 1 {
        vec![alpha[0]; spec.n]
    } else if alpha.len() == spec.n {
        alpha.to_vec()
    } else {
        return Err(CliError(format!(
            "--alpha needs 1 or {} amplitudes, got {}",
            spec.n,
            alpha.len()
        )));
    };
    let vectors: Vec<_> = amps
        .iter()
        .zip(&trunc)
        .map(|(&a, &nl)| coherent_vector(nl, a))
        .collect();
    let rho0 = product_state(&f, &vectors)?;

    let grid: Vec<f64> = if points == 1 {
        vec![0.0]
    } else {
        (0..points)
            .map(|i| t_final * i as f64 / (points - 1) as f64)
            .collect()
    };
    let snaps = evolve_density(&g, &f, &rho0, &grid)?;
    let report = oracle_report(source.to_lib(), &f, &snaps);
    let body = serde_json::to_value(&report).expect("oracle report serializes");
    finish_json(cli, "oracle", spec, body)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// lindblad

fn cmd_lindblad(cli: &Cli, spec: &SystemSpec, conv: WickConvention) -> Result<i32, CliError> {
    let dec = decompose_spec(spec, conv, cli.tol)?;
    let ls = lindblad_decomposition(&dec, &spec.xi, &spec.hessian, None);
    let heff = effective_hamiltonian(spec, &dec);
    let recon = reconstruct_xi_h(&ls);
    let reconstruction_residual = frob(&(&recon - &dec.xi_h));
    let lambdas: Vec<Value> = ls
        .lambdas
        .iter()
        .map(|l| Value::Array(l.iter().map(|&z| complex_value(z)).collect()))
        .collect();
    let lambda_norms: Vec<f64> = ls.lambdas.iter().map(|l| l.norm()).collect();
    let body = json!({
        "verdict": dec.verdict.to_string(),
        "eigenvalues": rvec_value(&dec.eigenvalues),
        "lambdas": lambdas,
        "lambda_norms": lambda_norms,
        "signs": ls.signs,
        "eta": rvec_value(&ls.eta),
        "reconstruction_residual": reconstruction_residual,
        "effective_hamiltonian": {
            "kernel": cmat_value(&heff.kernel),
            "linear": rvec_value(&heff.linear),
            "constant": heff.constant,
            "hermiticity_residual": heff.hermiticity_residual,
        },
    });
    finish_json(cli, "lindblad", spec, body)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// balance

fn cmd_balance(cli: &Cli, spec: &SystemSpec, conv: WickConvention) -> Result<i32, CliError> {
    let dec = decompose_spec(spec, conv, cli.tol)?;
    let ls = lindblad_decomposition(&dec, &spec.xi, &spec.hessian, None);
    let report = balance_check(spec, &dec, &ls)?;
    let mut body = serde_json::to_value(&report).expect("balance report serializes");
    body.as_object_mut()
        .expect("balance report is an object")
        .insert("verdict".into(), json!(dec.verdict.to_string()));
    finish_json(cli, "balance", spec, body)?;
    Ok(0)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parser_accepts_ranges_and_rejects_degenerate_ones() {
        let r = parse_axis("0.1:5:200").unwrap();
        assert_eq!((r.min, r.max, r.count), (0.1, 5.0, 200));
        assert!(parse_axis("0:5:200").is_err(), "min must be positive");
        assert!(parse_axis("0.1:5:1").is_err(), "count must be >= 2");
        assert!(parse_axis("5:0.1:10").is_err(), "max below min");
        assert!(parse_axis("1:2").is_err(), "missing count");
    }

    #[test]
    fn float_format_is_17_significant_digits() {
        let s = fmt_f(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        let back: f64 = s.parse().unwrap();
        assert_eq!(back, std::f64::consts::PI, "round-trippable");
        assert!(!s.contains(','), "decimal point only");
    }

    #[test]
    fn alpha_parser_reads_mode_lists() {
        let one = parse_alpha_list("0.5,0").unwrap();
        assert_eq!(one.0, vec![C64::new(0.5, 0.0)]);
        let two = parse_alpha_list("0.5,0;-0.25,0.1").unwrap();
        assert_eq!(two.0[1], C64::new(-0.25, 0.1));
        assert!(parse_alpha_list("1;2,3").is_err());
        assert_eq!(parse_f64_list("1,2.5").unwrap().0, vec![1.0, 2.5]);
        assert_eq!(parse_usize_list("12,8").unwrap().0, vec![12, 8]);
    }

    #[test]
    fn axis_points_hit_both_endpoints() {
        let pts = axis_points(AxisRange {
            min: 1.0,
            max: 3.0,
            count: 5,
        });
        assert_eq!(pts, vec![1.0, 1.5, 2.0, 2.5, 3.0]);
    }
}
