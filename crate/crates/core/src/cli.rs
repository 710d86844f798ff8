//! The `toepricc` command-line front end.
//!
//! ```text
//! toepricc analyze  <file> [--tol x] [--max-iter k] [--N n] [--grid g] [--r x]
//!                          [--split s] [--out dir] [--format json|csv|text] [--no-timings]
//! toepricc sections <file> [--N n] [--r x] [--out dir] [--format csv|json]
//! toepricc invert   <file> [--N n] [--split s] [--out dir] [--format csv|json]
//! ```
//!
//! `analyze` exits with 0 (invertible), 3 (not invertible), 4 (undecided),
//! 2 (symbol singular on the unit circle) or 1 (input error). The
//! environment variable `TOEPRICC_THREADS` caps the worker pool (0 or unset
//! means one thread per core).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::factorization::{
    build_factors, check_minimality_of_factors, verify_inverse_factors, verify_product, FactorPair, Split,
};
use crate::io::{factor_pair_to_value, matrix_to_csv, realization_from_json};
use crate::matcore::{CMatrix, C64};
use crate::riccati::{
    solve_finite_section, solve_fixed_point, uniqueness_trials, FixedPointOptions, RiccatiSolution, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use crate::symbol::{check_minimality, diagnose, DiagnoseOptions, Realization, DEFAULT_GRID_SIZE};
use crate::toeplitz::{
    build_section, inverse_blocks, inverse_convergence, q_from_inverse, scaling_similarity_check, section_study,
    InverseBlocks, DEFAULT_WINDOW,
};

/// Stage tags echoed in every report.
pub const PROVENANCE_RICCATI: &str = "Eq. (1.3)";
pub const PROVENANCE_FACTORIZATION: &str = "Eq. (1.5)";
pub const PROVENANCE_INVERSE: &str = "Eq. (1.9)";
pub const PROVENANCE_SECTIONS: &str = "Eq. (2.4)";

/// Default bound on the factorization residuals for an invertible verdict.
pub const DEFAULT_VERIFY_TOL: f64 = 1e-8;
/// Tolerance on `ρ(α) ≤ 1` when validating input.
pub const STABILITY_TOL: f64 = 1e-9;
/// Random restarts used for the uniqueness report.
pub const UNIQUENESS_TRIALS: usize = 8;

pub const EXIT_INVERTIBLE: i32 = 0;
pub const EXIT_INPUT_ERROR: i32 = 1;
pub const EXIT_ZERO_ON_CIRCLE: i32 = 2;
pub const EXIT_NOT_INVERTIBLE: i32 = 3;
pub const EXIT_UNDECIDED: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "toepricc",
    version,
    about = "Invertibility of block Toeplitz operators with unit-circle poles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the full pipeline and emit a report.
    Analyze(AnalyzeArgs),
    /// Write the finite sections T_N and their scaled counterparts.
    Sections(SectionsArgs),
    /// Write inverse blocks, their generating sequences and the factors.
    Invert(InvertArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    pub file: PathBuf,
    /// Fixed-point stopping tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Largest section order of the convergence study.
    #[arg(long = "N", default_value_t = 64)]
    pub n: usize,
    /// Grid points per circle for scans and residuals.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid: usize,
    /// Scaling parameter (default: derived from the pole data).
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value_t = Split::IdentityDelta)]
    pub split: Split,
    /// Output directory (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Report zero timings so that output is byte-stable.
    #[arg(long)]
    pub no_timings: bool,
}

#[derive(Args, Debug)]
pub struct SectionsArgs {
    pub file: PathBuf,
    #[arg(long = "N", default_value_t = 64)]
    pub n: usize,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
    pub format: DataFormat,
}

#[derive(Args, Debug)]
pub struct InvertArgs {
    pub file: PathBuf,
    #[arg(long = "N", default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = Split::IdentityDelta)]
    pub split: Split,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
    pub format: DataFormat,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
}

/// Pipeline settings independent of file handling.
#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub n: usize,
    pub grid: usize,
    pub r: Option<f64>,
    pub split: Split,
    pub verify_tol: f64,
    pub timings: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            n: 64,
            grid: DEFAULT_GRID_SIZE,
            r: None,
            split: Split::IdentityDelta,
            verify_tol: DEFAULT_VERIFY_TOL,
            timings: true,
        }
    }
}

impl From<&AnalyzeArgs> for AnalysisOptions {
    fn from(a: &AnalyzeArgs) -> Self {
        Self {
            tol: a.tol,
            max_iter: a.max_iter,
            n: a.n,
            grid: a.grid,
            r: a.r,
            split: a.split,
            verify_tol: DEFAULT_VERIFY_TOL,
            timings: !a.no_timings,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Invertible,
    NotInvertible,
    Undecided,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Invertible => EXIT_INVERTIBLE,
            Verdict::NotInvertible => EXIT_NOT_INVERTIBLE,
            Verdict::Undecided => EXIT_UNDECIDED,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Invertible => "invertible",
            Verdict::NotInvertible => "not_invertible",
            Verdict::Undecided => "undecided",
        }
    }
}

fn pair(z: C64) -> [f64; 2] {
    [z.re + 0.0, z.im + 0.0]
}

#[derive(Clone, Debug, Serialize)]
pub struct InputEcho {
    pub m: usize,
    pub s: usize,
    pub t: usize,
    pub rho_a: f64,
    pub rho_alpha: f64,
    pub minimal: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PoleEcho {
    pub value: [f64; 2],
    pub on_circle: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsEcho {
    pub plus_poles: Vec<[f64; 2]>,
    pub circle_poles: Vec<PoleEcho>,
    pub zero_scan_min: f64,
    pub zero_scan_argmin: [f64; 2],
    pub r0_estimate: f64,
    pub scan_offset: f64,
    /// Scaling parameter used by the finite-section checks.
    pub r: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessEcho {
    pub trials: usize,
    pub stabilizing_runs: usize,
    pub max_deviation: f64,
    pub unique: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiniteSectionRow {
    pub n: usize,
    /// `‖Q_N - Q‖_F`, absent when the section is singular.
    pub deviation: Option<f64>,
    /// `‖Q_N(r) - Q_N(1)‖_F` at the working radius.
    pub r_deviation: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RiccatiEcho {
    pub provenance: &'static str,
    pub converged: bool,
    /// Why the iteration stopped without a fixed point.
    pub failure: Option<String>,
    pub q: Option<CMatrix>,
    pub pivot_ok: bool,
    pub stabilizing: bool,
    pub rho_a_circ: Option<f64>,
    pub rho_alpha_circ: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub uniqueness: Option<UniquenessEcho>,
    pub finite_sections: Vec<FiniteSectionRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimalityFlags {
    pub theta: bool,
    pub psi: bool,
    pub theta_inv: bool,
    pub psi_inv: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorizationEcho {
    pub provenance: &'static str,
    pub split: String,
    pub d: CMatrix,
    pub delta: CMatrix,
    pub product_residual: f64,
    pub inverse_residual: f64,
    pub minimality: MinimalityFlags,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceEcho {
    pub n: usize,
    pub max_block_error: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SectionStudyEcho {
    pub n: usize,
    pub singular: bool,
    pub window_change: Option<f64>,
    pub window_norm: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InverseCheck {
    pub provenance: [&'static str; 2],
    pub window: usize,
    pub convergence: Vec<ConvergenceEcho>,
    /// `‖q_from_inverse(N) - Q‖_F` at the largest `N`.
    pub q_formula_deviation: Option<f64>,
    pub section_study: Vec<SectionStudyEcho>,
    pub singular_signal: bool,
    pub divergence_signal: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub validate: f64,
    pub diagnose: f64,
    pub riccati: f64,
    pub factorization: f64,
    pub inverse_check: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub input_echo: InputEcho,
    pub diagnostics: DiagnosticsEcho,
    pub riccati: RiccatiEcho,
    pub factorization: Option<FactorizationEcho>,
    pub inverse_check: InverseCheck,
    pub verdict: Verdict,
    pub timings: Timings,
}

/// Section orders `N/8, N/4, N/2, N` (deduplicated, at least 1).
pub fn section_schedule(n: usize) -> Vec<usize> {
    let mut ns: Vec<usize> = [n / 8, n / 4, n / 2, n].iter().map(|&k| k.max(1)).collect();
    ns.dedup();
    ns
}

/// Checks the stability and minimality requirements on an input
/// realization.
pub fn validate(r: &Realization) -> Result<InputEcho> {
    let (rho_a, rho_alpha) = r.check_stability(STABILITY_TOL)?;
    let mini = check_minimality(r)?;
    if !mini.passed() {
        return Err(Error::InvalidRealization(format!(
            "realization is not minimal: ranks (A,B) {}, (C,A) {} of {}; (alpha,beta) {}, (gamma,alpha) {} of {}",
            mini.plus_controllability_rank,
            mini.plus_observability_rank,
            mini.s,
            mini.circle_controllability_rank,
            mini.circle_observability_rank,
            mini.t
        )));
    }
    Ok(InputEcho {
        m: r.m(),
        s: r.s(),
        t: r.t(),
        rho_a,
        rho_alpha,
        minimal: true,
    })
}

fn elapsed(t: Instant, on: bool) -> f64 {
    if on {
        t.elapsed().as_secs_f64()
    } else {
        0.0
    }
}

fn working_radius(r: &Realization, requested: Option<f64>, auto: f64) -> Result<f64> {
    match requested {
        Some(1.0) => Ok(1.0),
        Some(x) => r.scale(x).map(|_| x),
        None => Ok(auto),
    }
}

fn finite_section_rows(r: &Realization, q: Option<&CMatrix>, ns: &[usize], radius: f64) -> Vec<FiniteSectionRow> {
    ns.iter()
        .map(|&n| {
            let base = solve_finite_section(r, n, 1.0).ok();
            let scaled = if radius == 1.0 {
                base.clone()
            } else {
                solve_finite_section(r, n, radius).ok()
            };
            FiniteSectionRow {
                n,
                deviation: match (&base, q) {
                    (Some(b), Some(q)) => Some(b.dist(q)),
                    _ => None,
                },
                r_deviation: match (&base, &scaled) {
                    (Some(b), Some(s)) => Some(b.dist(s)),
                    _ => None,
                },
            }
        })
        .collect()
}

/// Runs the analysis pipeline on a validated realization.
///
/// Returns [`Error::ZeroOnCircle`] when the grid scan finds `σ_min(Ω)`
/// below the zero tolerance on the scanned circles.
pub fn analyze(r: &Realization, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    let start = Instant::now();
    let on = opts.timings;
    let mut timings = Timings::default();

    let t0 = Instant::now();
    let input_echo = validate(r)?;
    timings.validate = elapsed(t0, on);

    let t0 = Instant::now();
    let diag_opts = DiagnoseOptions {
        grid_size: opts.grid,
        ..DiagnoseOptions::default()
    };
    let diag = diagnose(r, &diag_opts)?;
    if diag.zero_scan_min < diag_opts.tol_zero {
        return Err(Error::ZeroOnCircle {
            min: diag.zero_scan_min,
            re: diag.zero_scan_argmin.re,
            im: diag.zero_scan_argmin.im,
        });
    }
    let radius = working_radius(r, opts.r, diag.working_radius())?;
    let diagnostics = DiagnosticsEcho {
        plus_poles: diag.plus_poles.iter().copied().map(pair).collect(),
        circle_poles: diag
            .circle_poles
            .iter()
            .map(|p| PoleEcho {
                value: pair(p.value),
                on_circle: p.on_circle,
            })
            .collect(),
        zero_scan_min: diag.zero_scan_min,
        zero_scan_argmin: pair(diag.zero_scan_argmin),
        r0_estimate: diag.r0_estimate,
        scan_offset: diag.scan_offset,
        r: radius,
    };
    timings.diagnose = elapsed(t0, on);

    let t0 = Instant::now();
    let fp = FixedPointOptions {
        tol: opts.tol,
        max_iter: opts.max_iter,
    };
    let ns = section_schedule(opts.n);
    let solved = solve_fixed_point(r, &fp);
    let (sol, failure): (Option<RiccatiSolution>, Option<String>) = match solved {
        Ok(sol) if !sol.pivot_ok => (Some(sol), Some(Error::PivotSingular { iteration: 0 }.to_string())),
        Ok(sol) => (Some(sol), None),
        Err(e @ (Error::PivotSingular { .. } | Error::RiccatiNonConvergence { .. })) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let stabilizing = sol.as_ref().is_some_and(|s| s.stabilizing);
    let uniqueness = sol.as_ref().filter(|s| s.stabilizing).map(|s| {
        let u = uniqueness_trials(r, s, UNIQUENESS_TRIALS, 0, &fp);
        UniquenessEcho {
            trials: u.trials,
            stabilizing_runs: u.stabilizing_runs,
            max_deviation: u.max_deviation,
            unique: u.unique(),
        }
    });
    let q_ref = sol.as_ref().filter(|s| s.stabilizing).map(|s| &s.q);
    let riccati = RiccatiEcho {
        provenance: PROVENANCE_RICCATI,
        converged: sol.is_some(),
        failure,
        q: sol.as_ref().map(|s| s.q.clone()),
        pivot_ok: sol.as_ref().is_some_and(|s| s.pivot_ok),
        stabilizing,
        rho_a_circ: sol.as_ref().and_then(|s| s.closed_loop.as_ref()).map(|c| c.rho_a_circ),
        rho_alpha_circ: sol
            .as_ref()
            .and_then(|s| s.closed_loop.as_ref())
            .map(|c| c.rho_alpha_circ),
        residual: sol.as_ref().map(|s| s.residual).filter(|x| x.is_finite()),
        iterations: sol.as_ref().map_or(0, |s| s.iterations),
        trace: sol.as_ref().map(|s| s.trace.clone()).unwrap_or_default(),
        uniqueness,
        finite_sections: finite_section_rows(r, q_ref, &ns, radius),
    };
    timings.riccati = elapsed(t0, on);

    let t0 = Instant::now();
    let mut factors: Option<FactorPair> = None;
    let factorization = match sol.as_ref().filter(|s| s.stabilizing) {
        Some(s) => {
            let f = build_factors(r, s, opts.split)?;
            let product_residual = verify_product(r, &f, opts.grid)?;
            let inverse_residual = verify_inverse_factors(&f, opts.grid)?;
            let flags = check_minimality_of_factors(&f)?.flags();
            let echo = FactorizationEcho {
                provenance: PROVENANCE_FACTORIZATION,
                split: f.split.to_string(),
                d: f.d.clone(),
                delta: f.delta.clone(),
                product_residual,
                inverse_residual,
                minimality: MinimalityFlags {
                    theta: flags[0],
                    psi: flags[1],
                    theta_inv: flags[2],
                    psi_inv: flags[3],
                },
            };
            factors = Some(f);
            Some(echo)
        }
        None => None,
    };
    timings.factorization = elapsed(t0, on);

    let t0 = Instant::now();
    let window = ns.iter().copied().min().unwrap_or(1).min(DEFAULT_WINDOW);
    let (convergence, q_formula_deviation, study) = match (&factors, q_ref) {
        (Some(f), Some(q)) => {
            let rows = inverse_convergence(r, f, &ns, window)
                .into_iter()
                .map(|row| ConvergenceEcho {
                    n: row.n,
                    max_block_error: row.max_block_error,
                })
                .collect();
            let qn = q_from_inverse(r, f, opts.n.max(1));
            (rows, Some(qn.dist(q)), None)
        }
        _ => (Vec::new(), None, Some(section_study(r, &ns, window))),
    };
    let inverse_check = InverseCheck {
        provenance: [PROVENANCE_INVERSE, PROVENANCE_SECTIONS],
        window,
        convergence,
        q_formula_deviation,
        section_study: study
            .as_ref()
            .map(|s| {
                s.rows
                    .iter()
                    .map(|row| SectionStudyEcho {
                        n: row.n,
                        singular: row.singular,
                        window_change: row.window_change,
                        window_norm: row.window_norm,
                    })
                    .collect()
            })
            .unwrap_or_default(),
        singular_signal: study.as_ref().is_some_and(|s| s.singular_signal),
        divergence_signal: study.as_ref().is_some_and(|s| s.divergence_signal),
    };
    timings.inverse_check = elapsed(t0, on);

    let verdict = match (&factorization, &study) {
        (Some(fe), _) if fe.product_residual < opts.verify_tol && fe.inverse_residual < opts.verify_tol => {
            Verdict::Invertible
        }
        (None, Some(st)) if st.signals_non_invertibility() => Verdict::NotInvertible,
        _ => Verdict::Undecided,
    };
    timings.total = elapsed(start, on);

    Ok(AnalysisReport {
        input_echo,
        diagnostics,
        riccati,
        factorization,
        inverse_check,
        verdict,
        timings,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"))
}

/// Human-readable summary.
pub fn report_to_text(rep: &AnalysisReport) -> String {
    let mut out = String::new();
    let e = &rep.input_echo;
    let _ = writeln!(out, "verdict: {}", rep.verdict.as_str());
    let _ = writeln!(out, "dimensions: m={} s={} t={}", e.m, e.s, e.t);
    let _ = writeln!(out, "rho(A) = {:.6}, rho(alpha) = {:.6}", e.rho_a, e.rho_alpha);
    let d = &rep.diagnostics;
    let on_circle = d.circle_poles.iter().filter(|p| p.on_circle).count();
    let _ = writeln!(out, "poles on the unit circle: {on_circle}");
    let _ = writeln!(out, "min sigma_min(Omega) on scan: {:.6e}", d.zero_scan_min);
    let _ = writeln!(out, "r0 estimate: {:.6}, working r: {:.6}", d.r0_estimate, d.r);
    let ric = &rep.riccati;
    let _ = writeln!(out, "[{}] Riccati", ric.provenance);
    match &ric.failure {
        Some(msg) => {
            let _ = writeln!(out, "  no fixed point: {msg}");
        }
        None => {
            let _ = writeln!(
                out,
                "  iterations {}, residual {}, stabilizing {}",
                ric.iterations,
                opt(ric.residual),
                ric.stabilizing
            );
            let _ = writeln!(
                out,
                "  rho(A_circ) {}, rho(alpha_circ) {}",
                opt(ric.rho_a_circ),
                opt(ric.rho_alpha_circ)
            );
        }
    }
    if let Some(u) = &ric.uniqueness {
        let _ = writeln!(
            out,
            "  restarts: {}/{} stabilizing, max deviation {:.3e}",
            u.stabilizing_runs, u.trials, u.max_deviation
        );
    }
    for row in &ric.finite_sections {
        let _ = writeln!(
            out,
            "  N={:<4} |Q_N - Q| {}  |Q_N(r) - Q_N(1)| {}",
            row.n,
            opt(row.deviation),
            opt(row.r_deviation)
        );
    }
    if let Some(f) = &rep.factorization {
        let _ = writeln!(out, "[{}] factorization ({})", f.provenance, f.split);
        let _ = writeln!(out, "  product residual {:.3e}", f.product_residual);
        let _ = writeln!(out, "  inverse residual {:.3e}", f.inverse_residual);
        let m = &f.minimality;
        let _ = writeln!(
            out,
            "  minimal: theta {} psi {} theta_inv {} psi_inv {}",
            m.theta, m.psi, m.theta_inv, m.psi_inv
        );
    }
    let ic = &rep.inverse_check;
    let _ = writeln!(
        out,
        "[{} / {}] inverse check, window {}",
        ic.provenance[0], ic.provenance[1], ic.window
    );
    for row in &ic.convergence {
        let _ = writeln!(out, "  N={:<4} max block error {}", row.n, opt(row.max_block_error));
    }
    if let Some(dev) = ic.q_formula_deviation {
        let _ = writeln!(out, "  Q from inverse blocks: deviation {dev:.3e}");
    }
    for row in &ic.section_study {
        let _ = writeln!(
            out,
            "  N={:<4} singular {} window change {}",
            row.n,
            row.singular,
            opt(row.window_change)
        );
    }
    out
}

/// Convergence tables as CSV: `table,n,value` rows.
pub fn report_to_csv(rep: &AnalysisReport) -> String {
    let mut out = String::from("table,n,value\n");
    let cell = |x: Option<f64>| x.map_or_else(String::new, |v| format!("{v:.16e}"));
    for row in &rep.riccati.finite_sections {
        let _ = writeln!(out, "finite_section_deviation,{},{}", row.n, cell(row.deviation));
    }
    for row in &rep.riccati.finite_sections {
        let _ = writeln!(out, "finite_section_r_deviation,{},{}", row.n, cell(row.r_deviation));
    }
    for row in &rep.inverse_check.convergence {
        let _ = writeln!(out, "inverse_block_error,{},{}", row.n, cell(row.max_block_error));
    }
    for row in &rep.inverse_check.section_study {
        let _ = writeln!(out, "section_window_change,{},{}", row.n, cell(row.window_change));
    }
    for (k, step) in rep.riccati.trace.iter().enumerate() {
        let _ = writeln!(out, "riccati_step,{},{:.16e}", k + 1, step);
    }
    out
}

pub fn report_to_json(rep: &AnalysisReport) -> String {
    let mut s = serde_json::to_string_pretty(rep).expect("report serializes");
    s.push('\n');
    s
}

fn load(path: &Path) -> Result<Realization> {
    let text = fs::read_to_string(path).map_err(|e| Error::Input {
        field: path.display().to_string(),
        message: e.to_string(),
    })?;
    realization_from_json(&text)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::ZeroOnCircle { .. } => EXIT_ZERO_ON_CIRCLE,
        Error::NotStabilizing => EXIT_NOT_INVERTIBLE,
        _ => EXIT_INPUT_ERROR,
    }
}

fn fail(err: &Error) -> i32 {
    eprintln!("error: {err}");
    exit_code_for(err)
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> i32 {
    let run = || -> Result<AnalysisReport> {
        let r = load(&args.file)?;
        let report = analyze(&r, &AnalysisOptions::from(args))?;
        let (name, body) = match args.format {
            Format::Json => ("report.json", report_to_json(&report)),
            Format::Csv => ("report.csv", report_to_csv(&report)),
            Format::Text => ("report.txt", report_to_text(&report)),
        };
        match &args.out {
            Some(dir) => write_file(dir, name, &body)?,
            None => print!("{body}"),
        }
        Ok(report)
    };
    match run() {
        Ok(rep) => rep.verdict.exit_code(),
        Err(e) => fail(&e),
    }
}

fn matrix_file(dir: &Path, stem: &str, m: &CMatrix, format: DataFormat) -> Result<()> {
    match format {
        DataFormat::Csv => write_file(dir, &format!("{stem}.csv"), &matrix_to_csv(m)),
        DataFormat::Json => {
            let mut s = serde_json::to_string(m)?;
            s.push('\n');
            write_file(dir, &format!("{stem}.json"), &s)
        }
    }
}

/// Writes `section.*`, `section_scaled.*` and `similarity.json`.
pub fn cmd_sections(args: &SectionsArgs) -> i32 {
    let run = || -> Result<()> {
        let r = load(&args.file)?;
        validate(&r)?;
        let radius = match args.r {
            Some(x) => working_radius(&r, Some(x), 1.0)?,
            None => diagnose(&r, &DiagnoseOptions::default())?.working_radius(),
        };
        let n = args.n;
        let base = build_section(&r, n);
        let scaled = if radius == 1.0 {
            base.clone()
        } else {
            build_section(&r.scale(radius)?, n)
        };
        let residual = scaling_similarity_check(&r, n, radius)?;
        matrix_file(&args.out, "section", base.data(), args.format)?;
        matrix_file(&args.out, "section_scaled", scaled.data(), args.format)?;
        let summary = json!({
            "provenance": PROVENANCE_SECTIONS,
            "N": n,
            "m": r.m(),
            "r": radius,
            "similarity_residual": residual,
        });
        let mut s = serde_json::to_string_pretty(&summary)?;
        s.push('\n');
        write_file(&args.out, "similarity.json", &s)?;
        Ok(())
    };
    match run() {
        Ok(()) => 0,
        Err(e) => fail(&e),
    }
}

fn stack_blocks(blocks: &[CMatrix], m: usize) -> CMatrix {
    let mut out = CMatrix::zeros(blocks.len() * m, m);
    for (k, b) in blocks.iter().enumerate() {
        out.set_block(k * m, 0, b);
    }
    out
}

/// Writes `inverse_blocks.*`, `theta_x.*`, `psi_x.*` (the generating
/// sequences stacked vertically) and `factors.json`.
pub fn cmd_invert(args: &InvertArgs) -> i32 {
    let run = || -> Result<InverseBlocks> {
        let r = load(&args.file)?;
        validate(&r)?;
        let fp = FixedPointOptions {
            tol: args.tol,
            max_iter: args.max_iter,
        };
        let sol = match solve_fixed_point(&r, &fp) {
            Ok(sol) if sol.stabilizing => sol,
            Ok(_) | Err(Error::PivotSingular { .. } | Error::RiccatiNonConvergence { .. }) => {
                return Err(Error::NotStabilizing)
            }
            Err(e) => return Err(e),
        };
        let f = build_factors(&r, &sol, args.split)?;
        let inv = inverse_blocks(&f, args.n);
        let m = r.m();
        matrix_file(&args.out, "inverse_blocks", &inv.data, args.format)?;
        matrix_file(&args.out, "theta_x", &stack_blocks(&inv.theta_x, m), args.format)?;
        matrix_file(&args.out, "psi_x", &stack_blocks(&inv.psi_x, m), args.format)?;
        let mut doc = factor_pair_to_value(&f);
        doc["provenance"] = json!(PROVENANCE_INVERSE);
        doc["q"] = serde_json::to_value(&sol.q)?;
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        write_file(&args.out, "factors.json", &s)?;
        Ok(inv)
    };
    match run() {
        Ok(_) => 0,
        Err(e) => fail(&e),
    }
}

/// Configures the global worker pool from `TOEPRICC_THREADS`.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("TOEPRICC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| Error::Input {
        field: "TOEPRICC_THREADS".into(),
        message: format!("expected a non-negative integer, got `{raw}`"),
    })?;
    // a pool that is already initialized keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> i32 {
    if let Err(e) = init_threads() {
        return fail(&e);
    }
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Sections(a) => cmd_sections(a),
        Command::Invert(a) => cmd_invert(a),
    }
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT_ERROR } else { 0 };
        }
    };
    run(&cli)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::c64;

    fn real(rows: usize, cols: usize, v: &[f64]) -> CMatrix {
        CMatrix::from_real(rows, cols, v).unwrap()
    }

    fn worked() -> Realization {
        Realization::new(
            real(1, 1, &[2.5]),
            real(1, 1, &[1.0]),
            real(1, 1, &[0.0]),
            real(1, 1, &[1.0]),
            real(1, 1, &[1.0]),
            real(1, 1, &[1.0]),
            real(1, 1, &[1.5]),
        )
        .unwrap()
    }

    fn quiet() -> AnalysisOptions {
        AnalysisOptions {
            timings: false,
            ..AnalysisOptions::default()
        }
    }

    #[test]
    fn schedule() {
        assert_eq!(section_schedule(64), vec![8, 16, 32, 64]);
        assert_eq!(section_schedule(4), vec![1, 2, 4]);
        assert_eq!(section_schedule(1), vec![1]);
    }

    #[test]
    fn worked_symbol_is_invertible() {
        let rep = analyze(&worked(), &quiet()).unwrap();
        assert_eq!(rep.verdict, Verdict::Invertible);
        let q = rep.riccati.q.as_ref().unwrap();
        assert!((q[(0, 0)] - c64(0.5, 0.0)).norm() < 1e-10);
        assert!(rep.factorization.as_ref().unwrap().product_residual < 1e-10);
        assert!(rep.riccati.uniqueness.as_ref().unwrap().unique);
    }

    #[test]
    fn simple_pole_is_not_invertible() {
        let r = Realization::circle(
            real(1, 1, &[0.0]),
            real(1, 1, &[1.0]),
            real(1, 1, &[1.0]),
            real(1, 1, &[1.0]),
        )
        .unwrap();
        let rep = analyze(&r, &quiet()).unwrap();
        assert_eq!(rep.verdict, Verdict::NotInvertible);
        assert!(rep.riccati.failure.is_some());
        assert!(rep.inverse_check.singular_signal);
    }

    #[test]
    fn identity_symbol() {
        let r = Realization::constant(CMatrix::identity(2)).unwrap();
        let rep = analyze(&r, &quiet()).unwrap();
        assert_eq!(rep.verdict, Verdict::Invertible);
        assert!(rep.riccati.q.as_ref().unwrap().is_empty());
    }

    #[test]
    fn zero_on_circle_is_reported() {
        // Ω(z) = 1 + z has a zero at -1
        let r = Realization::plus(
            real(1, 1, &[1.0]),
            real(1, 1, &[1.0]),
            real(1, 1, &[0.0]),
            real(1, 1, &[1.0]),
        )
        .unwrap();
        let err = analyze(&r, &quiet()).unwrap_err();
        assert!(matches!(err, Error::ZeroOnCircle { .. }));
        assert_eq!(exit_code_for(&err), EXIT_ZERO_ON_CIRCLE);
    }

    #[test]
    fn non_minimal_input_is_rejected() {
        let r = Realization::plus(
            real(1, 1, &[1.0]),
            real(1, 2, &[1.0, 0.0]),
            real(2, 2, &[0.5, 0.0, 0.0, 0.2]),
            real(2, 1, &[1.0, 0.0]),
        )
        .unwrap();
        assert!(matches!(validate(&r), Err(Error::InvalidRealization(_))));
    }

    #[test]
    fn report_has_fixed_top_level_keys() {
        let rep = analyze(&worked(), &quiet()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&report_to_json(&rep)).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        let mut expect = vec![
            "input_echo",
            "diagnostics",
            "riccati",
            "factorization",
            "inverse_check",
            "verdict",
            "timings",
        ];
        expect.sort_unstable();
        let mut got = keys.clone();
        got.sort_unstable();
        assert_eq!(got, expect);
        assert_eq!(v["verdict"], "invertible");
        assert_eq!(v["riccati"]["provenance"], PROVENANCE_RICCATI);
    }

    #[test]
    fn reports_are_deterministic() {
        let a = report_to_json(&analyze(&worked(), &quiet()).unwrap());
        let b = report_to_json(&analyze(&worked(), &quiet()).unwrap());
        assert_eq!(a, b);
    }
}
