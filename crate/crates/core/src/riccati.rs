//! Nonsymmetric discrete algebraic Riccati equation
//!
//! ```text
//! Q = αQA + (β - αQB)(R0 - γQB)^{-1}(C - γQA)
//! ```
//!
//! A solution is *stabilizing* when the pivot `R0 - γQB` is invertible and
//! both closed-loop matrices
//!
//! ```text
//! A∘ = A - B(R0 - γQB)^{-1}(C - γQA)
//! α∘ = α - (β - αQB)(R0 - γQB)^{-1}γ
//! ```
//!
//! have spectral radius below one. Two independent routes to the stabilizing
//! solution live here: fixed-point iteration of the Riccati map started at
//! zero, and the finite-section formula `Q_N = 𝒞_N T_N^{-1} 𝒪_N`. Iterating
//! the map `N` times from zero reproduces `Q_N` exactly, so the two routes
//! agree up to round-off at every `N`, not only in the limit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matcore::{spectral_radius, CMatrix, Lu, C64};
use crate::symbol::{controllability_matrix, observability_matrix, Realization};
use crate::toeplitz::build_section;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Distance below which two stabilizing solutions count as the same.
pub const UNIQUENESS_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClosedLoop {
    pub a_circ: CMatrix,
    pub alpha_circ: CMatrix,
    pub rho_a_circ: f64,
    pub rho_alpha_circ: f64,
}

#[derive(Clone, Debug)]
pub struct RiccatiSolution {
    /// `t × s` candidate solution.
    pub q: CMatrix,
    /// `R0 - γQB` is invertible.
    pub pivot_ok: bool,
    /// Present whenever the pivot is invertible.
    pub closed_loop: Option<ClosedLoop>,
    pub stabilizing: bool,
    /// `‖Q - F(Q)‖_F`; infinite when the pivot is singular at `Q`.
    pub residual: f64,
    pub iterations: usize,
    /// `‖Q^{k+1} - Q^k‖_F` for each iteration.
    pub trace: Vec<f64>,
}

impl RiccatiSolution {
    /// Fills in the verdict fields for a given `Q`.
    pub fn from_q(r: &Realization, q: CMatrix, iterations: usize, trace: Vec<f64>) -> Result<Self> {
        check_q_shape(r, &q)?;
        let (pivot_ok, closed_loop) = match closed_loop(r, &q) {
            Ok(cl) => (true, Some(cl)),
            Err(Error::PivotSingular { .. }) => (false, None),
            Err(e) => return Err(e),
        };
        let residual = match riccati_map(r, &q) {
            Ok(fq) => q.dist(&fq),
            Err(Error::PivotSingular { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let stabilizing = closed_loop
            .as_ref()
            .is_some_and(|cl| cl.rho_a_circ < 1.0 && cl.rho_alpha_circ < 1.0);
        Ok(Self {
            q,
            pivot_ok,
            closed_loop,
            stabilizing,
            residual,
            iterations,
            trace,
        })
    }

    pub fn a_circ(&self) -> Option<&CMatrix> {
        self.closed_loop.as_ref().map(|cl| &cl.a_circ)
    }

    pub fn alpha_circ(&self) -> Option<&CMatrix> {
        self.closed_loop.as_ref().map(|cl| &cl.alpha_circ)
    }
}

fn check_q_shape(r: &Realization, q: &CMatrix) -> Result<()> {
    if q.shape() != (r.t(), r.s()) {
        return Err(Error::DimensionMismatch(format!(
            "Q must be {}x{}, got {}x{}",
            r.t(),
            r.s(),
            q.rows(),
            q.cols()
        )));
    }
    Ok(())
}

/// `R0 - γQB`.
pub fn pivot(r: &Realization, q: &CMatrix) -> CMatrix {
    if q.is_empty() {
        return r.r0().clone();
    }
    r.r0() - &(&(r.gamma() * q) * r.b())
}

fn factor_pivot(r: &Realization, q: &CMatrix) -> Result<Lu> {
    Lu::new(&pivot(r, q)).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::PivotSingular { iteration: 0 },
        other => other,
    })
}

/// One application of the Riccati map
/// `F(Q) = αQA + (β - αQB)(R0 - γQB)^{-1}(C - γQA)`.
///
/// An empty `Q` (`s = 0` or `t = 0`) maps to itself.
pub fn riccati_map(r: &Realization, q: &CMatrix) -> Result<CMatrix> {
    check_q_shape(r, q)?;
    if q.is_empty() {
        return Ok(q.clone());
    }
    let lu = factor_pivot(r, q)?;
    let alpha_q = r.alpha() * q;
    let rhs = r.c() - &(&(r.gamma() * q) * r.a());
    let gain = lu.solve(&rhs)?;
    let left = r.beta() - &(&alpha_q * r.b());
    Ok(&(&alpha_q * r.a()) + &(&left * &gain))
}

/// Closed-loop matrices `A∘`, `α∘` and their spectral radii.
pub fn closed_loop(r: &Realization, q: &CMatrix) -> Result<ClosedLoop> {
    check_q_shape(r, q)?;
    let lu = factor_pivot(r, q)?;
    let (s, t) = (r.s(), r.t());
    let a_circ = if s == 0 {
        CMatrix::zeros(0, 0)
    } else {
        let gq_a = if t == 0 {
            CMatrix::zeros(r.m(), s)
        } else {
            &(r.gamma() * q) * r.a()
        };
        let gain = lu.solve(&(r.c() - &gq_a))?;
        r.a() - &(r.b() * &gain)
    };
    let alpha_circ = if t == 0 {
        CMatrix::zeros(0, 0)
    } else {
        let aq_b = if s == 0 {
            CMatrix::zeros(t, r.m())
        } else {
            &(r.alpha() * q) * r.b()
        };
        let gain = lu.solve(r.gamma())?;
        r.alpha() - &(&(r.beta() - &aq_b) * &gain)
    };
    Ok(ClosedLoop {
        rho_a_circ: spectral_radius(&a_circ)?,
        rho_alpha_circ: spectral_radius(&alpha_circ)?,
        a_circ,
        alpha_circ,
    })
}

/// Fixed-point iteration `Q^{k+1} = F(Q^k)` from `Q^0 = 0`.
///
/// Stops when `‖Q^{k+1} - Q^k‖_F ≤ tol·(1 + ‖Q^k‖_F)`. A singular pivot at
/// some iterate is reported as [`Error::PivotSingular`], exhaustion of the
/// iteration budget as [`Error::RiccatiNonConvergence`]. A converged but
/// non-stabilizing fixed point is returned with `stabilizing = false`.
pub fn solve_fixed_point(r: &Realization, opts: &FixedPointOptions) -> Result<RiccatiSolution> {
    solve_fixed_point_from(r, CMatrix::zeros(r.t(), r.s()), opts)
}

pub fn solve_fixed_point_from(r: &Realization, q0: CMatrix, opts: &FixedPointOptions) -> Result<RiccatiSolution> {
    check_q_shape(r, &q0)?;
    if q0.is_empty() {
        return RiccatiSolution::from_q(r, q0, 0, Vec::new());
    }
    let mut q = q0;
    let mut trace = Vec::new();
    for k in 0..opts.max_iter {
        let next = riccati_map(r, &q).map_err(|e| match e {
            Error::PivotSingular { .. } => Error::PivotSingular { iteration: k },
            other => other,
        })?;
        let step = next.dist(&q);
        let scale = 1.0 + q.norm_fro();
        trace.push(step);
        if !step.is_finite() {
            return Err(Error::RiccatiNonConvergence {
                iterations: k + 1,
                step,
            });
        }
        q = next;
        if step <= opts.tol * scale {
            return RiccatiSolution::from_q(r, q, k + 1, trace);
        }
    }
    Err(Error::RiccatiNonConvergence {
        iterations: opts.max_iter,
        step: trace.last().copied().unwrap_or(f64::NAN),
    })
}

/// `Q_N = 𝒞_{β,α,N} T_{Ω,N}^{-1} 𝒪_{C,A,N}`, computed in the coordinates of
/// `Ω_r(z) = Ω(rz)`. For `r > 1` this must equal the unscaled value; `r = 1`
/// works directly with `Ω`.
pub fn solve_finite_section(r: &Realization, n: usize, radius: f64) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::DimensionMismatch("finite section needs N >= 1".into()));
    }
    if r.s() == 0 || r.t() == 0 {
        return Ok(CMatrix::zeros(r.t(), r.s()));
    }
    let scaled = if radius == 1.0 { r.clone() } else { r.scale(radius)? };
    let section = build_section(&scaled, n);
    let lu = Lu::new(section.data()).map_err(|_| Error::SectionSingular { n })?;
    let obs = observability_matrix(scaled.c(), scaled.a(), n);
    let ctrl = controllability_matrix(scaled.alpha(), scaled.beta(), n);
    Ok(&ctrl * &lu.solve(&obs)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessReport {
    pub trials: usize,
    /// Restarts that converged to a stabilizing fixed point.
    pub stabilizing_runs: usize,
    /// Largest distance from the reference solution among those runs.
    pub max_deviation: f64,
}

impl UniquenessReport {
    pub fn unique(&self) -> bool {
        self.max_deviation <= UNIQUENESS_TOL
    }
}

/// Restarts the fixed-point iteration from `trials` random `Q^0` with
/// `‖Q^0‖_F ≤ 1` and measures how far the stabilizing end points land from
/// `reference`. Breakdowns and non-stabilizing end points are ignored.
/// Trial `i` draws from a generator seeded with `seed + i`, so the report
/// does not depend on scheduling.
pub fn uniqueness_trials(
    r: &Realization,
    reference: &RiccatiSolution,
    trials: usize,
    seed: u64,
    opts: &FixedPointOptions,
) -> UniquenessReport {
    let (t, s) = (r.t(), r.s());
    let outcomes: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            if t == 0 || s == 0 {
                return Some(0.0);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let raw = CMatrix::from_fn(t, s, |_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let norm = raw.norm_fro();
            let target: f64 = rng.random_range(0.0..=1.0);
            let q0 = if norm > 0.0 { raw.scale_real(target / norm) } else { raw };
            match solve_fixed_point_from(r, q0, opts) {
                Ok(sol) if sol.stabilizing => Some(sol.q.dist(&reference.q)),
                _ => None,
            }
        })
        .collect();
    let hits: Vec<f64> = outcomes.into_iter().flatten().collect();
    UniquenessReport {
        trials,
        stabilizing_runs: hits.len(),
        max_deviation: hits.iter().copied().fold(0.0, f64::max),
    }
}

/// True when every random restart that ends at a stabilizing fixed point
/// ends at `reference` (within 1e-6). False if `reference` itself is not
/// stabilizing.
pub fn verify_uniqueness(
    r: &Realization,
    reference: &RiccatiSolution,
    trials: usize,
    seed: u64,
    opts: &FixedPointOptions,
) -> bool {
    reference.stabilizing && uniqueness_trials(r, reference, trials, seed, opts).unique()
}

#[cfg(test)]
mod tests {
    use super::*;

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

    /// Fixed points of the scalar map (1.5 - Q)/(2.5 - Q): roots of
    /// Q² - 3.5Q + 1.5 = 0 by the quadratic formula.
    fn worked_roots() -> (f64, f64) {
        let (b, c) = (-3.5f64, 1.5f64);
        let d = (b * b - 4.0 * c).sqrt();
        ((-b - d) / 2.0, (-b + d) / 2.0)
    }

    #[test]
    fn map_on_empty_q() {
        let r = Realization::constant(real(1, 1, &[2.0])).unwrap();
        let q = CMatrix::zeros(0, 0);
        assert_eq!(riccati_map(&r, &q).unwrap().shape(), (0, 0));
    }

    #[test]
    fn zero_beta_makes_zero_a_fixed_point() {
        let r = Realization::new(
            real(1, 1, &[1.0]),
            real(1, 1, &[1.0]),
            real(1, 1, &[0.3]),
            real(1, 1, &[1.0]),
            real(1, 1, &[1.0]),
            real(1, 1, &[0.5]),
            real(1, 1, &[0.0]),
        )
        .unwrap();
        let q = CMatrix::zeros(1, 1);
        assert_eq!(riccati_map(&r, &q).unwrap(), q);
        let sol = solve_fixed_point(&r, &FixedPointOptions::default()).unwrap();
        assert_eq!(sol.q, q);
        assert!(sol.stabilizing);
        assert!(verify_uniqueness(&r, &sol, 10, 3, &FixedPointOptions::default()));
    }

    #[test]
    fn map_of_zero_on_worked_symbol() {
        let q = riccati_map(&worked(), &CMatrix::zeros(1, 1)).unwrap();
        assert!((q[(0, 0)].re - 1.5 / 2.5).abs() < 1e-15);
    }

    #[test]
    fn wrong_q_shape_is_rejected() {
        assert!(matches!(
            riccati_map(&worked(), &CMatrix::zeros(2, 1)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn constant_symbol_is_trivially_stabilizing() {
        let r = Realization::constant(real(1, 1, &[3.0])).unwrap();
        let sol = solve_fixed_point(&r, &FixedPointOptions::default()).unwrap();
        assert!(sol.stabilizing);
        assert_eq!(sol.residual, 0.0);
        assert_eq!(sol.q.shape(), (0, 0));
    }

    #[test]
    fn simple_pole_has_singular_pivot() {
        let r = Realization::circle(
            real(1, 1, &[0.0]),
            real(1, 1, &[1.0]),
            real(1, 1, &[1.0]),
            real(1, 1, &[1.0]),
        )
        .unwrap();
        let sol = solve_fixed_point(&r, &FixedPointOptions::default()).unwrap();
        assert_eq!(sol.q.shape(), (1, 0));
        assert!(!sol.pivot_ok);
        assert!(!sol.stabilizing);
    }

    #[test]
    fn worked_symbol_fixed_point() {
        let (q_small, _) = worked_roots();
        let sol = solve_fixed_point(&worked(), &FixedPointOptions::default()).unwrap();
        assert!((sol.q[(0, 0)].re - q_small).abs() < 1e-12);
        let cl = sol.closed_loop.as_ref().unwrap();
        assert!((cl.a_circ[(0, 0)].re + 0.5).abs() < 1e-12);
        assert!((cl.alpha_circ[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!(sol.stabilizing);
        assert!(sol.residual <= 10.0 * DEFAULT_TOL);
        // first iterates 0 -> 0.6 -> 0.9/1.9
        assert!((sol.trace[0] - 0.6).abs() < 1e-15);
        assert!((sol.trace[1] - (0.6 - 0.9 / 1.9)).abs() < 1e-15);
    }

    #[test]
    fn other_root_is_not_stabilizing() {
        let (_, q_big) = worked_roots();
        let sol = RiccatiSolution::from_q(&worked(), real(1, 1, &[q_big]), 0, vec![]).unwrap();
        assert!(sol.residual < 1e-14);
        assert!(sol.pivot_ok);
        let cl = sol.closed_loop.unwrap();
        assert!((cl.a_circ[(0, 0)].re - 2.0).abs() < 1e-12);
        assert!(!sol.stabilizing);
    }

    #[test]
    fn breakdown_is_reported() {
        // Ω(z) = z²/(z - 1): F(0) = 1 and the pivot vanishes at Q = 1
        let r = Realization::new(
            real(1, 1, &[1.0]),
            real(1, 1, &[1.0]),
            real(1, 1, &[0.0]),
            real(1, 1, &[1.0]),
            real(1, 1, &[1.0]),
            real(1, 1, &[1.0]),
            real(1, 1, &[1.0]),
        )
        .unwrap();
        let err = solve_fixed_point(&r, &FixedPointOptions::default()).unwrap_err();
        assert!(matches!(err, Error::PivotSingular { iteration: 1 }));
    }

    #[test]
    fn iteration_budget() {
        let opts = FixedPointOptions {
            tol: 1e-12,
            max_iter: 3,
        };
        assert!(matches!(
            solve_fixed_point(&worked(), &opts),
            Err(Error::RiccatiNonConvergence { iterations: 3, .. })
        ));
    }

    #[test]
    fn finite_sections_approach_the_fixed_point() {
        let r = worked();
        let mut prev = f64::INFINITY;
        for n in [8, 16, 32] {
            let qn = solve_finite_section(&r, n, 1.0).unwrap();
            let err = (qn[(0, 0)].re - 0.5).abs();
            assert!(err < prev);
            prev = err;
            let scaled = solve_finite_section(&r, n, 1.02).unwrap();
            assert!(qn.dist(&scaled) < 1e-10);
        }
        assert!(prev < 1e-15 + 0.25f64.powi(32) * 10.0);
    }

    #[test]
    fn finite_section_equals_iterated_map() {
        let r = worked();
        let mut q = CMatrix::zeros(1, 1);
        for n in 1..=12 {
            q = riccati_map(&r, &q).unwrap();
            let qn = solve_finite_section(&r, n, 1.0).unwrap();
            assert!(qn.dist(&q) < 1e-13, "N = {n}");
        }
    }

    #[test]
    fn finite_section_of_constant_is_empty() {
        let r = Realization::constant(real(1, 1, &[2.0])).unwrap();
        assert_eq!(solve_finite_section(&r, 4, 1.0).unwrap().shape(), (0, 0));
    }

    #[test]
    fn uniqueness_on_worked_symbol() {
        let r = worked();
        let opts = FixedPointOptions::default();
        let sol = solve_fixed_point(&r, &opts).unwrap();
        let rep = uniqueness_trials(&r, &sol, 20, 7, &opts);
        assert!(rep.stabilizing_runs > 0);
        assert!(rep.unique());
        assert!(verify_uniqueness(&r, &sol, 20, 7, &opts));
        let c = Realization::constant(real(1, 1, &[1.0])).unwrap();
        let csol = solve_fixed_point(&c, &opts).unwrap();
        assert!(verify_uniqueness(&c, &csol, 5, 0, &opts));
    }

    #[test]
    fn map_is_invariant_under_scaling() {
        let r = worked();
        let rs = r.scale(1.3).unwrap();
        for x in [0.1, -0.7, 1.9] {
            let q = real(1, 1, &[x]);
            let a = riccati_map(&r, &q).unwrap();
            let b = riccati_map(&rs, &q).unwrap();
            assert!(a.dist(&b) < 1e-15);
        }
    }
}
