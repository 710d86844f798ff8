//! State-space realizations of rational matrix symbols
//!
//! ```text
//! Ω(z) = R0 + z C (I - zA)^{-1} B + γ (zI - α)^{-1} β
//! ```
//!
//! with `A` stable (the "plus" part, poles outside the closed disc) and `α`
//! semi-stable (the "circle" part, poles inside the disc or on the unit
//! circle).

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matcore::{
    eigenvalues, rank, singular_values, solve, spectral_radius, CMatrix, C64, PIVOT_RELATIVE_THRESHOLD,
};

pub const DEFAULT_TOL_CIRCLE: f64 = 1e-9;
pub const DEFAULT_TOL_ZERO: f64 = 1e-8;
pub const DEFAULT_GRID_SIZE: usize = 1024;
/// Upper bound reported for the certified annulus radius.
pub const R0_CAP: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    r0: CMatrix,
    c: CMatrix,
    a: CMatrix,
    b: CMatrix,
    gamma: CMatrix,
    alpha: CMatrix,
    beta: CMatrix,
}

impl Realization {
    /// Assembles a realization after checking that all blocks have
    /// compatible shapes. Stability and minimality are checked separately
    /// (see [`Realization::check_stability`] and [`check_minimality`]).
    pub fn new(
        r0: CMatrix,
        c: CMatrix,
        a: CMatrix,
        b: CMatrix,
        gamma: CMatrix,
        alpha: CMatrix,
        beta: CMatrix,
    ) -> Result<Self> {
        let m = r0.rows();
        let s = a.rows();
        let t = alpha.rows();
        let expect = |name: &str, mat: &CMatrix, shape: (usize, usize)| -> Result<()> {
            if mat.shape() != shape {
                return Err(Error::InvalidRealization(format!(
                    "{name} is {}x{}, expected {}x{}",
                    mat.rows(),
                    mat.cols(),
                    shape.0,
                    shape.1
                )));
            }
            Ok(())
        };
        expect("R0", &r0, (m, m))?;
        expect("A", &a, (s, s))?;
        expect("C", &c, (m, s))?;
        expect("B", &b, (s, m))?;
        expect("alpha", &alpha, (t, t))?;
        expect("gamma", &gamma, (m, t))?;
        expect("beta", &beta, (t, m))?;
        for (name, mat) in [
            ("R0", &r0),
            ("C", &c),
            ("A", &a),
            ("B", &b),
            ("gamma", &gamma),
            ("alpha", &alpha),
            ("beta", &beta),
        ] {
            mat.check_finite()
                .map_err(|e| Error::InvalidRealization(format!("{name}: {e}")))?;
        }
        Ok(Self {
            r0,
            c,
            a,
            b,
            gamma,
            alpha,
            beta,
        })
    }

    /// Constant symbol `Ω(z) = R0` (no state).
    pub fn constant(r0: CMatrix) -> Result<Self> {
        let m = r0.rows();
        Self::new(
            r0,
            CMatrix::zeros(m, 0),
            CMatrix::zeros(0, 0),
            CMatrix::zeros(0, m),
            CMatrix::zeros(m, 0),
            CMatrix::zeros(0, 0),
            CMatrix::zeros(0, m),
        )
    }

    /// `Ω(z) = R0 + zC(I - zA)^{-1}B`.
    pub fn plus(r0: CMatrix, c: CMatrix, a: CMatrix, b: CMatrix) -> Result<Self> {
        let m = r0.rows();
        Self::new(
            r0,
            c,
            a,
            b,
            CMatrix::zeros(m, 0),
            CMatrix::zeros(0, 0),
            CMatrix::zeros(0, m),
        )
    }

    /// `Ω(z) = R0 + γ(zI - α)^{-1}β`.
    pub fn circle(r0: CMatrix, gamma: CMatrix, alpha: CMatrix, beta: CMatrix) -> Result<Self> {
        let m = r0.rows();
        Self::new(
            r0,
            CMatrix::zeros(m, 0),
            CMatrix::zeros(0, 0),
            CMatrix::zeros(0, m),
            gamma,
            alpha,
            beta,
        )
    }

    /// Block size of the symbol.
    pub fn m(&self) -> usize {
        self.r0.rows()
    }

    /// Plus-part state dimension.
    pub fn s(&self) -> usize {
        self.a.rows()
    }

    /// Circle-part state dimension.
    pub fn t(&self) -> usize {
        self.alpha.rows()
    }

    pub fn r0(&self) -> &CMatrix {
        &self.r0
    }
    pub fn c(&self) -> &CMatrix {
        &self.c
    }
    pub fn a(&self) -> &CMatrix {
        &self.a
    }
    pub fn b(&self) -> &CMatrix {
        &self.b
    }
    pub fn gamma(&self) -> &CMatrix {
        &self.gamma
    }
    pub fn alpha(&self) -> &CMatrix {
        &self.alpha
    }
    pub fn beta(&self) -> &CMatrix {
        &self.beta
    }

    /// Checks `ρ(A) < 1` and `ρ(α) ≤ 1 + tol`. Returns `(ρ(A), ρ(α))`.
    pub fn check_stability(&self, tol: f64) -> Result<(f64, f64)> {
        let rho_a = spectral_radius(&self.a)?;
        let rho_alpha = spectral_radius(&self.alpha)?;
        if rho_a >= 1.0 {
            return Err(Error::InvalidRealization(format!(
                "A is not stable: spectral radius {rho_a}"
            )));
        }
        if rho_alpha > 1.0 + tol {
            return Err(Error::InvalidRealization(format!(
                "alpha is not semi-stable: spectral radius {rho_alpha}"
            )));
        }
        Ok((rho_a, rho_alpha))
    }

    /// `Ω(z) = R0 + zC(I - zA)^{-1}B + γ(zI - α)^{-1}β`.
    pub fn evaluate(&self, z: C64) -> Result<CMatrix> {
        let pole = || Error::PoleAtEvaluationPoint { re: z.re, im: z.im };
        let mut out = self.r0.clone();
        if self.s() > 0 {
            let resolvent = &CMatrix::identity(self.s()) - &self.a.scale(z);
            let x = solve(&resolvent, &self.b).map_err(|_| pole())?;
            out = &out + &(&self.c * &x).scale(z);
        }
        if self.t() > 0 {
            let resolvent = &CMatrix::identity(self.t()).scale(z) - &self.alpha;
            let y = solve(&resolvent, &self.beta).map_err(|_| pole())?;
            out = &out + &(&self.gamma * &y);
        }
        Ok(out)
    }

    /// Laurent coefficient `R_n` of the expansion of Ω on the unit circle:
    /// `C A^{n-1} B` for `n > 0`, `R0` for `n = 0` and `γ α^{|n|-1} β` for
    /// `n < 0`.
    pub fn laurent_coefficient(&self, n: i64) -> CMatrix {
        let m = self.m();
        match n {
            0 => self.r0.clone(),
            n if n > 0 => {
                if self.s() == 0 {
                    return CMatrix::zeros(m, m);
                }
                let k = (n - 1) as usize;
                &(&self.c * &self.a.pow(k)) * &self.b
            }
            n => {
                if self.t() == 0 {
                    return CMatrix::zeros(m, m);
                }
                let k = (-n - 1) as usize;
                &(&self.gamma * &self.alpha.pow(k)) * &self.beta
            }
        }
    }

    /// `(plus, minus)` with `plus[k] = R_k` and `minus[k] = R_{-k}` for
    /// `k < count`. Both start with `R0`.
    pub fn laurent_coefficients(&self, count: usize) -> (Vec<CMatrix>, Vec<CMatrix>) {
        let m = self.m();
        let mut plus = Vec::with_capacity(count);
        let mut minus = Vec::with_capacity(count);
        if count == 0 {
            return (plus, minus);
        }
        plus.push(self.r0.clone());
        minus.push(self.r0.clone());
        let mut ca = self.c.clone(); // C A^{k-1}
        let mut ab = self.beta.clone(); // α^{k-1} β
        for _ in 1..count {
            if self.s() == 0 {
                plus.push(CMatrix::zeros(m, m));
            } else {
                plus.push(&ca * &self.b);
                ca = &ca * &self.a;
            }
            if self.t() == 0 {
                minus.push(CMatrix::zeros(m, m));
            } else {
                minus.push(&self.gamma * &ab);
                ab = &self.alpha * &ab;
            }
        }
        (plus, minus)
    }

    /// Realization of `Ω_r(z) = Ω(rz)`: `(R0, rC, rA, B, γ, α/r, β/r)`.
    ///
    /// Requires `r > 1` and `r·ρ(A) < 1`, so that the scaled plus part stays
    /// stable while the circle poles move strictly inside the disc.
    pub fn scale(&self, r: f64) -> Result<Realization> {
        let rho_a = spectral_radius(&self.a)?;
        if !r.is_finite() || r <= 1.0 || r * rho_a >= 1.0 {
            return Err(Error::InvalidScaling { r, rho_a });
        }
        Ok(self.scale_unchecked(r))
    }

    /// Same substitution as [`Realization::scale`] without the range checks;
    /// `r = 1` returns an identical copy.
    pub fn scale_unchecked(&self, r: f64) -> Realization {
        Realization {
            r0: self.r0.clone(),
            c: self.c.scale_real(r),
            a: self.a.scale_real(r),
            b: self.b.clone(),
            gamma: self.gamma.clone(),
            alpha: self.alpha.scale_real(1.0 / r),
            beta: self.beta.scale_real(1.0 / r),
        }
    }

    pub fn diagnose(&self, opts: &DiagnoseOptions) -> Result<SymbolDiagnostics> {
        diagnose(self, opts)
    }
}

/// `[B, AB, ..., A^{k-1}B]`.
pub fn controllability_matrix(a: &CMatrix, b: &CMatrix, k: usize) -> CMatrix {
    let mut parts = Vec::with_capacity(k);
    let mut cur = b.clone();
    for j in 0..k {
        if j > 0 {
            cur = a * &cur;
        }
        parts.push(cur.clone());
    }
    CMatrix::hstack(a.rows(), &parts)
}

/// `col(C, CA, ..., CA^{k-1})`.
pub fn observability_matrix(c: &CMatrix, a: &CMatrix, k: usize) -> CMatrix {
    let mut parts = Vec::with_capacity(k);
    let mut cur = c.clone();
    for j in 0..k {
        if j > 0 {
            cur = &cur * a;
        }
        parts.push(cur.clone());
    }
    CMatrix::vstack(a.cols(), &parts)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimalityReport {
    pub s: usize,
    pub t: usize,
    pub plus_controllability_rank: usize,
    pub plus_observability_rank: usize,
    pub circle_controllability_rank: usize,
    pub circle_observability_rank: usize,
}

impl MinimalityReport {
    pub fn passed(&self) -> bool {
        self.plus_controllability_rank == self.s
            && self.plus_observability_rank == self.s
            && self.circle_controllability_rank == self.t
            && self.circle_observability_rank == self.t
    }
}

/// Kalman rank tests for `(C, A, B)` and `(γ, α, β)`.
pub fn check_minimality(r: &Realization) -> Result<MinimalityReport> {
    let s = r.s();
    let t = r.t();
    let rk = |m: CMatrix| rank(&m, PIVOT_RELATIVE_THRESHOLD);
    Ok(MinimalityReport {
        s,
        t,
        plus_controllability_rank: rk(controllability_matrix(r.a(), r.b(), s))?,
        plus_observability_rank: rk(observability_matrix(r.c(), r.a(), s))?,
        circle_controllability_rank: rk(controllability_matrix(r.alpha(), r.beta(), t))?,
        circle_observability_rank: rk(observability_matrix(r.gamma(), r.alpha(), t))?,
    })
}

#[derive(Clone, Debug)]
pub struct DiagnoseOptions {
    pub grid_size: usize,
    pub tol_zero: f64,
    pub tol_circle: f64,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            grid_size: DEFAULT_GRID_SIZE,
            tol_zero: DEFAULT_TOL_ZERO,
            tol_circle: DEFAULT_TOL_CIRCLE,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CirclePole {
    pub value: C64,
    pub on_circle: bool,
}

#[derive(Clone, Debug)]
pub struct SymbolDiagnostics {
    /// Reciprocals of the nonzero eigenvalues of `A`.
    pub plus_poles: Vec<C64>,
    /// Eigenvalues of `α`.
    pub circle_poles: Vec<CirclePole>,
    /// Minimum of `σ_min(Ω(z))` over the scan grid.
    pub zero_scan_min: f64,
    pub zero_scan_argmin: C64,
    /// Largest radius `r0 > 1` (capped at 2) for which the eigenvalue data
    /// show no poles in the annulus `1/r0 < |z| < r0` off the unit circle.
    pub r0_estimate: f64,
    /// Half-width of the scanned annulus: circles `1 - h`, `1`, `1 + h`.
    pub scan_offset: f64,
    /// `zero_scan_min < tol_zero`.
    pub near_zero: bool,
}

impl SymbolDiagnostics {
    /// Scaling parameter used when a concrete `r` inside the annulus is
    /// needed: `min(1 + (r0 - 1)/4, 1.1)`.
    pub fn working_radius(&self) -> f64 {
        (1.0 + 0.25 * (self.r0_estimate - 1.0)).min(1.1)
    }
}

/// Pole data and a grid scan of `σ_min(Ω(z))` on three circles around
/// the unit circle.
///
/// Grid points within `tol_circle` of an eigenvalue of `α` (and points
/// where evaluation hits a pole) are skipped. The result does not depend on
/// the order in which grid points are evaluated.
pub fn diagnose(r: &Realization, opts: &DiagnoseOptions) -> Result<SymbolDiagnostics> {
    let grid = opts.grid_size.max(64);
    let a_eigs = eigenvalues(r.a())?;
    let alpha_eigs = eigenvalues(r.alpha())?;
    let a_tiny = 1e-14 * r.a().max_abs().max(1.0);
    let plus_poles: Vec<C64> = a_eigs.iter().filter(|z| z.norm() > a_tiny).map(|z| z.inv()).collect();
    let circle_poles: Vec<CirclePole> = alpha_eigs
        .iter()
        .map(|&value| CirclePole {
            value,
            on_circle: (value.norm() - 1.0).abs() <= opts.tol_circle,
        })
        .collect();

    let rho_a = a_eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let inner = alpha_eigs
        .iter()
        .map(|z| z.norm())
        .filter(|&x| x < 1.0 - opts.tol_circle)
        .fold(0.0, f64::max);
    let cap_of = |rho: f64| if rho > 0.0 { 1.0 / rho } else { f64::INFINITY };
    let r0_estimate = cap_of(rho_a).min(cap_of(inner)).min(R0_CAP);

    let h = (0.5 * (1.0 - 1.0 / r0_estimate)).min(0.05);
    let radii = [1.0 - h, 1.0, 1.0 + h];
    let points: Vec<C64> = radii
        .iter()
        .flat_map(|&rad| (0..grid).map(move |k| C64::from_polar(rad, 2.0 * PI * k as f64 / grid as f64)))
        .collect();
    let values: Vec<Option<f64>> = points
        .par_iter()
        .map(|&z| {
            if alpha_eigs.iter().any(|&p| (z - p).norm() <= opts.tol_circle) {
                return None;
            }
            let omega = r.evaluate(z).ok()?;
            singular_values(&omega).ok()?.last().copied()
        })
        .collect();
    let mut zero_scan_min = f64::INFINITY;
    let mut zero_scan_argmin = C64::new(1.0, 0.0);
    for (z, v) in points.iter().zip(&values) {
        if let Some(v) = *v {
            if v < zero_scan_min {
                zero_scan_min = v;
                zero_scan_argmin = *z;
            }
        }
    }
    if r.m() == 0 {
        zero_scan_min = 0.0;
    }
    Ok(SymbolDiagnostics {
        plus_poles,
        circle_poles,
        zero_scan_min,
        zero_scan_argmin,
        r0_estimate,
        scan_offset: h,
        near_zero: zero_scan_min < opts.tol_zero,
    })
}
