//! Right pseudo-canonical factorization `Ω = ΨΘ` built from a stabilizing
//! Riccati solution.
//!
//! With `δD = R0 - γQB`, `C∘ = δ^{-1}(C - γQA)` and `β∘ = (β - αQB)D^{-1}`:
//!
//! ```text
//! Θ(z)      = D + zC∘(I - zA)^{-1}B
//! Ψ(z)      = δ + γ(zI - α)^{-1}β∘
//! Θ^{-1}(z) = D^{-1} - zD^{-1}C∘(I - zA∘)^{-1}BD^{-1}
//! Ψ^{-1}(z) = δ^{-1} - δ^{-1}γ(zI - α∘)^{-1}β∘δ^{-1}
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matcore::{inverse, CMatrix, C64};
use crate::riccati::{pivot, RiccatiSolution};
use crate::symbol::{check_minimality, MinimalityReport, Realization, DEFAULT_TOL_CIRCLE};

/// Radii of the circles on which factor identities are checked.
pub const VERIFY_RADII: [f64; 4] = [0.9, 1.0, 1.1, 1.5];

/// How `R0 - γQB` is split into `δ·D`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Split {
    /// `δ = I`, `D = R0 - γQB`.
    #[default]
    IdentityDelta,
    /// `D = I`, `δ = R0 - γQB`.
    IdentityD,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::IdentityDelta => "identity_delta",
            Split::IdentityD => "identity_D",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "identity_delta" => Ok(Split::IdentityDelta),
            "identity_D" | "identity_d" => Ok(Split::IdentityD),
            other => Err(format!(
                "unknown split `{other}` (expected identity_delta or identity_D)"
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FactorPair {
    pub split: Split,
    pub d: CMatrix,
    pub delta: CMatrix,
    pub d_inv: CMatrix,
    pub delta_inv: CMatrix,
    pub c_circ: CMatrix,
    pub beta_circ: CMatrix,
    pub a_circ: CMatrix,
    pub alpha_circ: CMatrix,
    pub theta: Realization,
    pub psi: Realization,
    pub theta_inv: Realization,
    pub psi_inv: Realization,
}

impl FactorPair {
    /// `Ψ(z)Θ(z)`.
    pub fn product(&self, z: C64) -> Result<CMatrix> {
        Ok(&self.psi.evaluate(z)? * &self.theta.evaluate(z)?)
    }
}

pub fn build_factors(r: &Realization, sol: &RiccatiSolution, split: Split) -> Result<FactorPair> {
    if !sol.stabilizing {
        return Err(Error::NotStabilizing);
    }
    let cl = sol.closed_loop.as_ref().ok_or(Error::NotStabilizing)?;
    let q = &sol.q;
    let m = r.m();
    let piv = pivot(r, q);
    let (delta, d) = match split {
        Split::IdentityDelta => (CMatrix::identity(m), piv),
        Split::IdentityD => (piv, CMatrix::identity(m)),
    };
    let d_inv = inverse(&d)?;
    let delta_inv = inverse(&delta)?;

    let c_minus = if q.is_empty() {
        r.c().clone()
    } else {
        r.c() - &(&(r.gamma() * q) * r.a())
    };
    let beta_minus = if q.is_empty() {
        r.beta().clone()
    } else {
        r.beta() - &(&(r.alpha() * q) * r.b())
    };
    let c_circ = &delta_inv * &c_minus;
    let beta_circ = &beta_minus * &d_inv;

    let theta = Realization::plus(d.clone(), c_circ.clone(), r.a().clone(), r.b().clone())?;
    let psi = Realization::circle(delta.clone(), r.gamma().clone(), r.alpha().clone(), beta_circ.clone())?;
    let theta_inv = Realization::plus(d_inv.clone(), -&(&d_inv * &c_circ), cl.a_circ.clone(), r.b() * &d_inv)?;
    let psi_inv = Realization::circle(
        delta_inv.clone(),
        -&(&delta_inv * r.gamma()),
        cl.alpha_circ.clone(),
        &beta_circ * &delta_inv,
    )?;
    Ok(FactorPair {
        split,
        d,
        delta,
        d_inv,
        delta_inv,
        c_circ,
        beta_circ,
        a_circ: cl.a_circ.clone(),
        alpha_circ: cl.alpha_circ.clone(),
        theta,
        psi,
        theta_inv,
        psi_inv,
    })
}

/// Grid points on the verification circles, excluding points within
/// `tol_circle` of any of `poles`.
fn verification_grid(grid_size: usize, poles: &[C64], tol_circle: f64) -> Vec<C64> {
    VERIFY_RADII
        .iter()
        .flat_map(|&rad| (0..grid_size).map(move |k| C64::from_polar(rad, 2.0 * PI * k as f64 / grid_size as f64)))
        .filter(|z| poles.iter().all(|p| (z - p).norm() > tol_circle))
        .collect()
}

fn grid_max(points: &[C64], f: impl Fn(C64) -> Option<f64> + Sync) -> f64 {
    let vals: Vec<Option<f64>> = points.par_iter().map(|&z| f(z)).collect();
    vals.into_iter().flatten().fold(0.0, f64::max)
}

/// `max ‖Ψ(z)Θ(z) - Ω(z)‖_F / (1 + ‖Ω(z)‖_F)` over grids on the circles
/// `|z| ∈ {0.9, 1, 1.1, 1.5}`. Points at poles are skipped.
pub fn verify_product(r: &Realization, f: &FactorPair, grid_size: usize) -> Result<f64> {
    let poles = crate::matcore::eigenvalues(r.alpha())?;
    let points = verification_grid(grid_size, &poles, DEFAULT_TOL_CIRCLE);
    Ok(grid_max(&points, |z| {
        let omega = r.evaluate(z).ok()?;
        let prod = f.product(z).ok()?;
        Some(prod.dist(&omega) / (1.0 + omega.norm_fro()))
    }))
}

/// `max(‖Θ(z)Θ^{-1}(z) - I‖_F, ‖Ψ(z)Ψ^{-1}(z) - I‖_F)` over the same grids.
pub fn verify_inverse_factors(f: &FactorPair, grid_size: usize) -> Result<f64> {
    let mut poles = crate::matcore::eigenvalues(f.psi.alpha())?;
    poles.extend(crate::matcore::eigenvalues(f.psi_inv.alpha())?);
    let points = verification_grid(grid_size, &poles, DEFAULT_TOL_CIRCLE);
    let m = f.d.rows();
    let eye = CMatrix::identity(m);
    Ok(grid_max(&points, |z| {
        let th = &f.theta.evaluate(z).ok()? * &f.theta_inv.evaluate(z).ok()?;
        let ps = &f.psi.evaluate(z).ok()? * &f.psi_inv.evaluate(z).ok()?;
        Some(th.dist(&eye).max(ps.dist(&eye)))
    }))
}

#[derive(Clone, Debug)]
pub struct FactorMinimality {
    pub theta: MinimalityReport,
    pub psi: MinimalityReport,
    pub theta_inv: MinimalityReport,
    pub psi_inv: MinimalityReport,
}

impl FactorMinimality {
    pub fn flags(&self) -> [bool; 4] {
        [
            self.theta.passed(),
            self.psi.passed(),
            self.theta_inv.passed(),
            self.psi_inv.passed(),
        ]
    }

    pub fn all_passed(&self) -> bool {
        self.flags().iter().all(|&x| x)
    }
}

pub fn check_minimality_of_factors(f: &FactorPair) -> Result<FactorMinimality> {
    Ok(FactorMinimality {
        theta: check_minimality(&f.theta)?,
        psi: check_minimality(&f.psi)?,
        theta_inv: check_minimality(&f.theta_inv)?,
        psi_inv: check_minimality(&f.psi_inv)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::c64;
    use crate::riccati::{solve_fixed_point, FixedPointOptions};

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

    fn worked_factors(split: Split) -> (Realization, RiccatiSolution, FactorPair) {
        let r = worked();
        let sol = solve_fixed_point(&r, &FixedPointOptions::default()).unwrap();
        let f = build_factors(&r, &sol, split).unwrap();
        (r, sol, f)
    }

    #[test]
    fn split_parsing() {
        assert_eq!("identity_D".parse::<Split>().unwrap(), Split::IdentityD);
        assert_eq!("identity_delta".parse::<Split>().unwrap(), Split::IdentityDelta);
        assert!("both".parse::<Split>().is_err());
        assert_eq!(Split::IdentityD.to_string(), "identity_D");
    }

    #[test]
    fn constant_symbol_factors() {
        let r0 = CMatrix::from_vec(2, 2, vec![c64(2.0, 0.0), c64(1.0, 1.0), c64(0.0, 0.0), c64(3.0, 0.0)]).unwrap();
        let r = Realization::constant(r0.clone()).unwrap();
        let sol = solve_fixed_point(&r, &FixedPointOptions::default()).unwrap();
        let f = build_factors(&r, &sol, Split::IdentityDelta).unwrap();
        assert_eq!(f.d, r0);
        assert_eq!(f.delta, CMatrix::identity(2));
        assert!(verify_product(&r, &f, 64).unwrap() < 1e-15);
        assert!(verify_inverse_factors(&f, 64).unwrap() < 1e-14);
        assert!(check_minimality_of_factors(&f).unwrap().all_passed());
    }

    #[test]
    fn worked_identity_delta() {
        let (r, _, f) = worked_factors(Split::IdentityDelta);
        assert!((f.d[(0, 0)] - c64(2.0, 0.0)).norm() < 1e-12);
        assert!((f.c_circ[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-12);
        assert!((f.beta_circ[(0, 0)] - c64(0.5, 0.0)).norm() < 1e-12);
        for z in [c64(0.3, 0.4), c64(-2.0, 0.5), c64(1.2, -0.1)] {
            let th = f.theta.evaluate(z).unwrap()[(0, 0)];
            let ps = f.psi.evaluate(z).unwrap()[(0, 0)];
            assert!((th - (2.0 + z)).norm() < 1e-12);
            assert!((ps - (z - 0.5) / (z - 1.0)).norm() < 1e-12);
        }
        assert!(verify_product(&r, &f, 256).unwrap() < 1e-10);
    }

    #[test]
    fn worked_identity_d() {
        let (r, _, f) = worked_factors(Split::IdentityD);
        assert!((f.delta[(0, 0)] - c64(2.0, 0.0)).norm() < 1e-12);
        assert!((f.c_circ[(0, 0)] - c64(0.5, 0.0)).norm() < 1e-12);
        assert!((f.beta_circ[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-12);
        let z = c64(0.7, 0.2);
        assert!((f.theta.evaluate(z).unwrap()[(0, 0)] - (1.0 + 0.5 * z)).norm() < 1e-12);
        assert!((f.psi.evaluate(z).unwrap()[(0, 0)] - (2.0 + 1.0 / (z - 1.0))).norm() < 1e-12);
        assert!(verify_product(&r, &f, 256).unwrap() < 1e-10);
    }

    #[test]
    fn perturbed_q_is_detected() {
        let (r, sol, _) = worked_factors(Split::IdentityDelta);
        let mut bad = sol.clone();
        bad.q = &sol.q + &real(1, 1, &[0.01]);
        bad.closed_loop = Some(crate::riccati::closed_loop(&r, &bad.q).unwrap());
        let f = build_factors(&r, &bad, Split::IdentityDelta).unwrap();
        assert!(verify_product(&r, &f, 256).unwrap() > 1e-4);
    }

    #[test]
    fn inverse_factors() {
        let (_, _, f) = worked_factors(Split::IdentityDelta);
        assert!(verify_inverse_factors(&f, 256).unwrap() < 1e-10);
        let at_zero = f.theta_inv.evaluate(c64(0.0, 0.0)).unwrap();
        assert!(at_zero.dist(&f.d_inv) < 1e-15);
    }

    #[test]
    fn delta_times_d_recomposes_the_pivot() {
        for split in [Split::IdentityDelta, Split::IdentityD] {
            let (r, sol, f) = worked_factors(split);
            assert!((&f.delta * &f.d).dist(&pivot(&r, &sol.q)) < 1e-15);
        }
    }

    #[test]
    fn factor_minimality() {
        let (_, _, f) = worked_factors(Split::IdentityDelta);
        assert!(check_minimality_of_factors(&f).unwrap().all_passed());

        // pad Θ with a state that B cannot reach
        let mut padded = f.clone();
        padded.theta = Realization::plus(
            f.d.clone(),
            real(1, 2, &[1.0, 1.0]),
            real(2, 2, &[0.0, 0.0, 0.0, 0.3]),
            real(2, 1, &[1.0, 0.0]),
        )
        .unwrap();
        let rep = check_minimality_of_factors(&padded).unwrap();
        assert_eq!(rep.flags(), [false, true, true, true]);
    }

    #[test]
    fn not_stabilizing_is_rejected() {
        let r = worked();
        let sol = RiccatiSolution::from_q(&r, real(1, 1, &[3.0]), 0, vec![]).unwrap();
        assert!(matches!(
            build_factors(&r, &sol, Split::IdentityDelta),
            Err(Error::NotStabilizing)
        ));
    }
}
