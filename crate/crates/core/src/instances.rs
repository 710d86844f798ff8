//! Random invertible test symbols with poles on the unit circle.
//!
//! Instances are assembled backwards from factor data: pick a stable `A`,
//! `B`, `C∘`, `D` with `A∘ = A - BD^{-1}C∘` stable, and a stable `α∘`, `γ`,
//! `δ` together with a gain `K` placing some eigenvalues of
//! `α = α∘ + Kγ` exactly on the unit circle. Setting `β∘ = Kδ` and solving
//! the Stein equation `Q - αQA = β∘C∘`, the realization
//!
//! ```text
//! R0 = δD + γQB,   C = δC∘ + γQA,   β = β∘D + αQB
//! ```
//!
//! satisfies `Ω = ΨΘ` and `Q` is its stabilizing Riccati solution, so the
//! operator is invertible by construction.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::{eigenvalues, inverse, singular_values, solve, spectral_radius, CMatrix, C64};
use crate::symbol::{controllability_matrix, observability_matrix, Realization};

/// Generation bounds.
#[derive(Clone, Debug)]
pub struct InstanceParams {
    pub m: usize,
    pub s: usize,
    pub t: usize,
    /// Upper bound for `ρ(A)`.
    pub max_rho_a: f64,
    /// Upper bound for `ρ(A∘)` and `ρ(α∘)`.
    pub max_rho_closed: f64,
    /// Number of eigenvalues of `α` placed on the unit circle (at most
    /// `min(m, t)`).
    pub unit_poles: usize,
}

impl InstanceParams {
    pub fn new(m: usize, s: usize, t: usize, unit_poles: usize) -> Self {
        Self {
            m,
            s,
            t,
            max_rho_a: 0.8,
            max_rho_closed: 0.8,
            unit_poles,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub realization: Realization,
    /// Stabilizing Riccati solution by construction.
    pub q: CMatrix,
    pub a_circ: CMatrix,
    pub alpha_circ: CMatrix,
    pub d: CMatrix,
    pub delta: CMatrix,
}

fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * (scale / std::f64::consts::SQRT_2)
    })
}

/// Random matrix with prescribed spectrum, `V diag(λ) V^{-1}` with `V`
/// close to the identity.
fn with_spectrum(rng: &mut impl Rng, eigs: &[C64]) -> Option<CMatrix> {
    let n = eigs.len();
    let v = &CMatrix::identity(n) + &gaussian(rng, n, n, 0.3);
    let vinv = inverse(&v).ok()?;
    Some(&(&v * &CMatrix::diag(eigs)) * &vinv)
}

fn random_disc_points(rng: &mut impl Rng, n: usize, max_radius: f64) -> Vec<C64> {
    (0..n)
        .map(|_| {
            let rad = max_radius * rng.random_range(0.1..1.0f64);
            C64::from_polar(rad, rng.random_range(0.0..2.0 * PI))
        })
        .collect()
}

/// Solves `Q - αQA = X` via the Kronecker form `(I - Aᵀ⊗α) vec Q = vec X`.
fn stein(alpha: &CMatrix, a: &CMatrix, x: &CMatrix) -> Option<CMatrix> {
    let (t, s) = x.shape();
    let n = t * s;
    // column-major vec: index(i, j) = j*t + i
    let mut lhs = CMatrix::identity(n);
    for j in 0..s {
        for l in 0..s {
            let ajl = a[(l, j)];
            for i in 0..t {
                for k in 0..t {
                    lhs[(j * t + i, l * t + k)] -= ajl * alpha[(i, k)];
                }
            }
        }
    }
    let rhs = CMatrix::from_fn(n, 1, |p, _| x[(p % t, p / t)]);
    let v = solve(&lhs, &rhs).ok()?;
    Some(CMatrix::from_fn(t, s, |i, j| v[(j * t + i, 0)]))
}

fn well_conditioned_rank(m: &CMatrix, want: usize) -> bool {
    if want == 0 {
        return true;
    }
    let Ok(sv) = singular_values(m) else {
        return false;
    };
    sv.len() >= want && sv[want - 1] > 1e-6 * sv[0]
}

/// One attempt; `None` when a rejection test fails.
pub fn try_instance(rng: &mut impl Rng, params: &InstanceParams) -> Option<Instance> {
    let InstanceParams { m, s, t, .. } = *params;
    let k = params.unit_poles.min(m).min(t);

    let a_eigs = random_disc_points(rng, s, params.max_rho_a);
    let a = with_spectrum(rng, &a_eigs)?;
    if spectral_radius(&a).ok()? > params.max_rho_a {
        return None;
    }
    let b = gaussian(rng, s, m, 1.0);
    let d = &CMatrix::identity(m) + &gaussian(rng, m, m, 0.25);
    let c_circ = gaussian(rng, m, s, 0.5);
    let d_inv = inverse(&d).ok()?;
    let a_circ = &a - &(&(&b * &d_inv) * &c_circ);
    if spectral_radius(&a_circ).ok()? > params.max_rho_closed {
        return None;
    }

    let alpha_eigs = random_disc_points(rng, t, 0.95 * params.max_rho_closed);
    let alpha_circ = with_spectrum(rng, &alpha_eigs)?;
    let gamma = gaussian(rng, m, t, 1.0);
    let delta = &CMatrix::identity(m) + &gaussian(rng, m, m, 0.25);

    // K u_i = (λ_i - α∘) v_i with u_i = γ v_i makes v_i an eigenvector of
    // α∘ + Kγ for the unit-modulus λ_i
    let theta0: f64 = rng.random_range(0.0..2.0 * PI);
    let lambdas: Vec<C64> = (0..k)
        .map(|i| {
            C64::from_polar(
                1.0,
                theta0 + 2.0 * PI * (i as f64 + 0.3 * rng.random::<f64>()) / k.max(1) as f64,
            )
        })
        .collect();
    let vs = gaussian(rng, t, k, 1.0);
    let us = &gamma * &vs;
    let ws = CMatrix::from_fn(t, k, |_, _| C64::new(0.0, 0.0));
    let ws = {
        let mut w = ws;
        for (i, &lam) in lambdas.iter().enumerate() {
            let v = vs.block(0, i, t, 1);
            let col = &v.scale(lam) - &(&alpha_circ * &v);
            w.set_block(0, i, &col);
        }
        w
    };
    let gain = if k == 0 {
        gaussian(rng, t, m, 0.3)
    } else {
        let uhu = &us.adjoint() * &us;
        let pinv = solve(&uhu, &us.adjoint()).ok()?; // k × m
        let proj = &CMatrix::identity(m) - &(&us * &pinv);
        &(&ws * &pinv) + &(&gaussian(rng, t, m, 0.3) * &proj)
    };
    let alpha = &alpha_circ + &(&gain * &gamma);
    let eig = eigenvalues(&alpha).ok()?;
    let on_circle = eig.iter().filter(|z| (z.norm() - 1.0).abs() < 1e-9).count();
    if on_circle != k || eig.iter().any(|z| z.norm() > 1.0 + 1e-12) {
        return None;
    }
    if eig.iter().any(|z| (z.norm() - 1.0).abs() >= 1e-9 && z.norm() > 0.95) {
        return None;
    }
    for i in 0..eig.len() {
        for j in i + 1..eig.len() {
            if (eig[i] - eig[j]).norm() < 1e-2 {
                return None;
            }
        }
    }
    let beta_circ = &gain * &delta;

    let q = stein(&alpha, &a, &(&beta_circ * &c_circ))?;
    let r0 = &(&delta * &d) + &(&(&gamma * &q) * &b);
    let c = &(&delta * &c_circ) + &(&(&gamma * &q) * &a);
    let beta = &(&beta_circ * &d) + &(&(&alpha * &q) * &b);

    let ok = well_conditioned_rank(&controllability_matrix(&a, &b, s), s)
        && well_conditioned_rank(&observability_matrix(&c, &a, s), s)
        && well_conditioned_rank(&controllability_matrix(&alpha, &beta, t), t)
        && well_conditioned_rank(&observability_matrix(&gamma, &alpha, t), t);
    if !ok {
        return None;
    }
    let realization = Realization::new(r0, c, a, b, gamma, alpha, beta).ok()?;
    Some(Instance {
        realization,
        q,
        a_circ,
        alpha_circ,
        d,
        delta,
    })
}

/// Retries [`try_instance`] until it succeeds (at most `max_attempts`).
pub fn random_instance(rng: &mut impl Rng, params: &InstanceParams, max_attempts: usize) -> Option<Instance> {
    (0..max_attempts).find_map(|_| try_instance(rng, params))
}

/// `count` instances with `m ≤ 3`, `s, t ≤ 4` and at least one circle pole,
/// reproducible from `seed`.
pub fn random_instances(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let m = rng.random_range(1..=3);
        let s = rng.random_range(1..=4);
        let t = rng.random_range(1..=4);
        let unit = rng.random_range(1..=m.min(t));
        if let Some(inst) = random_instance(&mut rng, &InstanceParams::new(m, s, t, unit), 200) {
            out.push(inst);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stein_solution_satisfies_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let alpha = with_spectrum(&mut rng, &[C64::new(1.0, 0.0), C64::new(0.2, 0.3)]).unwrap();
        let a = with_spectrum(&mut rng, &[C64::new(0.5, 0.0), C64::new(-0.3, 0.1), C64::new(0.0, 0.4)]).unwrap();
        let x = gaussian(&mut rng, 2, 3, 1.0);
        let q = stein(&alpha, &a, &x).unwrap();
        let lhs = &q - &(&(&alpha * &q) * &a);
        assert!(lhs.dist(&x) < 1e-12);
    }

    #[test]
    fn generated_instances_have_unit_circle_poles() {
        for inst in random_instances(11, 5) {
            let r = &inst.realization;
            let rho_alpha = spectral_radius(r.alpha()).unwrap();
            assert!((rho_alpha - 1.0).abs() < 1e-9);
            assert!(spectral_radius(r.a()).unwrap() <= 0.8);
            assert!(spectral_radius(&inst.a_circ).unwrap() <= 0.8);
            assert!(spectral_radius(&inst.alpha_circ).unwrap() <= 0.8);
        }
    }

    #[test]
    fn generated_q_solves_the_riccati_equation() {
        for inst in random_instances(5, 4) {
            let fq = crate::riccati::riccati_map(&inst.realization, &inst.q).unwrap();
            assert!(fq.dist(&inst.q) < 1e-10 * (1.0 + inst.q.norm_fro()));
            let cl = crate::riccati::closed_loop(&inst.realization, &inst.q).unwrap();
            assert!(cl.a_circ.dist(&inst.a_circ) < 1e-10);
            assert!(cl.alpha_circ.dist(&inst.alpha_circ) < 1e-10);
        }
    }
}
