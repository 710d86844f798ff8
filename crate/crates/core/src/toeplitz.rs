//! Finite sections of the Toeplitz-like operator and the block matrix of its
//! inverse.
//!
//! Block `(i, j)` of the `N`-th section is the Laurent coefficient
//! `R_{i-j}`. When a stabilizing Riccati solution exists, the inverse
//! operator is `T_{Θ^{-1}} T_{Ψ^{-1}}`, whose block `(i, j)` is
//! `Σ_{k=0}^{min(i,j)} Θ^×_{i-k} Ψ^×_{j-k}` with `Θ^×_j`, `Ψ^×_j` the
//! Taylor coefficients of `Θ^{-1}` at 0 and of `Ψ^{-1}` at ∞.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::factorization::FactorPair;
use crate::matcore::{CMatrix, Lu};
use crate::symbol::{controllability_matrix, observability_matrix, Realization};

/// Default side (in blocks) of the top-left window compared across sections.
pub const DEFAULT_WINDOW: usize = 8;

/// An `N × N` block Toeplitz matrix with `m × m` blocks.
#[derive(Clone, Debug)]
pub struct ToeplitzSection {
    n: usize,
    m: usize,
    data: CMatrix,
}

impl ToeplitzSection {
    /// Block `(i, j)` is `coeff(i - j)`.
    pub fn from_coefficients(n: usize, m: usize, coeff: impl Fn(i64) -> CMatrix) -> Self {
        let mut data = CMatrix::zeros(n * m, n * m);
        for d in -(n as i64 - 1)..=(n as i64 - 1) {
            let block = coeff(d);
            debug_assert_eq!(block.shape(), (m, m));
            for j in 0..n {
                let i = j as i64 + d;
                if i < 0 || i >= n as i64 {
                    continue;
                }
                data.set_block(i as usize * m, j * m, &block);
            }
        }
        Self { n, m, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_data(self) -> CMatrix {
        self.data
    }

    pub fn block(&self, i: usize, j: usize) -> CMatrix {
        self.data.block(i * self.m, j * self.m, self.m, self.m)
    }
}

/// `T_{Ω,N}` with block `(i, j) = R_{i-j}`.
pub fn build_section(r: &Realization, n: usize) -> ToeplitzSection {
    let (plus, minus) = r.laurent_coefficients(n);
    ToeplitzSection::from_coefficients(n, r.m(), |d| {
        if d >= 0 {
            plus[d as usize].clone()
        } else {
            minus[(-d) as usize].clone()
        }
    })
}

/// `diag(I, rI, ..., r^{N-1}I) · M · diag(...)^{-1}` for an `N·m` square `M`.
pub fn diagonal_similarity(mat: &CMatrix, m: usize, radius: f64) -> CMatrix {
    CMatrix::from_fn(mat.rows(), mat.cols(), |p, q| {
        let e = (p / m) as i32 - (q / m) as i32;
        mat[(p, q)] * radius.powi(e)
    })
}

/// Relative Frobenius residual of `T_{Ω_r,N} = Λ T_{Ω,N} Λ^{-1}`,
/// `Λ = diag(I, rI, ..., r^{N-1}I)`.
pub fn scaling_similarity_check(r: &Realization, n: usize, radius: f64) -> Result<f64> {
    let scaled = if radius == 1.0 {
        r.scale_unchecked(1.0)
    } else {
        r.scale(radius)?
    };
    let base = build_section(r, n);
    let lhs = build_section(&scaled, n);
    let rhs = diagonal_similarity(base.data(), r.m(), radius);
    let denom = base.data().norm_fro();
    let num = lhs.data().dist(&rhs);
    Ok(if denom == 0.0 { num } else { num / denom })
}

/// Block matrix of the inverse operator, truncated to `N × N` blocks.
#[derive(Clone, Debug)]
pub struct InverseBlocks {
    pub n: usize,
    pub m: usize,
    /// `Θ^×_0 = D^{-1}`, `Θ^×_j = -D^{-1}C∘A∘^{j-1}BD^{-1}`.
    pub theta_x: Vec<CMatrix>,
    /// `Ψ^×_0 = δ^{-1}`, `Ψ^×_j = -δ^{-1}γα∘^{j-1}β∘δ^{-1}`.
    pub psi_x: Vec<CMatrix>,
    pub data: CMatrix,
}

impl InverseBlocks {
    pub fn block(&self, i: usize, j: usize) -> CMatrix {
        self.data.block(i * self.m, j * self.m, self.m, self.m)
    }
}

fn theta_x_sequence(f: &FactorPair, n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(f.d_inv.clone());
    let s = f.theta.s();
    let m = f.d.rows();
    // -D^{-1}C∘ · A∘^{j-1} · BD^{-1}
    let left = f.theta_inv.c();
    let right = f.theta_inv.b();
    let mut cur = left.clone();
    for _ in 1..n {
        if s == 0 {
            out.push(CMatrix::zeros(m, m));
        } else {
            out.push(&cur * right);
            cur = &cur * &f.a_circ;
        }
    }
    out
}

fn psi_x_sequence(f: &FactorPair, n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(f.delta_inv.clone());
    let t = f.psi.t();
    let m = f.delta.rows();
    // -δ^{-1}γ · α∘^{j-1} · β∘δ^{-1}
    let left = f.psi_inv.gamma();
    let mut cur = f.psi_inv.beta().clone();
    for _ in 1..n {
        if t == 0 {
            out.push(CMatrix::zeros(m, m));
        } else {
            out.push(left * &cur);
            cur = &f.alpha_circ * &cur;
        }
    }
    out
}

/// Assembles `[T_Ω^{-1}]_{i,j} = Σ_{k=0}^{min(i,j)} Θ^×_{i-k} Ψ^×_{j-k}` for
/// `0 ≤ i, j < N`.
pub fn inverse_blocks(f: &FactorPair, n: usize) -> InverseBlocks {
    let m = f.d.rows();
    let theta_x = theta_x_sequence(f, n);
    let psi_x = psi_x_sequence(f, n);
    let rows: Vec<Vec<CMatrix>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = CMatrix::zeros(m, m);
                    for k in 0..=i.min(j) {
                        acc = &acc + &(&theta_x[i - k] * &psi_x[j - k]);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mut data = CMatrix::zeros(n * m, n * m);
    for (i, row) in rows.iter().enumerate() {
        for (j, b) in row.iter().enumerate() {
            data.set_block(i * m, j * m, b);
        }
    }
    InverseBlocks {
        n,
        m,
        theta_x,
        psi_x,
        data,
    }
}

/// Upper triangular section of `T_Ψ`: `δ` on the diagonal and
/// `γα^{j-i-1}β∘` above it.
pub fn psi_section(f: &FactorPair, n: usize) -> ToeplitzSection {
    let m = f.delta.rows();
    let (_, minus) = f.psi.laurent_coefficients(n);
    ToeplitzSection::from_coefficients(n, m, |d| {
        if d > 0 {
            CMatrix::zeros(m, m)
        } else {
            minus[(-d) as usize].clone()
        }
    })
}

/// Upper triangular section of `T_{Ψ^{-1}}`, first block row
/// `δ^{-1}, Ψ^×_1, Ψ^×_2, ...`.
pub fn psi_inv_section(f: &FactorPair, n: usize) -> ToeplitzSection {
    let m = f.delta.rows();
    let psi_x = psi_x_sequence(f, n);
    ToeplitzSection::from_coefficients(n, m, |d| {
        if d > 0 {
            CMatrix::zeros(m, m)
        } else {
            psi_x[(-d) as usize].clone()
        }
    })
}

/// Lower triangular section of `T_Θ`: `D` on the diagonal and `C∘A^{k-1}B`
/// on the `k`-th subdiagonal.
pub fn theta_section(f: &FactorPair, n: usize) -> ToeplitzSection {
    let m = f.d.rows();
    let (plus, _) = f.theta.laurent_coefficients(n);
    ToeplitzSection::from_coefficients(n, m, |d| {
        if d < 0 {
            CMatrix::zeros(m, m)
        } else {
            plus[d as usize].clone()
        }
    })
}

/// Lower triangular section of `T_{Θ^{-1}}`.
pub fn theta_inv_section(f: &FactorPair, n: usize) -> ToeplitzSection {
    let m = f.d.rows();
    let theta_x = theta_x_sequence(f, n);
    ToeplitzSection::from_coefficients(n, m, |d| {
        if d < 0 {
            CMatrix::zeros(m, m)
        } else {
            theta_x[d as usize].clone()
        }
    })
}

/// `𝒞_{β,α,N} · [T_Ω^{-1}]_N · 𝒪_{C,A,N}` using the factorization-based
/// inverse blocks.
pub fn q_from_inverse(r: &Realization, f: &FactorPair, n: usize) -> CMatrix {
    if r.s() == 0 || r.t() == 0 {
        return CMatrix::zeros(r.t(), r.s());
    }
    let inv = inverse_blocks(f, n);
    let ctrl = controllability_matrix(r.alpha(), r.beta(), n);
    let obs = observability_matrix(r.c(), r.a(), n);
    &(&ctrl * &inv.data) * &obs
}

/// Top-left `w × w` block window of `T_{Ω,N}^{-1}` (`w ≤ N`), obtained by
/// solving against the first `w` block columns of the identity.
pub fn section_inverse_window(r: &Realization, n: usize, w: usize) -> Result<CMatrix> {
    let w = w.min(n);
    let m = r.m();
    let section = build_section(r, n);
    let lu = Lu::new(section.data()).map_err(|_| Error::SectionSingular { n })?;
    let rhs = CMatrix::from_fn(n * m, w * m, |i, j| {
        if i == j {
            crate::matcore::c64(1.0, 0.0)
        } else {
            crate::matcore::c64(0.0, 0.0)
        }
    });
    let cols = lu.solve(&rhs)?;
    Ok(cols.block(0, 0, w * m, w * m))
}

/// Largest blockwise Frobenius distance between two `w·m` square windows.
pub fn max_block_error(a: &CMatrix, b: &CMatrix, m: usize) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let w = a.rows() / m.max(1);
    let mut worst: f64 = 0.0;
    for i in 0..w {
        for j in 0..w {
            let e = a.block(i * m, j * m, m, m).dist(&b.block(i * m, j * m, m, m));
            worst = worst.max(e);
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Max over window blocks of `‖[T_N^{-1}]_{ij} - [T^{-1}]_{ij}‖_F`;
    /// `None` when the section is singular.
    pub max_block_error: Option<f64>,
}

/// Compares windows of numerically inverted sections with the
/// factorization-based inverse for each `N` in `ns`.
pub fn inverse_convergence(r: &Realization, f: &FactorPair, ns: &[usize], window: usize) -> Vec<ConvergenceRow> {
    let w = ns.iter().copied().min().unwrap_or(0).min(window);
    let exact = inverse_blocks(f, w);
    ns.par_iter()
        .map(|&n| ConvergenceRow {
            n,
            max_block_error: section_inverse_window(r, n, w)
                .ok()
                .map(|win| max_block_error(&win, &exact.data, r.m())),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectionStudyRow {
    pub n: usize,
    pub singular: bool,
    /// Max block change of the window relative to the previous `N`.
    pub window_change: Option<f64>,
    pub window_norm: Option<f64>,
}

/// Behaviour of section inverses as `N` grows, used when no stabilizing
/// Riccati solution is available.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionStudy {
    pub rows: Vec<SectionStudyRow>,
    /// Some section in the schedule is singular.
    pub singular_signal: bool,
    /// The window of `T_N^{-1}` is still moving at the largest `N`.
    pub divergence_signal: bool,
}

impl SectionStudy {
    pub fn signals_non_invertibility(&self) -> bool {
        self.singular_signal || self.divergence_signal
    }
}

/// Relative window change above which section inverses count as divergent.
pub const DIVERGENCE_TOL: f64 = 1e-6;

pub fn section_study(r: &Realization, ns: &[usize], window: usize) -> SectionStudy {
    let w = ns.iter().copied().min().unwrap_or(0).min(window);
    let wins: Vec<Option<CMatrix>> = ns.par_iter().map(|&n| section_inverse_window(r, n, w).ok()).collect();
    let mut rows = Vec::with_capacity(ns.len());
    let mut prev: Option<&CMatrix> = None;
    let mut last_change = None;
    for (&n, win) in ns.iter().zip(&wins) {
        let window_change = match (prev, win) {
            (Some(p), Some(c)) => Some(max_block_error(p, c, r.m()) / (1.0 + c.norm_fro())),
            _ => None,
        };
        last_change = window_change.or(last_change);
        rows.push(SectionStudyRow {
            n,
            singular: win.is_none(),
            window_change,
            window_norm: win.as_ref().map(CMatrix::norm_fro),
        });
        prev = win.as_ref();
    }
    let singular_signal = rows.iter().any(|row| row.singular);
    let divergence_signal = rows
        .last()
        .and_then(|row| row.window_change)
        .is_some_and(|c| c > DIVERGENCE_TOL);
    SectionStudy {
        rows,
        singular_signal,
        divergence_signal,
    }
}
