//! Invertibility analysis for block Toeplitz operators whose rational
//! matrix symbol may have poles on the unit circle.
//!
//! The symbol is given by a state-space realization
//!
//! ```text
//! Ω(z) = R0 + zC(I - zA)^{-1}B + γ(zI - α)^{-1}β
//! ```
//!
//! with `A` stable and `α` semi-stable. The operator is invertible exactly
//! when the nonsymmetric Riccati equation
//!
//! ```text
//! Q = αQA + (β - αQB)(R0 - γQB)^{-1}(C - γQA)
//! ```
//!
//! has a stabilizing solution. From that solution the crate builds the
//! factorization `Ω = ΨΘ` and explicit block entries of the inverse.
//!
//! Modules, bottom up:
//!
//! * [`matcore`]: dense complex matrices, LU, eigenvalues, singular values.
//! * [`symbol`]: realizations, evaluation, Laurent coefficients, scaling,
//!   pole/zero diagnostics.
//! * [`riccati`]: fixed-point and finite-section Riccati solvers.
//! * [`factorization`]: the factors `Θ`, `Ψ` and their inverses.
//! * [`toeplitz`]: sections, inverse blocks, convergence studies.
//! * [`io`]: JSON and CSV formats.
//! * [`instances`]: random invertible instances with unit-circle poles.
//! * [`cli`]: the `toepricc` command-line front end.

pub mod cli;
pub mod error;
pub mod factorization;
pub mod instances;
pub mod io;
pub mod matcore;
pub mod riccati;
pub mod symbol;
pub mod toeplitz;

pub use error::{Error, Result};
pub use factorization::{build_factors, FactorPair, Split};
pub use matcore::{c64, CMatrix, C64};
pub use riccati::{solve_finite_section, solve_fixed_point, FixedPointOptions, RiccatiSolution};
pub use symbol::Realization;
pub use toeplitz::{build_section, inverse_blocks, InverseBlocks, ToeplitzSection};
