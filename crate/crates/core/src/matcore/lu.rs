use super::{CMatrix, C64};
use crate::error::{Error, Result};

/// Pivots smaller than this multiple of the largest absolute row sum are
/// treated as zero.
pub const PIVOT_RELATIVE_THRESHOLD: f64 = 1e-13;

/// LU factorization with partial (row) pivoting, `P·M = L·U`.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
}

impl Lu {
    /// Factors `m` with the default threshold
    /// `PIVOT_RELATIVE_THRESHOLD * max_row_sum(m)`.
    pub fn new(m: &CMatrix) -> Result<Self> {
        Self::with_threshold(m, PIVOT_RELATIVE_THRESHOLD * m.max_row_sum())
    }

    pub fn with_threshold(m: &CMatrix, threshold: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            // An all-zero matrix has threshold 0; a zero pivot is still singular.
            if pmax <= threshold || pmax == 0.0 {
                return Err(Error::SingularMatrix {
                    column: k,
                    pivot: pmax,
                    threshold,
                });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn order(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, rhs: &CMatrix) -> Result<CMatrix> {
        let n = self.order();
        if rhs.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "solve: system of order {n}, right-hand side has {} rows",
                rhs.rows()
            )));
        }
        let nrhs = rhs.cols();
        let mut x = CMatrix::from_fn(n, nrhs, |i, j| rhs[(self.perm[i], j)]);
        // forward substitution with unit lower L
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                if l == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..nrhs {
                    let v = x[(k, j)];
                    x[(i, j)] -= l * v;
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                if u == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..nrhs {
                    let v = x[(k, j)];
                    x[(i, j)] -= u * v;
                }
            }
            let d = self.lu[(i, i)];
            for j in 0..nrhs {
                x[(i, j)] /= d;
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> CMatrix {
        self.solve(&CMatrix::identity(self.order()))
            .expect("identity has matching rows")
    }
}

/// Solves `m · X = rhs`.
pub fn solve(m: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    if m.is_square() && m.rows() != rhs.rows() {
        return Err(Error::DimensionMismatch(format!(
            "solve: {}x{} system with {}-row right-hand side",
            m.rows(),
            m.cols(),
            rhs.rows()
        )));
    }
    Lu::new(m)?.solve(rhs)
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    Ok(Lu::new(m)?.inverse())
}
