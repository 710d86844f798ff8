use super::{CMatrix, C64};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Singular values in descending order (`min(rows, cols)` of them), by
/// one-sided Jacobi orthogonalization of the columns. Small singular values
/// come out with high relative accuracy, unlike the eigenvalues of `M*M`.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    // orthogonalize the shorter side
    let work = if m.cols() > m.rows() { m.adjoint() } else { m.clone() };
    let (rows, cols) = work.shape();
    if cols == 0 {
        return Ok(Vec::new());
    }
    // column-major copy for cache-friendly column sweeps
    let mut u: Vec<Vec<C64>> = (0..cols).map(|j| (0..rows).map(|i| work[(i, j)]).collect()).collect();
    let tol = f64::EPSILON * rows as f64;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (left, right) = u.split_at_mut(q);
                let up = &mut left[p];
                let uq = &mut right[0];
                let alpha: f64 = up.iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = uq.iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = up.iter().zip(uq.iter()).map(|(a, b)| a.conj() * b).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rotate u_q by the phase of gamma so the pair is real
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (a, b) in up.iter_mut().zip(uq.iter_mut()) {
                    let x = *a;
                    let y = *b * phase;
                    *a = x * c - y * s;
                    *b = x * s + y * c;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: "one-sided Jacobi SVD",
            steps: MAX_SWEEPS,
        });
    }
    let mut sv: Vec<f64> = u
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    Ok(sv)
}

/// Smallest singular value; zero for a matrix with an empty dimension.
pub fn smallest_singular_value(m: &CMatrix) -> Result<f64> {
    Ok(singular_values(m)?.last().copied().unwrap_or(0.0))
}

/// Numerical rank: number of singular values above `rel_tol · σ_max`.
pub fn rank(m: &CMatrix, rel_tol: f64) -> Result<usize> {
    let sv = singular_values(m)?;
    let Some(&smax) = sv.first() else {
        return Ok(0);
    };
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > rel_tol * smax).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::c64;

    #[test]
    fn identity_has_unit_singular_values() {
        assert!((smallest_singular_value(&CMatrix::identity(3)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_deficient_diagonal() {
        let d = CMatrix::diag(&[c64(3.0, 0.0), c64(0.0, 0.0)]);
        assert_eq!(smallest_singular_value(&d).unwrap(), 0.0);
        assert_eq!(rank(&d, 1e-13).unwrap(), 1);
    }

    #[test]
    fn nilpotent_is_singular() {
        let n = CMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(smallest_singular_value(&n).unwrap(), 0.0);
        assert!((singular_values(&n).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_2x2_against_closed_form() {
        // singular values of [[1, i],[0, 1]]: sqrt((3 ± sqrt 5)/2)
        let m = CMatrix::from_vec(2, 2, vec![c64(1.0, 0.0), c64(0.0, 1.0), c64(0.0, 0.0), c64(1.0, 0.0)]).unwrap();
        let sv = singular_values(&m).unwrap();
        let hi = ((3.0 + 5f64.sqrt()) / 2.0).sqrt();
        let lo = ((3.0 - 5f64.sqrt()) / 2.0).sqrt();
        assert!((sv[0] - hi).abs() < 1e-14);
        assert!((sv[1] - lo).abs() < 1e-14);
    }

    #[test]
    fn wide_matrix_returns_min_dim_values() {
        let m = CMatrix::from_real(1, 3, &[3.0, 0.0, 4.0]).unwrap();
        let sv = singular_values(&m).unwrap();
        assert_eq!(sv.len(), 1);
        assert!((sv[0] - 5.0).abs() < 1e-14);
    }
}
