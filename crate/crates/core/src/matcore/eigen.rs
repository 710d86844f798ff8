use super::{CMatrix, C64};
use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;

/// Reduces a square matrix to upper Hessenberg form by Householder
/// similarity transformations. The result has the same eigenvalues.
pub fn hessenberg(m: &CMatrix) -> CMatrix {
    assert!(m.is_square());
    let n = m.rows();
    let mut h = m.clone();
    if n < 3 {
        return h;
    }
    for k in 0..n - 2 {
        let mut v: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        // v = x + phase*|x| e1 avoids cancellation
        v[0] = x0 + phase * xnorm;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- (I - 2vv*) H on rows k+1..n
        for j in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for (idx, vi) in v.iter().enumerate() {
                dot += vi.conj() * h[(k + 1 + idx, j)];
            }
            let dot = dot * 2.0;
            for (idx, vi) in v.iter().enumerate() {
                h[(k + 1 + idx, j)] -= vi * dot;
            }
        }
        // H <- H (I - 2vv*) on columns k+1..n
        for i in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for (idx, vi) in v.iter().enumerate() {
                dot += h[(i, k + 1 + idx)] * vi;
            }
            let dot = dot * 2.0;
            for (idx, vi) in v.iter().enumerate() {
                h[(i, k + 1 + idx)] -= dot * vi.conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
    }
    h
}

/// Eigenvalue of the trailing 2×2 block closest to its last diagonal entry.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let mu1 = mid + disc;
    let mu2 = mid - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

/// One explicitly shifted QR step on the active window `lo..=hi` of an upper
/// Hessenberg matrix. Only the window is updated since only eigenvalues are
/// wanted.
fn qr_step(h: &mut CMatrix, lo: usize, hi: usize, shift: C64) {
    for i in lo..=hi {
        h[(i, i)] -= shift;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let a = h[(k, k)];
        let b = h[(k + 1, k)];
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 {
            (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
        } else {
            (a / r, b / r)
        };
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = c.conj() * x + s.conj() * y;
            h[(k + 1, j)] = -s * x + c * y;
        }
        rots.push((c, s));
    }
    for (off, &(c, s)) in rots.iter().enumerate() {
        let k = lo + off;
        for i in lo..=(k + 1).min(hi) {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + y * s;
            h[(i, k + 1)] = -x * s.conj() + y * c.conj();
        }
    }
    for i in lo..=hi {
        h[(i, i)] += shift;
    }
}

/// All eigenvalues of a square matrix, via Hessenberg reduction followed by
/// Wilkinson-shifted QR iteration with deflation. Gives up after `100·n²`
/// QR steps.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = hessenberg(m);
    let scale = h.max_abs();
    let mut eig = vec![C64::new(0.0, 0.0); n];
    let cap = 100 * n * n;
    let mut steps = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut lo = hi;
        while lo > 0 {
            let mut s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if s == 0.0 {
                s = scale;
            }
            if h[(lo, lo - 1)].norm() <= EPS * s {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if steps >= cap {
            return Err(Error::NonConvergence {
                what: "Hessenberg QR",
                steps,
            });
        }
        steps += 1;
        since_deflation += 1;
        let shift = if since_deflation % 11 == 10 {
            // exceptional shift breaks symmetric stagnation cycles
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        qr_step(&mut h, lo, hi, shift);
    }
    Ok(eig)
}

/// Largest eigenvalue modulus; zero for the empty matrix.
pub fn spectral_radius(m: &CMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}
