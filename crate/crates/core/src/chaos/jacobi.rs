//! Cyclic Jacobi eigenvalue iteration for dense symmetric matrices.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of the symmetric row-major `n x n` matrix `a`, unsorted.
pub fn symmetric_eigenvalues<T: Scalar>(a: &[T], n: usize) -> Result<Vec<T>> {
    if a.len() != n * n {
        return Err(Error::validation(format!("expected {} entries, got {}", n * n, a.len())));
    }
    let mut m = a.to_vec();
    let total: T = m.iter().map(|&x| x * x).sum();
    if total.is_zero() {
        return Ok(vec![T::zero(); n]);
    }
    let two = T::lit(2.0);
    let stop = T::epsilon() * T::epsilon() * total;
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off <= stop {
            return Ok((0..n).map(|i| m[i * n + i]).collect());
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.is_zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                if apq.abs() < T::epsilon() * T::epsilon() * (app.abs() + aqq.abs()) {
                    m[p * n + q] = T::zero();
                    m[q * n + p] = T::zero();
                    continue;
                }
                let theta = (aqq - app) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta.is_zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let rp = m[p * n + k];
                    let rq = m[q * n + k];
                    let np = c * rp - s * rq;
                    let nq = s * rp + c * rq;
                    m[p * n + k] = np;
                    m[q * n + k] = nq;
                    m[k * n + p] = np;
                    m[k * n + q] = nq;
                }
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = T::zero();
                m[q * n + p] = T::zero();
            }
        }
    }
    Err(Error::numerical(format!("Jacobi iteration did not converge in {MAX_SWEEPS} sweeps (n = {n})")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn two_by_two() {
        let e = sorted(symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2).unwrap());
        assert!((e[0] - 1.0).abs() < 1e-15 && (e[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn tridiagonal_laplacian() {
        // eigenvalues of tridiag(-1, 2, -1) are 2 - 2 cos(k pi / (n+1))
        let n = 12;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 2.0;
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
                a[(i + 1) * n + i] = -1.0;
            }
        }
        let e = sorted(symmetric_eigenvalues(&a, n).unwrap());
        for (k, v) in e.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13, "{v} vs {exact}");
        }
    }

    #[test]
    fn single_precision() {
        let e = symmetric_eigenvalues(&[1.0f32, 0.5, 0.5, 1.0], 2).unwrap();
        let mut e: Vec<f32> = e;
        e.sort_by(f32::total_cmp);
        assert!((e[0] - 0.5).abs() < 1e-6 && (e[1] - 1.5).abs() < 1e-6);
    }
}
