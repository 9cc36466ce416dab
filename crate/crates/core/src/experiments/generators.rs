use serde::{Deserialize, Serialize};

use crate::chaos::{spectral_from_kernel, KernelMatrix, SpectralForm};
use crate::error::{Error, Result};

/// Largest size at which [`gen_ustat`] cross-checks its eigenvalues against the kernel.
pub const USTAT_CHECK_LIMIT: usize = 100;
/// Points of the discretized `L^2[0, 1]` used to orthonormalize the Hoelder seeds.
pub const HOLDER_POINTS: usize = 10_000;

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::Domain(format!("sample size n = {n} is below {min}")));
    }
    Ok(())
}

/// Eigenvalues `sqrt(1 + 1/n)` and `sqrt(1 - 1/n)`.
pub fn gen_naive(n: usize) -> Result<SpectralForm> {
    check_n(n, 2)?;
    let x = 1.0 / n as f64;
    SpectralForm::new(vec![(1.0 + x).sqrt(), (1.0 - x).sqrt()])
}

/// Kernel `1 / sqrt(n(n-1))` off the diagonal, zero on it.
pub fn ustat_kernel(n: usize) -> Result<KernelMatrix> {
    check_n(n, 2)?;
    let v = 1.0 / ((n * (n - 1)) as f64).sqrt();
    KernelMatrix::from_lower(n, |i, j| if i == j { 0.0 } else { v })
}

/// Spectrum of the degenerate U-statistic: `sqrt((n-1)/n)` once and `-1/sqrt(n(n-1))` `n - 1` times.
pub fn gen_ustat(n: usize) -> Result<SpectralForm> {
    check_n(n, 2)?;
    let nf = n as f64;
    let mut c = vec![-1.0 / (nf * (nf - 1.0)).sqrt(); n];
    c[0] = ((nf - 1.0) / nf).sqrt();
    let form = SpectralForm::new(c)?;
    if n <= USTAT_CHECK_LIMIT {
        let k = ustat_kernel(n)?;
        let mut got = spectral_from_kernel(&k, 0.0)?.eigenvalues().to_vec();
        let mut want = form.eigenvalues().to_vec();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        let gap = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if got.len() != want.len() || gap > 1e-10 {
            return Err(Error::numerical(format!("U-statistic spectrum disagrees with its kernel by {gap:e}")));
        }
    }
    Ok(form)
}

/// Kernel with entries `beta_n^{i-j} / sqrt(n(n-1))` below the diagonal, `beta_n = 1 - beta/n`.
pub fn gen_ar1(n: usize, beta: f64) -> Result<KernelMatrix> {
    check_n(n, 2)?;
    let b = 1.0 - beta / n as f64;
    let v = 1.0 / ((n * (n - 1)) as f64).sqrt();
    KernelMatrix::from_lower(n, |i, j| if i == j { 0.0 } else { v * b.powi((i - j) as i32) })
}

/// The AR(2) quadratic form rescaled to variance 4, with its variance checks.
#[derive(Debug, Clone)]
pub struct Ar2Instance {
    pub matrix: KernelMatrix,
    /// Variance before rescaling, from the closed form.
    pub variance_closed: f64,
    /// Variance before rescaling, by direct summation.
    pub variance_brute: f64,
}

fn ar2_weight(k: usize, theta: f64) -> f64 {
    let k = k as f64;
    (theta.cos() * (k * theta).sin() - ((k - 1.0) * theta).sin()) / theta.sin()
}

/// `E[(W_n^theta)^2]` in closed form.
pub fn ar2_variance_closed(n: usize, theta: f64) -> f64 {
    let nf = n as f64;
    let (s, c) = theta.sin_cos();
    let osc = (2.0 * theta * (nf - 1.0)).cos() - 2.0 * c * (theta * (2.0 * nf - 1.0)).cos()
        + c * c * (2.0 * nf * theta).cos();
    16.0 / (nf * nf) * (osc / (8.0 * s.powi(4)) + (nf * (2.0 * theta).cos() + 1.0 - nf) / (8.0 * s * s) + nf * (nf - 1.0) / 4.0)
}

/// `E[(W_n^theta)^2] = (16/n^2) sum_{i > j} w_{i-j}^2` by double summation.
pub fn ar2_variance_brute(n: usize, theta: f64) -> f64 {
    let mut acc = 0.0;
    for i in 1..n {
        for j in 0..i {
            acc += ar2_weight(i - j, theta).powi(2);
        }
    }
    16.0 / (n * n) as f64 * acc
}

/// AR(2) form `(4/n) sum_{i>j} w_{i-j} Z_i Z_j`, rescaled by `2 / sigma_n`.
pub fn gen_ar2(n: usize, theta: f64) -> Result<Ar2Instance> {
    check_n(n, 3)?;
    if !(theta > 0.0 && theta < std::f64::consts::PI) || theta.sin() < 1e-6 {
        return Err(Error::Domain(format!("theta = {theta} must lie in (0, pi) away from the ends")));
    }
    let variance_closed = ar2_variance_closed(n, theta);
    let variance_brute = ar2_variance_brute(n, theta);
    let rel = (variance_closed - variance_brute).abs() / variance_brute;
    if rel > 1e-9 {
        return Err(Error::numerical(format!("AR(2) variance closed form off by relative {rel:e}")));
    }
    let scale = 2.0 / variance_brute.sqrt();
    let nf = n as f64;
    let weights: Vec<f64> = (0..n).map(|k| ar2_weight(k, theta)).collect();
    let matrix = KernelMatrix::from_lower(n, |i, j| if i == j { 0.0 } else { scale * 2.0 / nf * weights[i - j] })?;
    Ok(Ar2Instance { matrix, variance_closed, variance_brute })
}

/// Orthonormal basis used by the quadratic-form example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HolderBasis {
    /// `sqrt(2) cos(m pi x)`.
    Trig,
    /// Gram-Schmidt applied to `|sin(2 pi m x)|^alpha`.
    Holder,
}

/// Coefficients `T` with `e_m = sum_k T[m][k] seed_k`, orthonormal on the midpoint grid.
fn holder_coefficients(nu: usize, alpha: f64) -> Result<Vec<Vec<f64>>> {
    let xs: Vec<f64> = (0..HOLDER_POINTS).map(|i| (i as f64 + 0.5) / HOLDER_POINTS as f64).collect();
    let seed = |m: usize, x: f64| (2.0 * std::f64::consts::PI * m as f64 * x).sin().abs().powf(alpha);
    let seeds: Vec<Vec<f64>> = (1..=nu).map(|m| xs.iter().map(|&x| seed(m, x)).collect()).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(a, b)| a * b).sum::<f64>() / HOLDER_POINTS as f64;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut coeffs: Vec<Vec<f64>> = Vec::new();
    for m in 0..nu {
        let mut v = seeds[m].clone();
        let mut t = vec![0.0; nu];
        t[m] = 1.0;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for (e, te) in basis.iter().zip(&coeffs) {
                let p = dot(&v, e);
                v.iter_mut().zip(e).for_each(|(v, e)| *v -= p * e);
                t.iter_mut().zip(te).for_each(|(t, te)| *t -= p * te);
            }
        }
        let norm = dot(&v, &v).sqrt();
        let seed_norm = dot(&seeds[m], &seeds[m]).sqrt();
        if !(norm > 1e-10 * seed_norm) {
            return Err(Error::numerical(format!("Gram-Schmidt lost rank at seed {}", m + 1)));
        }
        v.iter_mut().for_each(|v| *v /= norm);
        t.iter_mut().for_each(|t| *t /= norm);
        basis.push(v);
        coeffs.push(t);
    }
    for i in 0..nu {
        for j in 0..=i {
            let want = if i == j { 1.0 } else { 0.0 };
            let got = dot(&basis[i], &basis[j]);
            if (got - want).abs() > 1e-8 {
                return Err(Error::numerical(format!("basis not orthonormal: <e_{i}, e_{j}> = {got}")));
            }
        }
    }
    Ok(coeffs)
}

/// Kernel `c_n(i, j) = sqrt(nu / sum d^2) d_n(i, j)` with `d_n(i, j) = K_nu(i/n, j/n) / n`.
pub fn gen_holder_qf(n: usize, nu: usize, alpha: f64, basis: HolderBasis) -> Result<KernelMatrix> {
    if nu < 1 {
        return Err(Error::Domain("basis size nu must be at least 1".into()));
    }
    if n <= nu {
        return Err(Error::Domain(format!("need n > nu, got n = {n}, nu = {nu}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let xs: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let values: Vec<Vec<f64>> = match basis {
        HolderBasis::Trig => (1..=nu)
            .map(|m| xs.iter().map(|x| 2f64.sqrt() * (m as f64 * std::f64::consts::PI * x).cos()).collect())
            .collect(),
        HolderBasis::Holder => {
            let t = holder_coefficients(nu, alpha)?;
            let seed = |m: usize, x: f64| (2.0 * std::f64::consts::PI * m as f64 * x).sin().abs().powf(alpha);
            t.iter()
                .map(|row| xs.iter().map(|&x| row.iter().enumerate().map(|(k, t)| t * seed(k + 1, x)).sum()).collect())
                .collect()
        }
    };
    let d = |i: usize, j: usize| values.iter().map(|e| e[i] * e[j]).sum::<f64>() / n as f64;
    let raw = KernelMatrix::from_lower(n, d)?;
    let scale = (nu as f64 / raw.frobenius_sq()).sqrt();
    Ok(raw.scaled(scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_values() {
        let f = gen_naive(10).unwrap();
        assert!((f.eigenvalues()[0] - 1.048808848).abs() < 1e-9);
        assert!((f.eigenvalues()[1] - 0.948683298).abs() < 1e-9);
        assert!(gen_naive(1).is_err());
    }

    #[test]
    fn ustat_small() {
        let f = gen_ustat(2).unwrap();
        let h = 0.5f64.sqrt();
        assert!((f.eigenvalues()[0] - h).abs() < 1e-15 && (f.eigenvalues()[1] + h).abs() < 1e-15);
        assert!((gen_ustat(37).unwrap().sum_sq() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ar1_at_zero_is_ustat() {
        assert_eq!(gen_ar1(17, 0.0).unwrap(), ustat_kernel(17).unwrap());
    }

    #[test]
    fn ar2_variance_forms_agree() {
        for &theta in &[std::f64::consts::FRAC_PI_4, 1.0] {
            for n in [3, 10, 57, 200] {
                let a = ar2_variance_closed(n, theta);
                let b = ar2_variance_brute(n, theta);
                assert!((a - b).abs() <= 1e-9 * b, "{n} {theta}: {a} {b}");
            }
        }
        let inst = gen_ar2(40, 1.0).unwrap();
        assert!((2.0 * inst.matrix.frobenius_sq() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn holder_normalization() {
        let k = gen_holder_qf(50, 2, 1.0, HolderBasis::Trig).unwrap();
        assert!((k.frobenius_sq() - 2.0).abs() < 1e-12);
        let h = gen_holder_qf(40, 3, 0.5, HolderBasis::Holder).unwrap();
        assert!((h.frobenius_sq() - 3.0).abs() < 1e-12);
        assert!(gen_holder_qf(1, 1, 1.0, HolderBasis::Trig).is_err());
    }
}
