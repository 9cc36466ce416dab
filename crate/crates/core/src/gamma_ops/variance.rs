use serde::{Deserialize, Serialize};

use crate::chaos::{cumulant_spectral, SpectralForm};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn factorial<T: Scalar>(n: u32) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::lit(k as f64))
}

fn check_r(r: u32) -> Result<()> {
    if r < 1 {
        return Err(Error::Domain("Gamma difference index r must be at least 1".into()));
    }
    Ok(())
}

/// `Var(Gamma_r - 2 Gamma_{r-1}) = 2^{2r+1} sum c^{2r} (c - 1)^2`.
pub fn var_gamma_diff_trace<T: Scalar>(form: &SpectralForm<T>, r: u32) -> Result<T> {
    check_r(r)?;
    let s: T = form
        .eigenvalues()
        .iter()
        .map(|&c| c.powi(2 * r as i32) * (c - T::one()) * (c - T::one()))
        .sum();
    Ok(T::lit(2.0).powi(2 * r as i32 + 1) * s)
}

/// The same variance from cumulants:
/// `k_{2r+2}/(2r+1)! - 4 k_{2r+1}/(2r)! + 4 k_{2r}/(2r-1)!`.
pub fn var_gamma_diff_cumulant<T: Scalar>(form: &SpectralForm<T>, r: u32) -> Result<T> {
    check_r(r)?;
    let four = T::lit(4.0);
    let a = cumulant_spectral(form, 2 * r + 2)? / factorial::<T>(2 * r + 1);
    let b = cumulant_spectral(form, 2 * r + 1)? / factorial::<T>(2 * r);
    let c = cumulant_spectral(form, 2 * r)? / factorial::<T>(2 * r - 1);
    Ok(a - four * b + four * c)
}

/// `Var((Gamma_3 - 2 Gamma_2) - 2 (Gamma_2 - 2 Gamma_1)) = 2^7 sum c^4 (c - 1)^4`.
pub fn var_combined<T: Scalar>(form: &SpectralForm<T>) -> T {
    let s: T = form.eigenvalues().iter().map(|&c| (c * (c - T::one())).powi(4)).sum();
    T::lit(128.0) * s
}

/// `Var(Gamma_3 - 2 Gamma_2)`, the term a direct estimate would use instead of [`var_combined`].
pub fn var_gamma_diff_suboptimal<T: Scalar>(form: &SpectralForm<T>) -> T {
    var_gamma_diff_trace(form, 3).expect("r = 3 is valid")
}

/// Gamma-difference variances for `r = 1..=r_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct GammaVarianceTable<T: Scalar = f64> {
    pub r_max: u32,
    /// Entry `r - 1` holds `Var(Gamma_r - 2 Gamma_{r-1})` from the trace formula.
    pub var_diff: Vec<T>,
    /// The same quantities through the cumulant formula.
    pub var_diff_cumulant: Vec<T>,
    pub var_combined: T,
    /// Largest relative gap between the two routes.
    pub route_discrepancy: T,
}

impl<T: Scalar> GammaVarianceTable<T> {
    pub fn new(form: &SpectralForm<T>, r_max: u32) -> Result<Self> {
        check_r(r_max)?;
        let mut var_diff = Vec::with_capacity(r_max as usize);
        let mut var_diff_cumulant = Vec::with_capacity(r_max as usize);
        let mut gap = T::zero();
        for r in 1..=r_max {
            let t = var_gamma_diff_trace(form, r)?;
            let c = var_gamma_diff_cumulant(form, r)?;
            if t > T::zero() {
                gap = gap.max((t - c).abs() / t);
            } else {
                gap = gap.max(c.abs());
            }
            var_diff.push(t);
            var_diff_cumulant.push(c);
        }
        Ok(Self { r_max, var_diff, var_diff_cumulant, var_combined: var_combined(form), route_discrepancy: gap })
    }

    /// `Var(Gamma_r - 2 Gamma_{r-1})` from the trace route.
    pub fn get(&self, r: u32) -> T {
        self.var_diff[r as usize - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let f = SpectralForm::new(vec![2.0f64]).unwrap();
        assert_eq!(var_gamma_diff_trace(&f, 1).unwrap(), 32.0);
        assert!((var_gamma_diff_cumulant(&f, 1).unwrap() - 32.0).abs() < 1e-12);
        assert_eq!(var_combined(&f), 2048.0);
        let ones = SpectralForm::new(vec![1.0; 3]).unwrap();
        for r in 1..=4 {
            assert_eq!(var_gamma_diff_trace(&ones, r).unwrap(), 0.0);
            assert_eq!(var_gamma_diff_cumulant(&ones, r).unwrap(), 0.0);
        }
        assert!(var_gamma_diff_trace(&f, 0).is_err());
    }

    #[test]
    fn routes_agree_on_mixed_spectrum() {
        let f = SpectralForm::new(vec![0.5f64, -0.5]).unwrap();
        let t = var_gamma_diff_trace(&f, 2).unwrap();
        let c = var_gamma_diff_cumulant(&f, 2).unwrap();
        assert!(((t - c) / t).abs() < 1e-10);
    }
}
