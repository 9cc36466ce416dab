use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A second-chaos variable `F = sum_i c_i (N_i^2 - 1)` given by its eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawSpectral<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct SpectralForm<T: Scalar = f64> {
    eigenvalues: Vec<T>,
    /// Squared eigenvalue mass dropped when the form was extracted from a kernel.
    #[serde(skip_serializing_if = "is_zero")]
    discarded_mass: T,
}

fn is_zero<T: Scalar>(x: &T) -> bool {
    x.is_zero()
}

#[derive(Deserialize)]
struct RawSpectral<T> {
    eigenvalues: Vec<T>,
    #[serde(default)]
    discarded_mass: Option<T>,
}

impl<T: Scalar> TryFrom<RawSpectral<T>> for SpectralForm<T> {
    type Error = Error;

    fn try_from(raw: RawSpectral<T>) -> Result<Self> {
        let mut form = SpectralForm::new(raw.eigenvalues)?;
        form.discarded_mass = raw.discarded_mass.unwrap_or_else(T::zero);
        Ok(form)
    }
}

impl<T: Scalar> SpectralForm<T> {
    /// Builds a form, rejecting empty, non-finite or all-zero spectra.
    pub fn new(eigenvalues: Vec<T>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::validation("spectrum is empty"));
        }
        if let Some(c) = eigenvalues.iter().find(|c| !c.is_finite()) {
            return Err(Error::validation(format!("non-finite eigenvalue {c}")));
        }
        if eigenvalues.iter().all(|c| c.is_zero()) {
            return Err(Error::validation("spectrum has no nonzero eigenvalue"));
        }
        Ok(Self { eigenvalues, discarded_mass: T::zero() })
    }

    /// `nu` unit eigenvalues: a realization of G(nu) for integer nu.
    pub fn gamma_embedding(nu: usize) -> Result<Self> {
        Self::new(vec![T::one(); nu])
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn discarded_mass(&self) -> T {
        self.discarded_mass
    }

    pub(crate) fn with_discarded_mass(mut self, mass: T) -> Self {
        self.discarded_mass = mass;
        self
    }

    /// `sum_i c_i^p`.
    pub fn power_sum(&self, p: u32) -> T {
        self.eigenvalues.iter().map(|&c| c.powi(p as i32)).sum()
    }

    /// `sum_i c_i^2`.
    pub fn sum_sq(&self) -> T {
        self.power_sum(2)
    }

    /// `E[F^2] = 2 sum c^2`.
    pub fn variance(&self) -> T {
        T::lit(2.0) * self.sum_sq()
    }

    /// Multiplies every eigenvalue by `alpha`.
    pub fn scaled(&self, alpha: T) -> Result<Self> {
        let mut out = Self::new(self.eigenvalues.iter().map(|&c| c * alpha).collect())?;
        out.discarded_mass = self.discarded_mass * alpha * alpha;
        Ok(out)
    }

    /// Rescales uniformly so that `sum c^2 = nu`; returns the form and the factor used.
    pub fn normalized(&self, nu: T) -> Result<(Self, T)> {
        if !(nu > T::zero()) {
            return Err(Error::validation(format!("nu must be positive, got {nu}")));
        }
        let factor = (nu / self.sum_sq()).sqrt();
        let mut out = self.scaled(factor)?;
        // push the last bits so the variance check sees an exact match
        let residual = nu - out.sum_sq();
        if !residual.is_zero() {
            let (idx, _) = out
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite"))
                .expect("non-empty");
            let c = out.eigenvalues[idx];
            out.eigenvalues[idx] = c + residual / (T::lit(2.0) * c);
        }
        Ok((out, factor))
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> SpectralForm<U> {
        SpectralForm {
            eigenvalues: self.eigenvalues.iter().map(|c| U::lit(c.as_f64())).collect(),
            discarded_mass: U::lit(self.discarded_mass.as_f64()),
        }
    }

    /// Eigenvalues as `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|c| c.as_f64()).collect()
    }
}

/// `(p-1)! 2^{p-1}` in the scalar type.
fn cumulant_factor<T: Num + Clone + FromPrimitive>(p: u32) -> T {
    let two = T::from_u32(2).expect("small integer");
    let mut f = T::one();
    for k in 1..p {
        f = f * T::from_u32(k).expect("small integer") * two.clone();
    }
    f
}

/// `kappa_p(F) = 2^{p-1} (p-1)! sum c^p`.
pub fn cumulant_spectral<T: Scalar>(form: &SpectralForm<T>, p: u32) -> Result<T> {
    if p < 2 {
        return Err(Error::Domain(format!("spectral cumulant needs p >= 2, got {p}")));
    }
    let factor: T = cumulant_factor(p);
    Ok(factor * form.power_sum(p))
}

/// Cumulant of the centered Gamma law: zero for `p = 1`, `2^{p-1}(p-1)! nu` otherwise.
///
/// Generic over any numeric type so that exact rationals can be used.
pub fn cumulant_target<T: Num + Clone + FromPrimitive>(nu: &T, p: u32) -> Result<T> {
    match p {
        0 => Err(Error::Domain("cumulant order must be at least 1".into())),
        1 => Ok(T::zero()),
        _ => Ok(cumulant_factor::<T>(p) * nu.clone()),
    }
}

/// The centered Gamma law `G(nu) = 2 Gamma(nu/2, 1) - nu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTarget")]
pub struct GammaTarget {
    nu: f64,
}

#[derive(Deserialize)]
struct RawTarget {
    nu: f64,
}

impl TryFrom<RawTarget> for GammaTarget {
    type Error = Error;

    fn try_from(raw: RawTarget) -> Result<Self> {
        GammaTarget::new(raw.nu)
    }
}

impl GammaTarget {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::validation(format!("nu must be positive and finite, got {nu}")));
        }
        Ok(Self { nu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Shape of the underlying Gamma variable, `nu / 2`.
    pub fn shape(&self) -> f64 {
        0.5 * self.nu
    }

    pub fn cumulant(&self, p: u32) -> Result<f64> {
        cumulant_target(&self.nu, p)
    }

    /// Constant of the derivative bound, `max(1, 2/nu)`.
    pub fn c_nu(&self) -> f64 {
        (2.0 / self.nu).max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_cumulants() {
        let t = GammaTarget::new(2.0).unwrap();
        assert_eq!(t.cumulant(3).unwrap(), 16.0);
        assert_eq!(t.cumulant(4).unwrap(), 96.0);
        assert_eq!(GammaTarget::new(5.0).unwrap().cumulant(1).unwrap(), 0.0);
        assert!(t.cumulant(0).is_err());
    }

    #[test]
    fn spectral_cumulants() {
        let f = SpectralForm::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(cumulant_spectral(&f, 3).unwrap(), 16.0);
        let h = 0.5f64.sqrt();
        let g = SpectralForm::new(vec![h, -h]).unwrap();
        assert_eq!(cumulant_spectral(&g, 3).unwrap(), 0.0);
        assert!(cumulant_spectral(&g, 1).is_err());
    }

    #[test]
    fn rejects_degenerate() {
        assert!(SpectralForm::<f64>::new(vec![]).is_err());
        assert!(SpectralForm::new(vec![0.0, 0.0]).is_err());
        assert!(SpectralForm::new(vec![f64::NAN]).is_err());
        assert!(GammaTarget::new(0.0).is_err());
    }

    #[test]
    fn json_shape() {
        let f = SpectralForm::new(vec![1.5, -0.25]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"eigenvalues":[1.5,-0.25]}"#);
        let back: SpectralForm = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<SpectralForm>(r#"{"eigenvalues":[0.0]}"#).is_err());
    }

    #[test]
    fn normalization_is_exact() {
        let f = SpectralForm::new(vec![0.3f64, 1.7, -0.9]).unwrap();
        let (g, _) = f.normalized(2.0).unwrap();
        assert!((g.sum_sq() - 2.0).abs() <= 1e-15);
    }
}
