use crate::chaos::SpectralForm;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_len(m: usize, z: &[f64]) -> Result<()> {
    if z.len() < m {
        return Err(Error::Domain(format!("need {m} normal deviates, got {}", z.len())));
    }
    Ok(())
}

/// `Gamma_r(F)` on one realization: `2^r sum c^{r+1} z^2` for `r >= 1`, and `F` itself for `r = 0`.
pub fn gamma_pathwise<T: Scalar>(form: &SpectralForm<T>, r: u32, z: &[f64]) -> Result<f64> {
    check_len(form.len(), z)?;
    let c = form.to_f64();
    Ok(if r == 0 {
        c.iter().zip(z).map(|(c, z)| c * (z * z - 1.0)).sum()
    } else {
        let scale = 2f64.powi(r as i32);
        scale * c.iter().zip(z).map(|(c, z)| c.powi(r as i32 + 1) * z * z).sum::<f64>()
    })
}

/// Centered operator `Gamma_r - E Gamma_r = 2^r sum c^{r+1} (z^2 - 1)`.
pub fn centered_gamma_pathwise<T: Scalar>(form: &SpectralForm<T>, r: u32, z: &[f64]) -> Result<f64> {
    check_len(form.len(), z)?;
    let c = form.to_f64();
    let scale = 2f64.powi(r as i32);
    Ok(scale * c.iter().zip(z).map(|(c, z)| c.powi(r as i32 + 1) * (z * z - 1.0)).sum::<f64>())
}

/// Precomputed coefficients `2^r c^{r+1}` for evaluating several operators per draw.
#[derive(Debug, Clone)]
pub struct GammaPath {
    coeffs: Vec<Vec<f64>>,
}

impl GammaPath {
    pub fn new<T: Scalar>(form: &SpectralForm<T>, r_max: u32) -> Self {
        let c = form.to_f64();
        let coeffs = (0..=r_max)
            .map(|r| c.iter().map(|c| 2f64.powi(r as i32) * c.powi(r as i32 + 1)).collect())
            .collect();
        Self { coeffs }
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].len()
    }

    /// Centered values `[F, bar Gamma_1, ..., bar Gamma_{r_max}]`.
    pub fn centered(&self, z: &[f64], out: &mut [f64]) {
        for (o, a) in out.iter_mut().zip(&self.coeffs) {
            *o = a.iter().zip(z).map(|(a, z)| a * (z * z - 1.0)).sum();
        }
    }
}
