use num_complex::Complex64;

use super::spectral::SpectralForm;
use crate::scalar::Scalar;

/// `phi(t) = prod_j (1 - 2 i c_j t)^{-1/2} e^{-i c_j t}`, principal branch per factor.
pub fn char_function<T: Scalar>(form: &SpectralForm<T>, t: f64) -> Complex64 {
    log_char_function(&form.to_f64(), t).exp()
}

/// Sum of the principal logarithms of the factors of `phi(t)`.
pub fn log_char_function(c: &[f64], t: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &cj in c {
        let z = Complex64::new(1.0, -2.0 * cj * t);
        acc += -0.5 * z.ln() - Complex64::new(0.0, cj * t);
    }
    acc
}

/// Characteristic function of `G(nu)`: `(1 - 2 i t)^{-nu/2} e^{-i nu t}`.
pub fn target_char_function(nu: f64, t: f64) -> Complex64 {
    let z = Complex64::new(1.0, -2.0 * t);
    (-0.5 * nu * z.ln() - Complex64::new(0.0, nu * t)).exp()
}

/// `(e^{2iz} (1 - 2iz))^nu`, which equals `1 / phi_{G(nu)}(z)^2` for real `z`.
pub fn target_inverse_square(nu: f64, z: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    (nu * (2.0 * i * z + (1.0 - 2.0 * i * z).ln())).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_and_conjugate_symmetry() {
        let f = SpectralForm::new(vec![0.7, -1.3, 2.0]).unwrap();
        assert_eq!(char_function(&f, 0.0), Complex64::new(1.0, 0.0));
        let a = char_function(&f, 0.37);
        let b = char_function(&f, -0.37);
        assert!((a - b.conj()).norm() < 1e-15);
    }

    #[test]
    fn unit_spectrum_matches_target() {
        let f = SpectralForm::<f64>::gamma_embedding(3).unwrap();
        for &t in &[-2.0, 0.1, 1.7, 9.0] {
            let phi = char_function(&f, t);
            let inv = target_inverse_square(3.0, Complex64::new(t, 0.0));
            assert!((phi * phi * inv - 1.0).norm() < 1e-12);
            assert!((phi - target_char_function(3.0, t)).norm() < 1e-14);
        }
    }
}
