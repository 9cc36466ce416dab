//! Density, distribution and first-moment weights of `G(nu)`.

use super::spectral::GammaTarget;
use crate::special::{ln_gamma, reg_lower, reg_upper};

impl GammaTarget {
    /// Left edge of the support, `-nu`.
    pub fn edge(&self) -> f64 {
        -self.nu()
    }

    /// Density `2^{-nu/2} Gamma(nu/2)^{-1} (x+nu)^{nu/2-1} e^{-(x+nu)/2}` on `x > -nu`.
    pub fn pdf(&self, x: f64) -> f64 {
        let y = 0.5 * (x + self.nu());
        if y <= 0.0 {
            return 0.0;
        }
        let s = self.shape();
        ((s - 1.0) * y.ln() - y - ln_gamma(s)).exp() * 0.5
    }

    pub fn cdf(&self, x: f64) -> f64 {
        reg_lower(self.shape(), 0.5 * (x + self.nu()))
    }

    /// Survival function `P(G > x)`.
    pub fn sf(&self, x: f64) -> f64 {
        reg_upper(self.shape(), 0.5 * (x + self.nu()))
    }

    /// `2 (x + nu) pdf(x)`, which also equals the upper partial mean `int_x^inf t pdf(t) dt`.
    pub fn tail_weight(&self, x: f64) -> f64 {
        let y = 0.5 * (x + self.nu());
        if y <= 0.0 {
            return 0.0;
        }
        let s = self.shape();
        2.0 * (s * y.ln() - y - ln_gamma(s)).exp()
    }

    /// Smallest `x` with `sf(x) <= tail`, by bisection.
    pub fn upper_quantile(&self, tail: f64) -> f64 {
        let mut lo = self.edge();
        let mut hi = self.edge() + 1.0;
        while self.sf(hi) > tail {
            hi = self.edge() + 2.0 * (hi - self.edge());
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.sf(mid) > tail {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi.abs().max(1.0) {
                break;
            }
        }
        hi
    }
}
