//! Stein equation `x f' + (r - x) f = h - E h(X_r)` of the uncentered law `Gamma(r, 1)`.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::special::{ln_gamma, reg_lower, reg_upper};
use crate::stats::NeumaierSum;

struct Law {
    r: f64,
    ln_gamma_r: f64,
}

impl Law {
    fn p(&self, y: f64) -> f64 {
        reg_lower(self.r, y)
    }

    fn q(&self, y: f64) -> f64 {
        reg_upper(self.r, y)
    }

    /// `y p_r(y) = y^r e^{-y} / Gamma(r)`.
    fn weight(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            (self.r * y.ln() - y - self.ln_gamma_r).exp()
        }
    }

    fn mass(&self, a: f64, b: f64) -> f64 {
        let pb = self.p(b);
        if pb <= 0.5 {
            pb - self.p(a)
        } else {
            self.q(a) - self.q(b)
        }
    }

    /// `int_a^b t p_r(t) dt = r (P(r+1, b) - P(r+1, a))`.
    fn mean_part(&self, a: f64, b: f64) -> f64 {
        let pb = reg_lower(self.r + 1.0, b);
        if pb <= 0.5 {
            self.r * (pb - reg_lower(self.r + 1.0, a))
        } else {
            self.r * (reg_upper(self.r + 1.0, a) - reg_upper(self.r + 1.0, b))
        }
    }

    fn tail_mean(&self, a: f64) -> f64 {
        self.r * reg_upper(self.r + 1.0, a)
    }
}

/// Bounded solution `f_h` on the grid of `h`, which must lie in `[0, inf)`.
///
/// At `y = 0` the continuity value `(h(0) - E h(X_r)) / r` is used.
pub fn gamma_stein_classical(h: &GridFunction, r: f64) -> Result<GridFunction> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("shape r must be positive, got {r}")));
    }
    let grid = *h.grid();
    if grid.lo < 0.0 {
        return Err(Error::Domain(format!("grid must start at y >= 0, got {}", grid.lo)));
    }
    let law = Law { r, ln_gamma_r: ln_gamma(r) };
    let n = grid.n_points;
    let v = h.values();
    let slope: Vec<f64> = (0..n - 1).map(|k| h.slope(k)).collect();
    let alpha = |k: usize| v[k] - slope[k] * grid.x(k);
    let ys = grid.nodes();

    // pieces: [0, y_0] extrapolated, the segments, and [y_{n-1}, inf)
    let piece = |a: f64, b: f64, k: usize, e: f64| (alpha(k) - e) * law.mass(a, b) + slope[k] * law.mean_part(a, b);
    let tail = |e: f64| (alpha(n - 2) - e) * law.q(ys[n - 1]) + slope[n - 2] * law.tail_mean(ys[n - 1]);

    let mut acc = NeumaierSum::new();
    acc.add(piece(0.0, ys[0], 0, 0.0));
    for k in 0..n - 1 {
        acc.add(piece(ys[k], ys[k + 1], k, 0.0));
    }
    acc.add(tail(0.0));
    let e = acc.value();

    let mut lower = vec![0.0; n];
    let mut run = NeumaierSum::new();
    run.add(piece(0.0, ys[0], 0, e));
    lower[0] = run.value();
    for k in 0..n - 1 {
        run.add(piece(ys[k], ys[k + 1], k, e));
        lower[k + 1] = run.value();
    }
    let mut upper = vec![0.0; n];
    let mut run = NeumaierSum::new();
    run.add(tail(e));
    upper[n - 1] = run.value();
    for k in (0..n - 1).rev() {
        run.add(piece(ys[k], ys[k + 1], k, e));
        upper[k] = run.value();
    }

    let f: Vec<f64> = (0..n)
        .map(|k| {
            let y = ys[k];
            if y == 0.0 {
                return (v[k] - e) / r;
            }
            let w = law.weight(y);
            if law.p(y) <= 0.5 {
                lower[k] / w
            } else if w > 0.0 {
                -upper[k] / w
            } else {
                -(v[k] - e) / y
            }
        })
        .collect();
    GridFunction::new(grid, f)
}
