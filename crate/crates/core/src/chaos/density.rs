//! Density of a second-chaos variable by Fourier inversion of its characteristic function.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::charfn::log_char_function;
use super::spectral::SpectralForm;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::scalar::Scalar;

/// Largest number of series terms used by the inversion.
pub const MAX_TERMS: usize = 1 << 16;
/// Target magnitude of the characteristic function at the frequency cutoff.
pub const TAIL_TARGET: f64 = 1e-8;

/// Inverted density with the inversion metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CfDensity {
    pub density: GridFunction,
    /// Distribution function on the same grid, from the integrated series.
    pub cdf: Vec<f64>,
    /// Largest frequency used.
    pub cutoff: f64,
    pub terms: usize,
    /// `|phi|` at the cutoff; above [`TAIL_TARGET`] when the term cap was hit.
    pub tail_magnitude: f64,
    /// Period of the underlying series.
    pub period: f64,
    /// Set when the density is unbounded at the support edge; the grid then starts inside.
    pub edge_singular: bool,
    pub support_edge: Option<f64>,
    /// Integral of the recovered density over the grid.
    pub grid_mass: f64,
}

enum Layout {
    /// Cosine series in `y = sign (x - edge) >= 0`.
    HalfLine { edge: f64, sign: f64 },
    /// Full Fourier series on a window containing `[a, a + period]`.
    Line { a: f64 },
}

/// Recovers the density of `F` on `grid`.
pub fn density_cf_inversion<T: Scalar>(form: &SpectralForm<T>, grid: GridSpec) -> Result<CfDensity> {
    let c: Vec<f64> = form.to_f64().into_iter().filter(|c| *c != 0.0).collect();
    let sd = (2.0 * c.iter().map(|c| c * c).sum::<f64>()).sqrt();
    if grid.hi - grid.lo < 8.0 * sd {
        return Err(Error::validation(format!(
            "grid [{}, {}] spans less than 8 standard deviations ({sd})",
            grid.lo, grid.hi
        )));
    }
    let pos = c.iter().all(|&c| c > 0.0);
    let neg = c.iter().all(|&c| c < 0.0);
    if c.len() == 1 {
        return single_eigenvalue(c[0], grid);
    }
    let cmax_pos = c.iter().copied().filter(|&c| c > 0.0).fold(0.0, f64::max);
    let cmax_neg = c.iter().copied().filter(|&c| c < 0.0).fold(0.0, |m: f64, c| m.max(-c));
    let sum_pos: f64 = c.iter().copied().filter(|&c| c > 0.0).sum();
    let sum_neg: f64 = -c.iter().copied().filter(|&c| c < 0.0).sum::<f64>();

    let (layout, period, base_freq) = if pos || neg {
        let sign = if pos { 1.0 } else { -1.0 };
        let edge = -sign * (sum_pos + sum_neg);
        let cmax = cmax_pos.max(cmax_neg);
        let far = (sign * (grid.hi - edge)).max(sign * (grid.lo - edge));
        let period = (sum_pos + sum_neg + 80.0 * cmax + 10.0 * sd).max(far + 10.0 * sd);
        (Layout::HalfLine { edge, sign }, period, PI / period)
    } else {
        let a = grid.lo.min(-sum_pos - 80.0 * cmax_neg - 10.0 * sd);
        let b = grid.hi.max(sum_neg + 80.0 * cmax_pos + 10.0 * sd);
        (Layout::Line { a }, b - a, 2.0 * PI / (b - a))
    };

    // shrink the term count once |phi| is below the target
    let mut terms = MAX_TERMS;
    let mut tail = log_char_function(&c, terms as f64 * base_freq).exp().norm();
    if tail < TAIL_TARGET {
        let (mut lo, mut hi) = (1usize, MAX_TERMS);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if log_char_function(&c, mid as f64 * base_freq).exp().norm() < TAIL_TARGET {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        terms = hi;
        tail = log_char_function(&c, terms as f64 * base_freq).exp().norm();
    }
    let phi: Vec<Complex64> = (1..=terms)
        .into_par_iter()
        .map(|k| log_char_function(&c, k as f64 * base_freq).exp())
        .collect();

    let nodes = grid.nodes();
    let (dens, cdf): (Vec<f64>, Vec<f64>) = match layout {
        Layout::HalfLine { edge, sign } => {
            let coef: Vec<f64> = phi
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    // characteristic function of Y = sign (F - edge)
                    let w = (k + 1) as f64 * base_freq;
                    let shifted = if sign > 0.0 { *p } else { p.conj() } * Complex64::from_polar(1.0, -w * sign * edge);
                    shifted.re
                })
                .collect();
            nodes
                .par_iter()
                .map(|&x| {
                    let y = sign * (x - edge);
                    if y <= 0.0 {
                        return (0.0, if sign > 0.0 { 0.0 } else { 1.0 });
                    }
                    let (cs, sn) = cosine_sums(&coef, base_freq, y);
                    let f = (2.0 / period) * (0.5 + cs);
                    let cdf_y = (2.0 / period) * (0.5 * y + sn);
                    (f, if sign > 0.0 { cdf_y } else { 1.0 - cdf_y })
                })
                .unzip()
        }
        Layout::Line { a } => nodes
            .par_iter()
            .map(|&x| {
                let (f, cum) = fourier_sums(&phi, base_freq, x, a);
                ((1.0 + 2.0 * f) / period, ((x - a) + 2.0 * cum) / period)
            })
            .unzip(),
    };

    let grid_mass = cdf[cdf.len() - 1] - cdf[0];
    let support_edge = match layout {
        Layout::HalfLine { edge, .. } => Some(edge),
        Layout::Line { .. } => None,
    };
    Ok(CfDensity {
        density: GridFunction::new(grid, dens)?,
        cdf,
        cutoff: terms as f64 * base_freq,
        terms,
        tail_magnitude: tail,
        period,
        edge_singular: false,
        support_edge,
        grid_mass,
    })
}

/// `sum a_k cos(k w y)` and `sum a_k sin(k w y) / (k w)` by rotation.
fn cosine_sums(a: &[f64], w: f64, y: f64) -> (f64, f64) {
    let mut cs = 0.0;
    let mut sn = 0.0;
    let step = Complex64::from_polar(1.0, w * y);
    let mut rot = step;
    for (k, &ak) in a.iter().enumerate() {
        if k % 512 == 0 {
            rot = Complex64::from_polar(1.0, (k + 1) as f64 * w * y);
        }
        cs += ak * rot.re;
        sn += ak * rot.im / ((k + 1) as f64 * w);
        rot *= step;
    }
    (cs, sn)
}

/// `sum Re(phi_k e^{-i w_k x})` and its antiderivative from `a` to `x`.
fn fourier_sums(phi: &[Complex64], w: f64, x: f64, a: f64) -> (f64, f64) {
    let mut f = 0.0;
    let mut cum = 0.0;
    let sx = Complex64::from_polar(1.0, -w * x);
    let sa = Complex64::from_polar(1.0, -w * a);
    let (mut rx, mut ra) = (sx, sa);
    let i = Complex64::new(0.0, 1.0);
    for (k, p) in phi.iter().enumerate() {
        if k % 512 == 0 {
            rx = Complex64::from_polar(1.0, -((k + 1) as f64) * w * x);
            ra = Complex64::from_polar(1.0, -((k + 1) as f64) * w * a);
        }
        let wk = (k + 1) as f64 * w;
        f += (p * rx).re;
        cum += (p * (rx - ra) * i / wk).re;
        rx *= sx;
        ra *= sa;
    }
    (f, cum)
}

/// Exact scaled chi-square density for a single eigenvalue.
fn single_eigenvalue(c: f64, grid: GridSpec) -> Result<CfDensity> {
    let edge = -c;
    let sign = c.signum();
    let scale = c.abs();
    // restrict to the open side of the edge
    let grid = if sign > 0.0 && grid.lo <= edge {
        let lo = edge + (grid.hi - edge) / grid.n_points as f64;
        GridSpec::new(lo, grid.hi, grid.n_points)?
    } else if sign < 0.0 && grid.hi >= edge {
        let hi = edge - (edge - grid.lo) / grid.n_points as f64;
        GridSpec::new(grid.lo, hi, grid.n_points)?
    } else {
        grid
    };
    let half_ln_2pi = 0.5 * (2.0 * PI).ln();
    let nodes = grid.nodes();
    let dens: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let u = sign * (x - edge) / scale;
            if u <= 0.0 {
                0.0
            } else {
                (-0.5 * u.ln() - 0.5 * u - half_ln_2pi).exp() / scale
            }
        })
        .collect();
    let cdf: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let u = sign * (x - edge) / scale;
            let p = crate::special::reg_lower(0.5, 0.5 * u);
            if sign > 0.0 {
                p
            } else {
                1.0 - p
            }
        })
        .collect();
    let grid_mass = cdf[cdf.len() - 1] - cdf[0];
    Ok(CfDensity {
        density: GridFunction::new(grid, dens)?,
        cdf,
        cutoff: 0.0,
        terms: 0,
        tail_magnitude: 0.0,
        period: 0.0,
        edge_singular: true,
        support_edge: Some(edge),
        grid_mass: grid_mass.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_pair_recovers_gamma_two() {
        let f = SpectralForm::new(vec![1.0, 1.0]).unwrap();
        let grid = GridSpec::new(-4.0, 40.0, 441).unwrap();
        let d = density_cf_inversion(&f, grid).unwrap();
        let mut worst = 0.0f64;
        for (i, x) in grid.nodes().into_iter().enumerate() {
            // skip the node sitting on the jump
            if (x + 2.0).abs() < 1e-9 {
                continue;
            }
            let exact = if x > -2.0 { 0.5 * (-0.5 * x - 1.0f64).exp() } else { 0.0 };
            worst = worst.max((d.density.values()[i] - exact).abs());
        }
        assert!(worst < 1e-3, "sup error {worst}");
        assert!((d.grid_mass - 1.0).abs() < 1e-4, "{}", d.grid_mass);
    }

    #[test]
    fn symmetric_pair_is_symmetric() {
        let f = SpectralForm::new(vec![1.0, -1.0]).unwrap();
        let grid = GridSpec::new(-30.0, 30.0, 601).unwrap();
        let d = density_cf_inversion(&f, grid).unwrap();
        let v = d.density.values();
        for i in 0..v.len() {
            assert!((v[i] - v[v.len() - 1 - i]).abs() < 1e-6);
        }
    }

    #[test]
    fn single_eigenvalue_is_flagged() {
        let f = SpectralForm::new(vec![2.0]).unwrap();
        let d = density_cf_inversion(&f, GridSpec::new(-5.0, 60.0, 200).unwrap()).unwrap();
        assert!(d.edge_singular);
        assert!(d.density.grid().lo > -2.0);
    }
}
