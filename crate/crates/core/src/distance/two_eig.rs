//! Closed-form density and total variation for two positive eigenvalues.

use crate::chaos::GammaTarget;
use crate::error::{Error, Result};
use crate::quadrature::integrate;

use super::kummer::kummer_1f1_half;

/// Scan resolution used to bracket density crossings.
const SCAN_NODES: usize = 4096;
/// Right end of the integration range for the total variation.
const RIGHT_CUTOFF: f64 = 200.0;

fn ordered(c1: f64, c2: f64) -> Result<(f64, f64)> {
    if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
        return Err(Error::Domain(format!("eigenvalues must be positive, got {c1} and {c2}")));
    }
    Ok((c1.max(c2), c1.min(c2)))
}

fn density(c1: f64, c2: f64, x: f64) -> f64 {
    let s = c1 + c2;
    if x <= -s {
        return 0.0;
    }
    let z = -((c1 - c2) / (2.0 * c1 * c2)) * (s + x);
    (-(x + s) / (2.0 * c1)).exp() * kummer_1f1_half(z) / (2.0 * (c1 * c2).sqrt())
}

/// Density of `c1 (N_1^2 - 1) + c2 (N_2^2 - 1)` at `x`.
pub fn two_eig_density(c1: f64, c2: f64, x: f64) -> Result<f64> {
    let (c1, c2) = ordered(c1, c2)?;
    Ok(density(c1, c2, x))
}

fn gamma_two(x: f64) -> f64 {
    if x > -2.0 {
        0.5 * (-0.5 * x - 1.0).exp()
    } else {
        0.0
    }
}

/// Total variation distance between the two-eigenvalue law and `G(2)`.
pub fn tv_distance_two_eig(c1: f64, c2: f64, target: &GammaTarget) -> Result<f64> {
    let (c1, c2) = ordered(c1, c2)?;
    if target.nu() != 2.0 {
        return Err(Error::validation(format!("closed-form comparison needs nu = 2, got {}", target.nu())));
    }
    let diff = |x: f64| density(c1, c2, x) - gamma_two(x);
    let edge_f = -(c1 + c2);
    let a = edge_f.min(-2.0);
    let mut breaks = vec![a, edge_f.max(-2.0)];

    let b = RIGHT_CUTOFF;
    let step = (b - breaks[1]) / (SCAN_NODES - 1) as f64;
    let mut prev_x = breaks[1];
    let mut prev = diff(prev_x + 1e-12);
    for i in 1..SCAN_NODES {
        let x = breaks[1] + i as f64 * step;
        let v = diff(x);
        if v != 0.0 && prev != 0.0 && v.signum() != prev.signum() {
            let (mut lo, mut hi) = (prev_x, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if diff(mid).signum() == prev.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            breaks.push(0.5 * (lo + hi));
        }
        if v != 0.0 {
            prev = v;
            prev_x = x;
        }
    }
    breaks.push(b);
    breaks.dedup();

    let mut total = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            total += integrate(|x| diff(x).abs(), w[0], w[1], 1e-14, 1e-12)?.value;
        }
    }
    Ok((0.5 * total).clamp(0.0, 1.0))
}
