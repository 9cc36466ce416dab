//! Finite families of test functions with `|h'| <= 1` and `|h''| <= 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

const OMEGA_MIN: f64 = 0.05;
const OMEGA_MAX: f64 = 20.0;
/// Smallest width of a smoothed ramp; its curvature is at most `1 / (2 width)`.
const RAMP_WIDTH: f64 = 0.5;
const NORM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FamilyMember {
    /// `a sin(omega x + phase)` with `a = min(1/omega, 1/omega^2)`.
    Sine { omega: f64, phase: f64, amplitude: f64 },
    /// `(x - center)/2 + (width/2) ln cosh((x - center)/width)`: slope rises from 0 to 1.
    Ramp { center: f64, width: f64 },
}

impl FamilyMember {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            FamilyMember::Sine { omega, phase, amplitude } => amplitude * (omega * x + phase).sin(),
            FamilyMember::Ramp { center, width } => {
                let t = (x - center) / width;
                let ln_cosh = t.abs() + (-2.0 * t.abs()).exp().ln_1p() - std::f64::consts::LN_2;
                0.5 * (x - center) + 0.5 * width * ln_cosh
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestFamily {
    pub grid: GridSpec,
    pub descriptors: Vec<FamilyMember>,
    #[serde(skip)]
    pub members: Vec<GridFunction>,
}

impl TestFamily {
    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }
}

/// Radical inverse of `k` in `base`.
fn van_der_corput(mut k: usize, base: usize) -> f64 {
    let mut x = 0.0;
    let mut scale = 1.0 / base as f64;
    while k > 0 {
        x += (k % base) as f64 * scale;
        k /= base;
        scale /= base as f64;
    }
    x
}

fn descriptor(k: usize, grid: &GridSpec) -> FamilyMember {
    if k % 8 == 7 {
        let j = k / 8;
        let centre_frac = 0.1 + 0.5 * van_der_corput(j + 1, 2);
        FamilyMember::Ramp {
            center: grid.lo + centre_frac * (grid.hi - grid.lo) * 0.5,
            width: RAMP_WIDTH * (1.0 + 3.0 * van_der_corput(j + 1, 3)),
        }
    } else {
        let j = k - k / 8;
        let omega = (OMEGA_MIN.ln() + van_der_corput(j, 2) * (OMEGA_MAX / OMEGA_MIN).ln()).exp();
        FamilyMember::Sine {
            omega,
            phase: 2.0 * PI * van_der_corput(j, 3),
            amplitude: (1.0 / omega).min(1.0 / (omega * omega)),
        }
    }
}

/// Builds `size` members; member `k` does not depend on `size`.
pub fn build_test_family(grid: GridSpec, size: usize) -> Result<TestFamily> {
    if size < 8 {
        return Err(Error::validation(format!("test family needs at least 8 members, got {size}")));
    }
    let descriptors: Vec<FamilyMember> = (0..size).map(|k| descriptor(k, &grid)).collect();
    let dx = grid.spacing();
    let members = descriptors
        .iter()
        .map(|d| {
            let h = grid.sample(|x| d.eval(x))?;
            let v = h.values();
            let d1 = v.windows(2).map(|w| ((w[1] - w[0]) / dx).abs()).fold(0.0, f64::max);
            let d2 = v.windows(3).map(|w| ((w[2] - 2.0 * w[1] + w[0]) / (dx * dx)).abs()).fold(0.0, f64::max);
            if d1 > 1.0 + NORM_SLACK || d2 > 1.0 + NORM_SLACK {
                return Err(Error::numerical(format!("member {d:?} breaks the norm caps: {d1}, {d2}")));
            }
            Ok(h)
        })
        .collect::<Result<_>>()?;
    Ok(TestFamily { grid, descriptors, members })
}
