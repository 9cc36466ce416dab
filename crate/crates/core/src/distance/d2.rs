//! Lower estimates of `d_2(F, G(nu))` over a finite test family.

use serde::{Deserialize, Serialize};

use super::family::TestFamily;
use crate::bounds::COVERAGE_LIMIT;
use crate::chaos::{density_cf_inversion, fold_draws, GammaTarget, SpectralForm};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scalar::Scalar;
use crate::stats::RunningMoments;
use crate::stein::target_expectation;

/// Smallest Monte Carlo size accepted by the `mc` method.
pub const MIN_DRAWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum D2Method {
    Mc,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub value: f64,
    /// Standard error of the member attaining the maximum (zero for quadrature).
    pub standard_error: f64,
    pub method: D2Method,
    pub family_size: usize,
    /// Index of the maximizing member.
    pub argmax: usize,
    /// Whether `G(nu)` was realized on the same normals as `F`.
    pub coupled: bool,
}

/// Indices of the `nu` eigenvalues closest to 1, when `nu` is a whole number not above the rank.
fn coupling(c: &[f64], nu: f64) -> Option<Vec<usize>> {
    if nu.fract() != 0.0 || nu as usize > c.len() {
        return None;
    }
    let mut idx: Vec<usize> = (0..c.len()).collect();
    idx.sort_by(|&a, &b| (c[a] - 1.0).abs().total_cmp(&(c[b] - 1.0).abs()));
    idx.truncate(nu as usize);
    idx.sort_unstable();
    Some(idx)
}

/// `max_h |E h(F) - E h(G(nu))|` over the family.
///
/// With `Mc` all members share one set of draws. When `nu` is an integer the
/// Gamma side is realized on the same normals, `sum_{j in J} (N_j^2 - 1)` over
/// the `nu` eigenvalues closest to 1, and the member differences are averaged
/// directly; otherwise the Gamma side is integrated exactly.
pub fn d2_lower_estimate<T: Scalar>(
    form: &SpectralForm<T>,
    target: &GammaTarget,
    family: &TestFamily,
    method: D2Method,
    draws: usize,
    seed: u64,
) -> Result<DistanceEstimate> {
    let c = form.to_f64();
    let s2: f64 = c.iter().map(|c| c * c).sum();
    if (2.0 * s2 - 2.0 * target.nu()).abs() > crate::bounds::VARIANCE_TOLERANCE {
        return Err(Error::validation("E F^2 must equal 2 nu (normalize the spectrum first)"));
    }
    let grid = family.grid;
    let (diffs, ses, coupled) = match method {
        D2Method::Mc => mc_differences(&c, target, family, draws, seed)?,
        D2Method::Quadrature => {
            let d = quadrature_differences(form, target, family, grid)?;
            let z = vec![0.0; d.len()];
            (d, z, false)
        }
    };
    let (argmax, value) = diffs
        .iter()
        .map(|d| d.abs())
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("family is non-empty");
    Ok(DistanceEstimate {
        value,
        standard_error: ses[argmax],
        method,
        family_size: family.len(),
        argmax,
        coupled,
    })
}

type Differences = (Vec<f64>, Vec<f64>, bool);

fn mc_differences(c: &[f64], target: &GammaTarget, family: &TestFamily, draws: usize, seed: u64) -> Result<Differences> {
    if draws < MIN_DRAWS {
        return Err(Error::validation(format!("need at least {MIN_DRAWS} draws, got {draws}")));
    }
    let grid = family.grid;
    let k = family.len();
    let pair = coupling(c, target.nu());
    let expectations: Vec<f64> = if pair.is_some() {
        vec![0.0; k]
    } else {
        family.members.iter().map(|h| target_expectation(h, target)).collect::<Result<_>>()?
    };
    let init = || (vec![RunningMoments::default(); k], 0u64);
    let parts = fold_draws(c.len(), draws, seed, init, |(acc, outside), z| {
        let f: f64 = c.iter().zip(z).map(|(c, z)| c * (z * z - 1.0)).sum();
        let g = pair.as_ref().map(|j| j.iter().map(|&i| z[i] * z[i] - 1.0).sum::<f64>());
        if !grid.contains(f) || g.is_some_and(|g| !grid.contains(g)) {
            *outside += 1;
        }
        for (m, h) in acc.iter_mut().zip(&family.members) {
            let v = match g {
                Some(g) => h.eval(f) - h.eval(g),
                None => h.eval(f),
            };
            m.push(v);
        }
    });
    let mut total = vec![RunningMoments::default(); k];
    let mut outside = 0;
    for (acc, o) in &parts {
        for (t, m) in total.iter_mut().zip(acc) {
            t.merge(m);
        }
        outside += o;
    }
    let frac = outside as f64 / draws as f64;
    if frac > COVERAGE_LIMIT {
        return Err(Error::Coverage(format!(
            "{frac:.3e} of the draws fall outside [{}, {}] (limit {COVERAGE_LIMIT:e})",
            grid.lo, grid.hi
        )));
    }
    let diffs = total.iter().zip(&expectations).map(|(m, e)| m.mean - e).collect();
    let ses = total.iter().map(|m| m.standard_error()).collect();
    Ok((diffs, ses, pair.is_some()))
}

/// Both expectations by quadrature, with the law of `F` from Fourier inversion on a refined grid.
fn quadrature_differences<T: Scalar>(
    form: &SpectralForm<T>,
    target: &GammaTarget,
    family: &TestFamily,
    grid: GridSpec,
) -> Result<Vec<f64>> {
    let fine = GridSpec::new(grid.lo, grid.hi, 4 * (grid.n_points - 1) + 1)?;
    let dens = density_cf_inversion(form, fine)?;
    let cdf = &dens.cdf;
    let xs = dens.density.grid().nodes();
    family
        .members
        .iter()
        .map(|h| {
            let e_g = target_expectation(h, target)?;
            let mut e_f = h.eval(xs[0]) * cdf[0] + h.eval(xs[xs.len() - 1]) * (1.0 - cdf[cdf.len() - 1]);
            for k in 0..xs.len() - 1 {
                e_f += h.eval(0.5 * (xs[k] + xs[k + 1])) * (cdf[k + 1] - cdf[k]);
            }
            Ok(e_f - e_g)
        })
        .collect()
}
