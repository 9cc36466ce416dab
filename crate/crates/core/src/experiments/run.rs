//! Runs the bound and distance pipelines along an example sequence and fits log-log slopes.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generators::{gen_ar1, gen_ar2, gen_holder_qf, gen_naive, gen_ustat, HolderBasis};
use crate::bounds::{malliavin_stein_upper, BoundReport};
use crate::chaos::{spectral_from_kernel, GammaTarget, KernelMatrix, SpectralForm};
use crate::distance::{build_test_family, d2_lower_estimate, tv_distance_two_eig, D2Method};
use crate::error::{Error, Result};
use crate::stats::ols;
use crate::stein::default_grid;

/// Quantities below this are treated as zero up to rounding.
const ANALYTIC_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    Naive,
    Ustat,
    Ar1,
    Ar2,
    HolderQf,
}

impl std::str::FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "naive" => Self::Naive,
            "ustat" => Self::Ustat,
            "ar1" => Self::Ar1,
            "ar2" => Self::Ar2,
            "holder_qf" => Self::HolderQf,
            _ => return Err(Error::validation(format!("unknown experiment '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentParams {
    pub beta: f64,
    pub theta: f64,
    pub alpha: f64,
    pub basis: HolderBasis,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self { beta: 0.0, theta: 1.0, alpha: 1.0, basis: HolderBasis::Trig }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub n_list: Vec<usize>,
    pub nu: f64,
    #[serde(default)]
    pub params: ExperimentParams,
    /// Monte Carlo draws for the empirical `d_2`; zero skips it.
    #[serde(default)]
    pub draws: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_family_size")]
    pub family_size: usize,
    /// Keep the two smallest `n` in the slope fits.
    #[serde(default)]
    pub include_small: bool,
}

fn default_family_size() -> usize {
    64
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::validation("n_list is empty"));
        }
        if self.n_list.iter().any(|&n| n < 2) {
            return Err(Error::validation("every n must be at least 2"));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("n_list must be strictly increasing"));
        }
        GammaTarget::new(self.nu)?;
        if self.name == ExperimentName::Ar1 && self.params.beta != 0.0 {
            return Err(Error::validation(
                "ar1 with beta != 0 has a non-Gamma limit; only beta = 0 runs through the pipeline",
            ));
        }
        if self.name == ExperimentName::HolderQf && self.nu.fract() != 0.0 {
            return Err(Error::validation("holder_qf needs an integer basis size nu"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    /// Factor applied to every eigenvalue to reach `sum c^2 = nu`.
    pub scale_factor: f64,
    pub kappa3_diff: f64,
    pub kappa4_diff: f64,
    pub report: BoundReport,
    pub d2_standard_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub standard_error: f64,
    /// Number of `n` values used.
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub spec: ExperimentSpec,
    pub rows: Vec<RateRow>,
    pub slope_m: Option<SlopeFit>,
    pub slope_sqrt_m: Option<SlopeFit>,
    pub slope_d2_upper_shape: Option<SlopeFit>,
    pub slope_d2_upper_suboptimal: Option<SlopeFit>,
    pub slope_term_suboptimal: Option<SlopeFit>,
    pub slope_kappa3_diff: Option<SlopeFit>,
    pub slope_kappa4_diff: Option<SlopeFit>,
    pub slope_empirical_d2: Option<SlopeFit>,
    pub slope_tv: Option<SlopeFit>,
}

fn from_kernel(k: &KernelMatrix) -> Result<SpectralForm> {
    spectral_from_kernel(k, k.default_tol())
}

/// Unnormalized spectrum of example `name` at size `n`.
pub fn example_form(name: ExperimentName, n: usize, nu: f64, params: &ExperimentParams) -> Result<SpectralForm> {
    match name {
        ExperimentName::Naive => gen_naive(n),
        ExperimentName::Ustat => gen_ustat(n),
        ExperimentName::Ar1 => from_kernel(&gen_ar1(n, params.beta)?),
        ExperimentName::Ar2 => from_kernel(&gen_ar2(n, params.theta)?.matrix),
        ExperimentName::HolderQf => {
            if nu.fract() != 0.0 || nu < 1.0 {
                return Err(Error::validation("holder_qf needs an integer basis size nu"));
            }
            from_kernel(&gen_holder_qf(n, nu as usize, params.alpha, params.basis)?)
        }
    }
}

fn run_one(spec: &ExperimentSpec, target: &GammaTarget, n: usize) -> Result<RateRow> {
    let raw = example_form(spec.name, n, spec.nu, &spec.params)?;
    let (form, scale_factor) = raw.normalized(target.nu())?;
    let mut report = malliavin_stein_upper(&form, target)?;
    let mut d2_se = None;
    if spec.draws > 0 {
        let family = build_test_family(default_grid(target), spec.family_size)?;
        let est = d2_lower_estimate(&form, target, &family, D2Method::Mc, spec.draws, spec.seed)?;
        report.empirical_d2 = Some(est.value);
        d2_se = Some(est.standard_error);
    }
    if spec.name == ExperimentName::Naive && target.nu() == 2.0 {
        let c = form.eigenvalues();
        report.tv_estimate = Some(tv_distance_two_eig(c[0], c[1], target)?);
    }
    let sign = |x: f64, y: f64| if x < y { -1.0 } else { 1.0 };
    Ok(RateRow {
        n,
        scale_factor,
        kappa3_diff: report.term_kappa3 * sign(report.kappa3, 8.0 * target.nu()),
        kappa4_diff: report.term_kappa4 * sign(report.kappa4, 48.0 * target.nu()),
        report,
        d2_standard_error: d2_se,
    })
}

/// Runs every `n` of the spec and fits the slopes.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RateReport> {
    spec.validate()?;
    let target = GammaTarget::new(spec.nu)?;
    let rows: Vec<RateRow> = spec
        .n_list
        .par_iter()
        .map(|&n| {
            run_one(spec, &target, n).map_err(|e| annotate(e, spec.name, n))
        })
        .collect::<Result<_>>()?;

    let skip = if spec.include_small || rows.len() <= 3 { 0 } else { 2 };
    let fit = |value: &dyn Fn(&RateRow) -> Option<(f64, f64)>| -> Option<SlopeFit> {
        let (x, y): (Vec<f64>, Vec<f64>) = rows[skip..]
            .iter()
            .filter_map(|r| {
                let (v, floor) = value(r)?;
                (v.abs() > floor).then(|| ((r.n as f64).ln(), v.abs().ln()))
            })
            .unzip();
        ols(&x, &y).map(|(slope, intercept, se)| SlopeFit { slope, intercept, standard_error: se, points: x.len() })
    };
    let analytic = |v: f64| Some((v, ANALYTIC_FLOOR));
    Ok(RateReport {
        slope_m: fit(&|r| analytic(r.report.m)),
        slope_sqrt_m: fit(&|r| analytic(r.report.sqrt_m)),
        slope_d2_upper_shape: fit(&|r| analytic(r.report.d2_upper_shape)),
        slope_d2_upper_suboptimal: fit(&|r| analytic(r.report.d2_upper_suboptimal)),
        slope_term_suboptimal: fit(&|r| analytic(r.report.term_suboptimal)),
        slope_kappa3_diff: fit(&|r| analytic(r.kappa3_diff)),
        slope_kappa4_diff: fit(&|r| analytic(r.kappa4_diff)),
        slope_empirical_d2: fit(&|r| Some((r.report.empirical_d2?, 10.0 * r.d2_standard_error?))),
        slope_tv: fit(&|r| analytic(r.report.tv_estimate?)),
        spec: spec.clone(),
        rows,
    })
}

fn annotate(e: Error, name: ExperimentName, n: usize) -> Error {
    let tag = format!("{name:?} n = {n}").to_lowercase();
    match e {
        Error::Validation(m) => Error::Validation(format!("{tag}: {m}")),
        Error::Domain(m) => Error::Domain(format!("{tag}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("{tag}: {m}")),
        Error::Coverage(m) => Error::Coverage(format!("{tag}: {m}")),
        Error::TailMass(m) => Error::TailMass(format!("{tag}: {m}")),
        other => other,
    }
}

#[derive(Serialize)]
struct CsvRow {
    n: usize,
    kappa3_diff: f64,
    kappa4_diff: f64,
    #[serde(rename = "M")]
    m: f64,
    d2_upper_shape: f64,
    d2_empirical: Option<f64>,
    tv: Option<f64>,
}

impl RateReport {
    fn csv_rows(&self) -> impl Iterator<Item = CsvRow> + '_ {
        self.rows.iter().map(|r| CsvRow {
            n: r.n,
            kappa3_diff: r.kappa3_diff,
            kappa4_diff: r.kappa4_diff,
            m: r.report.m,
            d2_upper_shape: r.report.d2_upper_shape,
            d2_empirical: r.report.empirical_d2,
            tv: r.report.tv_estimate,
        })
    }

    /// Writes the per-n table as CSV.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in self.csv_rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Whitespace-separated columns for gnuplot; missing values are written as `NaN`.
    pub fn write_gnuplot(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "# n kappa3_diff kappa4_diff M d2_upper_shape d2_empirical tv")?;
        let opt = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), |v| format!("{v:e}"));
        for r in self.csv_rows() {
            writeln!(
                f,
                "{} {:e} {:e} {:e} {:e} {} {}",
                r.n,
                r.kappa3_diff,
                r.kappa4_diff,
                r.m,
                r.d2_upper_shape,
                opt(r.d2_empirical),
                opt(r.tv)
            )?;
        }
        f.flush()?;
        Ok(())
    }
}
