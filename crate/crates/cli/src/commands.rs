use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use wgl_core::bounds::malliavin_stein_upper;
use wgl_core::chaos::cumulant_spectral;
use wgl_core::distance::{build_test_family, d2_lower_estimate, tv_distance_two_eig, D2Method};
use wgl_core::experiments::{example_form, run_experiment, ExperimentName, ExperimentParams, ExperimentSpec, HolderBasis};
use wgl_core::stein::{default_grid, named_function, solve_functional_equation, solve_stein};
use wgl_core::{GammaTarget, GridFunction, GridSpec, SpectralForm};

use crate::args::*;

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Cumulants(a) => cumulants(cli, a),
        Command::Bound(BoundCommand::Report(a)) => bound_report(cli, a),
        Command::Stein(SteinCommand::Solve(a)) => stein_solve(cli, a),
        Command::Stein(SteinCommand::Fredholm(a)) => stein_fredholm(cli, a),
        Command::Distance(DistanceCommand::D2(a)) => distance_d2(cli, a),
        Command::Distance(DistanceCommand::Tv(a)) => distance_tv(cli, a),
        Command::Experiment(ExperimentCommand::Run(a)) => experiment_run(cli, a),
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Cumulants(_) => "cumulants",
        Command::Bound(_) => "bound report",
        Command::Stein(SteinCommand::Solve(_)) => "stein solve",
        Command::Stein(SteinCommand::Fredholm(_)) => "stein fredholm",
        Command::Distance(DistanceCommand::D2(_)) => "distance d2",
        Command::Distance(DistanceCommand::Tv(_)) => "distance tv",
        Command::Experiment(_) => "experiment run",
    }
}

/// Wraps a result with the tool version, the parsed configuration and the seed.
fn envelope(cli: &Cli, seed: Option<u64>, result: impl Serialize) -> Result<Value> {
    let mut meta = json!({
        "tool": "wgl",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command_name(&cli.command),
        "config": serde_json::to_value(&cli.command)?,
        "seed": seed,
    });
    if !cli.no_timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        meta["timestamp_unix"] = json!(secs);
    }
    Ok(json!({ "meta": meta, "result": serde_json::to_value(result)? }))
}

fn emit(out: &Output, text: &str) -> Result<()> {
    match &out.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(cli: &Cli, out: &Output, seed: Option<u64>, result: impl Serialize) -> Result<()> {
    let doc = envelope(cli, seed, result)?;
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    emit(out, &text)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(wgl_core::Error::from)
        .with_context(|| format!("parsing {}", path.display()))
}

fn experiment_name(e: ExampleName) -> ExperimentName {
    match e {
        ExampleName::Naive => ExperimentName::Naive,
        ExampleName::Ustat => ExperimentName::Ustat,
        ExampleName::Ar1 => ExperimentName::Ar1,
        ExampleName::Ar2 => ExperimentName::Ar2,
        ExampleName::HolderQf => ExperimentName::HolderQf,
    }
}

fn experiment_params(p: &ExampleParams) -> ExperimentParams {
    let basis = match p.basis {
        BasisName::Trig => HolderBasis::Trig,
        BasisName::Holder => HolderBasis::Holder,
    };
    ExperimentParams { beta: p.beta, theta: p.theta, alpha: p.alpha, basis }
}

/// Builds the spectrum; examples are always rescaled to `sum c^2 = nu`, other sources only on request.
fn resolve_form(src: &FormSource, nu: Option<f64>, normalize: bool) -> Result<SpectralForm> {
    let (form, is_example) = if let Some(path) = &src.spec {
        (read_json::<SpectralForm>(path)?, false)
    } else if let Some(c) = &src.eigenvalues {
        (SpectralForm::new(c.clone())?, false)
    } else if let Some(name) = src.example {
        let Some(nu) = nu else { bail!(wgl_core::Error::Validation("--example needs --nu".into())) };
        let n = src.n.expect("clap enforces --n");
        (example_form(experiment_name(name), n, nu, &experiment_params(&src.params))?, true)
    } else {
        bail!(wgl_core::Error::Validation("give one of --spec, --eigenvalues or --example".into()));
    };
    match nu {
        Some(nu) if is_example || normalize => Ok(form.normalized(nu)?.0),
        _ => Ok(form),
    }
}

#[derive(Serialize)]
struct CumulantRow {
    p: u32,
    value: f64,
    target: Option<f64>,
}

fn cumulants(cli: &Cli, a: &CumulantArgs) -> Result<()> {
    let form = resolve_form(&a.form, a.nu, false)?;
    let target = a.nu.map(GammaTarget::new).transpose()?;
    let rows = a
        .p
        .iter()
        .map(|&p| {
            Ok(CumulantRow {
                p,
                value: cumulant_spectral(&form, p)?,
                target: target.map(|t| t.cumulant(p)).transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if a.json {
        return emit_json(cli, &a.output, None, &rows);
    }
    let text: String = if let [row] = rows.as_slice() {
        format!("{}\n", row.value)
    } else {
        rows.iter().map(|r| format!("{}\t{}\n", r.p, r.value)).collect()
    };
    emit(&a.output, &text)
}

fn bound_report(cli: &Cli, a: &BoundArgs) -> Result<()> {
    let target = GammaTarget::new(a.nu)?;
    let form = resolve_form(&a.form, Some(a.nu), a.normalize)?;
    let report = malliavin_stein_upper(&form, &target)?;
    emit_json(cli, &a.output, None, &report)
}

fn resolve_h(t: &SteinTarget, target: &GammaTarget) -> Result<GridFunction> {
    let path = Path::new(&t.h);
    if path.is_file() {
        if t.grid.is_some() {
            bail!(wgl_core::Error::Validation("--grid only applies to named test functions".into()));
        }
        return read_json(path);
    }
    let grid = match t.grid.as_deref() {
        None => default_grid(target),
        Some(&[lo, hi, n]) if n >= 2.0 && n.fract() == 0.0 => GridSpec::new(lo, hi, n as usize)?,
        Some(_) => bail!(wgl_core::Error::Validation("--grid takes lo,hi,points".into())),
    };
    Ok(named_function(&t.h, grid)?)
}

fn stein_solve(cli: &Cli, a: &SteinArgs) -> Result<()> {
    let target = GammaTarget::new(a.target.nu)?;
    let h = resolve_h(&a.target, &target)?;
    let sol = solve_stein(&h, &target)?;
    emit_json(cli, &a.output, None, &sol)
}

fn stein_fredholm(cli: &Cli, a: &FredholmArgs) -> Result<()> {
    let target = GammaTarget::new(a.target.nu)?;
    let h = resolve_h(&a.target, &target)?;
    let sol = solve_functional_equation(&h, a.lambda, &target)?;
    emit_json(cli, &a.output, None, &sol)
}

fn distance_d2(cli: &Cli, a: &D2Args) -> Result<()> {
    let target = GammaTarget::new(a.nu)?;
    let form = resolve_form(&a.form, Some(a.nu), a.normalize)?;
    let family = build_test_family(default_grid(&target), a.family_size)?;
    let method = match a.method {
        MethodName::Mc => D2Method::Mc,
        MethodName::Quadrature => D2Method::Quadrature,
    };
    log::info!("d2 over {} members, {} draws", family.len(), a.draws);
    let est = d2_lower_estimate(&form, &target, &family, method, a.draws, a.seed)?;
    emit_json(cli, &a.output, Some(a.seed), &est)
}

fn distance_tv(cli: &Cli, a: &TvArgs) -> Result<()> {
    let target = GammaTarget::new(a.nu)?;
    let form = resolve_form(&a.form, Some(a.nu), false)?;
    let &[c1, c2] = form.eigenvalues() else {
        bail!(wgl_core::Error::Validation(format!(
            "total variation needs exactly two eigenvalues, got {}",
            form.len()
        )));
    };
    let tv = tv_distance_two_eig(c1, c2, &target)?;
    emit_json(cli, &a.output, None, json!({ "eigenvalues": [c1, c2], "nu": a.nu, "tv": tv }))
}

fn experiment_run(cli: &Cli, a: &ExperimentArgs) -> Result<()> {
    let spec = ExperimentSpec {
        name: experiment_name(a.name),
        n_list: a.n_list.clone(),
        nu: a.nu,
        params: experiment_params(&a.params),
        draws: a.draws,
        seed: a.seed,
        family_size: a.family_size,
        include_small: a.include_small,
    };
    let report = run_experiment(&spec)?;
    if let Some(path) = &a.csv {
        report.write_csv(path)?;
    }
    if let Some(path) = &a.gnuplot {
        report.write_gnuplot(path)?;
    }
    emit_json(cli, &a.output, Some(a.seed), &report)
}
