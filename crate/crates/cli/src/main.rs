//! `wgl`: command-line front end for the Gamma approximation library.

mod args;
mod commands;

use std::ffi::OsString;
use std::path::Path;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use serde_json::Value;

use args::Cli;

const EXIT_VALIDATION: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let argv = match with_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }

    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<wgl_core::Error>()) {
        Some(wgl_core::Error::Numerical(_)) => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

/// Appends flags from a `--config` JSON object that the command line does not already set.
fn with_config(mut argv: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let Value::Object(map) = value else {
        anyhow::bail!("config {} must hold a JSON object", path.display());
    };
    let given: Vec<String> = argv
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    for (key, v) in map {
        let flag = key.replace('_', "-");
        if given.contains(&flag) {
            continue;
        }
        let text = match v {
            Value::Bool(true) => {
                argv.push(format!("--{flag}").into());
                continue;
            }
            Value::Bool(false) | Value::Null => continue,
            Value::Array(items) => items.iter().map(scalar_text).collect::<anyhow::Result<Vec<_>>>()?.join(","),
            other => scalar_text(&other)?,
        };
        argv.push(format!("--{flag}={text}").into());
    }
    Ok(argv)
}

fn scalar_text(v: &Value) -> anyhow::Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => anyhow::bail!("config values must be strings, numbers, booleans or lists of them, got {other}"),
    }
}

fn config_path(argv: &[OsString]) -> Option<std::path::PathBuf> {
    let mut it = argv.iter().filter_map(|a| a.to_str());
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(|p| Path::new(p).to_path_buf());
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(Path::new(p).to_path_buf());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let num = anyhow::Error::from(wgl_core::Error::Numerical("x".into())).context("outer");
        assert_eq!(exit_code(&num), EXIT_NUMERICAL);
        let val = anyhow::Error::from(wgl_core::Error::Validation("x".into()));
        assert_eq!(exit_code(&val), EXIT_VALIDATION);
        assert_eq!(exit_code(&anyhow::anyhow!("plain")), EXIT_VALIDATION);
    }

    #[test]
    fn config_fills_missing_flags_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"nu": 3, "p": [2, 3], "json": true, "normalize": false}"#).unwrap();
        let argv: Vec<OsString> = ["wgl", "cumulants", "--nu", "2", "--config", path.to_str().unwrap()]
            .iter()
            .map(OsString::from)
            .collect();
        let out: Vec<String> = with_config(argv).unwrap().into_iter().map(|a| a.into_string().unwrap()).collect();
        assert!(out.contains(&"--p=2,3".to_string()));
        assert!(out.contains(&"--json".to_string()));
        assert!(!out.iter().any(|a| a.starts_with("--nu=")));
        assert!(!out.iter().any(|a| a.starts_with("--normalize")));
    }
}
