//! Command-line front end: argument parsing, config-file merging, report
//! emission, exit-code mapping.
//!
//! Exit codes: 0 success, 2 usage error, 3 resource-budget error, 4 an
//! indeterminate-dominated result (more than `--indet-threshold` of the
//! threshold comparisons fell inside the tolerance band).

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

pub mod args;
pub mod commands;
pub mod input;
pub mod report;

use args::{Cli, Command};
use commands::Ctx;
use report::{emit_report, CommandOutput, Envelope, IndetSummary, Versions};
use twistlab::error::Error;
use twistlab::lattice::Limits;

const COMMAND_NAMES: &[&str] = &[
    "classify",
    "lset",
    "dirichlet",
    "measure",
    "equidist",
    "coverage",
    "dim",
    "boxdim",
    "series",
];

/// Global options that take a value; needed to locate the subcommand token.
const VALUED_GLOBALS: &[&str] = &[
    "--out-dir",
    "--seed",
    "--workers",
    "--budget",
    "--indet-threshold",
    "--config",
];

/// Expand `--config FILE` into explicit long options inserted right after the
/// subcommand token, so flags given on the command line override the file.
fn merge_config_tokens(raw: Vec<String>) -> Result<Vec<String>, String> {
    // locate the config path
    let mut config_path: Option<PathBuf> = None;
    let mut i = 0;
    while i < raw.len() {
        if raw[i] == "--config" {
            if i + 1 >= raw.len() {
                return Err("--config needs a file path".into());
            }
            config_path = Some(PathBuf::from(&raw[i + 1]));
            i += 2;
        } else if let Some(p) = raw[i].strip_prefix("--config=") {
            config_path = Some(PathBuf::from(p));
            i += 1;
        } else {
            i += 1;
        }
    }
    let Some(path) = config_path else {
        return Ok(raw);
    };

    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| format!("config file {} is not valid JSON: {e}", path.display()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| format!("config file {} must hold a JSON object", path.display()))?;

    // find the subcommand token, skipping values of valued global options
    let mut cmd_pos = None;
    let mut i = 1;
    while i < raw.len() {
        let tok = raw[i].as_str();
        if VALUED_GLOBALS.contains(&tok) {
            i += 2;
            continue;
        }
        if COMMAND_NAMES.contains(&tok) {
            cmd_pos = Some(i);
            break;
        }
        i += 1;
    }
    let Some(pos) = cmd_pos else {
        return Err("--config given but no subcommand found".into());
    };

    // flags the user gave explicitly win over the config file
    let user_flags: Vec<String> = raw[pos + 1..]
        .iter()
        .filter(|t| t.starts_with("--"))
        .map(|t| t.split('=').next().unwrap().to_string())
        .collect();

    let mut tokens = Vec::new();
    for (key, val) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        if user_flags.contains(&flag) {
            continue;
        }
        match val {
            serde_json::Value::Bool(true) => tokens.push(flag),
            serde_json::Value::Bool(false) => {}
            serde_json::Value::String(s) => {
                tokens.push(flag);
                tokens.push(s.clone());
            }
            serde_json::Value::Number(n) => {
                tokens.push(flag);
                tokens.push(n.to_string());
            }
            serde_json::Value::Array(items) => {
                let joined = items
                    .iter()
                    .map(|it| match it {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(",");
                tokens.push(flag);
                tokens.push(joined);
            }
            other => {
                return Err(format!(
                    "config key `{key}` has unsupported value {other}; use scalars or arrays"
                ))
            }
        }
    }

    let mut merged = raw;
    for (off, tok) in tokens.into_iter().enumerate() {
        merged.insert(pos + 1 + off, tok);
    }
    Ok(merged)
}

fn dispatch(cli: &Cli, ctx: &Ctx) -> twistlab::Result<(&'static str, CommandOutput)> {
    Ok(match &cli.command {
        Command::Classify(a) => ("classify", commands::run_classify(ctx, a)?),
        Command::Lset(a) => ("lset", commands::run_lset(ctx, a)?),
        Command::Dirichlet(a) => ("dirichlet", commands::run_dirichlet(ctx, a)?),
        Command::Measure(a) => ("measure", commands::run_measure(ctx, a)?),
        Command::Equidist(a) => ("equidist", commands::run_equidist(ctx, a)?),
        Command::Coverage(a) => ("coverage", commands::run_coverage(ctx, a)?),
        Command::Dim(a) => ("dim", commands::run_dim(ctx, a)?),
        Command::Boxdim(a) => ("boxdim", commands::run_boxdim(ctx, a)?),
        Command::Series(a) => ("series", commands::run_series(ctx, a)?),
    })
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let raw: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let merged = match merge_config_tokens(raw) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("usage: {msg}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&merged) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };

    let ctx = Ctx {
        seed: cli.seed,
        workers: cli.workers.max(1),
        limits: Limits {
            max_points: cli.budget,
        },
    };
    let out_dir = cli
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("twistlab-out"));

    let started = Instant::now();
    match dispatch(&cli, &ctx) {
        Ok((name, out)) => {
            let envelope = Envelope {
                command: name.to_string(),
                config: out.config,
                seed: cli.seed,
                versions: Versions::current(),
                wall_time_ms: started.elapsed().as_millis() as u64,
                outputs: out.outputs,
                claims: out.claims,
                indeterminate: IndetSummary::from(&out.counter),
            };
            match emit_report(&out_dir, name, &envelope, &out.csv_header, &out.csv_rows) {
                Ok((json_path, csv_path)) => {
                    println!(
                        "{} -> {}, {}",
                        out.summary,
                        json_path.display(),
                        csv_path.display()
                    );
                }
                Err(e) => {
                    eprintln!("{e}");
                    return 3;
                }
            }
            if out.counter.comparisons > 0
                && out.counter.indeterminate_fraction() > cli.indet_threshold
            {
                eprintln!(
                    "indeterminate-dominated result: {}/{} comparisons fell in the tolerance band",
                    out.counter.indeterminate, out.counter.comparisons
                );
                return 4;
            }
            0
        }
        Err(e @ Error::Usage(_)) => {
            eprintln!("{e}");
            2
        }
        Err(e @ Error::Resource(_)) => {
            eprintln!("{e}");
            3
        }
    }
}
