// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

mod commands;
mod output;

use output::{Format, Report};

#[derive(Parser, Debug)]
#[command(name = "cuspidal", version, about = "Model Bergman kernels, neck integrals and balanced log pairs")]
struct Cli {
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the tolerance asserted by the subcommand.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON run configuration; for `balance-flow`, the cycle configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// μ_a of the model kernel, with its regime and route.
    ModelMu(commands::ModelMuArgs),
    /// The Gaussian-comb integral against 2 on a grid of b.
    ThetaCheck(commands::ThetaArgs),
    /// Ladder integrals I, I' per (a, n) against 3/8, 1/8, 0.
    LadderTable(commands::LadderArgs),
    /// Balancing of the degenerate pair at λ_k.
    ChowVerify(commands::ChowArgs),
    /// Energy of the deviation model over a k grid.
    EnergyScan(commands::EnergyArgs),
    /// Torus balancing flow on the cycle given by --config.
    BalanceFlow(commands::BalanceArgs),
}

/// Options shared by all subcommands, plus the subcommand's own parameters.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RunConfig {
    #[serde(default = "schema_version")]
    schema_version: u32,
    format: Option<Format>,
    out: Option<PathBuf>,
    tol: Option<f64>,
    threads: Option<usize>,
    #[serde(default)]
    params: Option<serde_json::Value>,
}

fn schema_version() -> u32 {
    output::SCHEMA_VERSION
}

fn read_json(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_run_config(path: &Path) -> Result<RunConfig> {
    let rc: RunConfig = serde_json::from_str(&read_json(path)?).with_context(|| format!("parsing {}", path.display()))?;
    if rc.schema_version != output::SCHEMA_VERSION {
        bail!("unsupported schemaVersion {} in {}", rc.schema_version, path.display());
    }
    Ok(rc)
}

/// Merges command-line values over the file's `params` block.
fn merged<T: Args + for<'de> Deserialize<'de> + commands::Merge>(cli: T, params: &Option<serde_json::Value>) -> Result<T> {
    match params {
        None => Ok(cli),
        Some(v) => {
            let file: T = serde_json::from_value(v.clone()).context("parsing params")?;
            Ok(cli.merge(file))
        }
    }
}

fn run(cli: Cli) -> Result<(Report, Format, Option<PathBuf>)> {
    let is_flow = matches!(cli.command, Command::BalanceFlow(_));
    let rc = match (&cli.config, is_flow) {
        (Some(p), false) => load_run_config(p)?,
        _ => RunConfig::default(),
    };
    let format = cli.format.or(rc.format).unwrap_or(Format::Csv);
    let out = cli.out.or(rc.out);
    let tol = cli.tol.or(rc.tol);
    if let Some(t) = tol {
        if !(t > 0.0) {
            bail!("--tol must be positive, got {t}");
        }
    }
    if let Some(n) = cli.threads.or(rc.threads) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring threads")?;
    }
    let report = match cli.command {
        Command::ModelMu(a) => commands::model_mu(merged(a, &rc.params)?, tol)?,
        Command::ThetaCheck(a) => commands::theta_check(merged(a, &rc.params)?, tol)?,
        Command::LadderTable(a) => commands::ladder_table(merged(a, &rc.params)?, tol)?,
        Command::ChowVerify(a) => commands::chow_verify(merged(a, &rc.params)?, tol)?,
        Command::EnergyScan(a) => commands::energy_scan(merged(a, &rc.params)?)?,
        Command::BalanceFlow(a) => {
            let path = cli.config.context("balance-flow needs --config PATH (a cycle configuration)")?;
            let cycle = cuspidal::chow::CycleConfig::from_json(&read_json(&path)?)?;
            commands::balance_flow(a, &cycle, tol)?
        }
    };
    Ok((report, format, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((report, format, out)) => {
            let text = report.render(format);
            match out {
                Some(p) => {
                    if let Err(e) = std::fs::write(&p, text) {
                        eprintln!("error: writing {}: {e}", p.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                eprintln!("{}", report.failure_json());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let msg = format!("{e:#}");
            eprintln!("{}", serde_json::json!({ "schemaVersion": output::SCHEMA_VERSION, "error": msg }));
            ExitCode::from(2)
        }
    }
}
