//! `saext`: batch front end for self-adjoint extension computations.
//!
//! Exit status: 0 on success, 1 when a computation or a `verify` check fails,
//! 2 for malformed input.

mod config;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use saext_core::bcclassify::classify;
use saext_core::deficiency::ParityMode;
use saext_core::extmap::{forward_map, forward_map_general, inverse_map, inverse_map_general};
use saext_core::linalg::Unitary2;
use saext_core::spectrum::{
    default_e_min, default_grid, eigenfunction_residuals, find_eigenvalues_with, SpectrumOptions,
};
use saext_core::verify::run_all;

use config::{Direction, RunConfig};

/// Input problems that map to exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "saext", version, about = "Self-adjoint extensions of -d²/dx² + V on [-a, a]")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the deficiency basis and write basis.json.
    Deficiency(RunConfig),
    /// Map between the von Neumann unitary U and the boundary unitary.
    Map(RunConfig),
    /// Classify a boundary unitary.
    Classify(RunConfig),
    /// Eigenvalues and eigenfunctions of the selected extension.
    Spectrum(RunConfig),
    /// Run the invariant checks of every module.
    Verify(RunConfig),
}

const VERIFY_SEED: u64 = 20_240_601;
const DEFAULT_SAMPLES: usize = 500;
const DEFAULT_EMAX: f64 = 50.0;

/// Runs a command; `Ok(false)` means the run completed but a check failed.
fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Deficiency(cfg) => deficiency(cfg.resolve()?),
        Command::Map(cfg) => map(cfg.resolve()?),
        Command::Classify(cfg) => classify_cmd(cfg.resolve()?),
        Command::Spectrum(cfg) => spectrum(cfg.resolve()?),
        Command::Verify(cfg) => verify(cfg.resolve()?),
    }
}

fn deficiency(cfg: RunConfig) -> anyhow::Result<bool> {
    let basis = cfg.basis()?;
    let body = basis.to_json()?;
    finish(&cfg, output::Kind::Basis, body, true, None)
}

fn map(cfg: RunConfig) -> anyhow::Result<bool> {
    let direction = cfg
        .direction
        .ok_or_else(|| UsageError("map needs --direction u-to-bc|bc-to-u".into()))?;
    let basis = cfg.basis()?;
    let even = basis.mode == ParityMode::EvenPotential;
    let (input, output, pair) = match direction {
        Direction::UToBc => {
            let m = cfg
                .matrix()?
                .ok_or_else(|| UsageError("u-to-bc needs --matrix with U".into()))?;
            let u = Unitary2::new(m).map_err(|e| UsageError(format!("U: {e}")))?;
            if even {
                let pair = forward_map(&basis, &u)?;
                (u, pair.ucal, Some(pair))
            } else {
                (u, forward_map_general(&basis, &u)?, None)
            }
        }
        Direction::BcToU => {
            let ucal = cfg.boundary_unitary()?;
            if even {
                let u = inverse_map(&basis, &ucal)?;
                let pair = forward_map(&basis, &u)?;
                (ucal, u, Some(pair))
            } else {
                (ucal, inverse_map_general(&basis, &ucal)?, None)
            }
        }
    };
    let mut body = json!({
        "direction": match direction { Direction::UToBc => "u-to-bc", Direction::BcToU => "bc-to-u" },
        "input": input,
        "output": output,
        "basis": basis.to_json()?,
    });
    if let Some(pair) = pair {
        let mut diag = serde_json::to_value(&pair)?;
        if let Some(obj) = diag.as_object_mut() {
            obj.remove("basis");
        }
        body["map_pair"] = diag;
    }
    finish(&cfg, output::Kind::Map, body, true, None)
}

fn classify_cmd(cfg: RunConfig) -> anyhow::Result<bool> {
    let ucal = cfg.boundary_unitary()?;
    let bc = classify(&ucal, cfg.tol()).map_err(|e| UsageError(e.to_string()))?;
    finish(&cfg, output::Kind::Classify, serde_json::to_value(&bc)?, true, None)
}

fn spectrum(cfg: RunConfig) -> anyhow::Result<bool> {
    let p = cfg.potential()?;
    let ucal = cfg.boundary_unitary()?;
    let bc = classify(&ucal, cfg.tol()).map_err(|e| UsageError(e.to_string()))?;
    let e_min = cfg.emin.unwrap_or_else(|| default_e_min(&p));
    let e_max = cfg.emax.unwrap_or(DEFAULT_EMAX);
    if !(e_min < e_max) {
        return Err(UsageError(format!("scan range is empty: [{e_min}, {e_max}]")).into());
    }
    let grid = cfg.grid.unwrap_or_else(|| default_grid(&p, e_min, e_max));
    let opts = SpectrumOptions {
        threads: Some(cfg.threads.unwrap_or(1)),
        ..SpectrumOptions::default()
    };
    let result = find_eigenvalues_with(&p, &bc, e_min, e_max, grid, &opts)
        .map_err(|e| match e {
            saext_core::Error::Parameter(m) => anyhow::Error::from(UsageError(m)),
            other => other.into(),
        })?;
    let residuals = eigenfunction_residuals(&result)?;
    let mut body = serde_json::to_value(&result)?;
    body["eigenfunction_residuals"] = serde_json::to_value(&residuals)?;
    finish(&cfg, output::Kind::Spectrum, body, true, Some(&result))
}

fn verify(cfg: RunConfig) -> anyhow::Result<bool> {
    let report = run_all(cfg.samples.unwrap_or(DEFAULT_SAMPLES), VERIFY_SEED)?;
    let ok = report.all_passed();
    for c in &report.checks {
        eprintln!(
            "[{}] {} = {:.3e} (threshold {:.1e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }
    finish(&cfg, output::Kind::Verify, serde_json::to_value(&report)?, ok, None)
}

fn finish(
    cfg: &RunConfig,
    kind: output::Kind,
    body: Value,
    ok: bool,
    spectrum: Option<&saext_core::SpectrumResult>,
) -> anyhow::Result<bool> {
    output::write(cfg, kind, &body, spectrum)?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
