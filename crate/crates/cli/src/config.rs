//! Run configuration: flags layered over an optional JSON config file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;
use serde_json::Value;

use saext_core::bcclassify::{BcFamily, BcInput, DEFAULT_TOL};
use saext_core::deficiency::{self, DeficiencyBasis};
use saext_core::linalg::{Mat2, Unitary2, C64};
use saext_core::potential::Potential;

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    UToBc,
    BcToU,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Flags shared by every subcommand. Each may also come from `--config`;
/// flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    /// Potential descriptor JSON, or a basis.json written by `deficiency`.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub potential: Option<PathBuf>,
    /// Half-width of the interval; overrides the descriptor's value.
    #[arg(long)]
    pub a: Option<f64>,
    /// Matrix JSON `{"rows": ...}` (or `{"matrix": {"rows": ...}}`).
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub matrix: Option<PathBuf>,
    /// Named boundary-condition family.
    #[arg(long, value_name = "NAME")]
    pub family: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta_im: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    #[arg(long, value_enum)]
    pub direction: Option<Direction>,
    #[arg(long, allow_hyphen_values = true)]
    pub emin: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub emax: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Singularity tolerance used when classifying boundary unitaries.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Worker threads for spectrum scans.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Random draws per sampled check (verify).
    #[arg(long)]
    pub samples: Option<usize>,
    /// JSON file with any of the above keys (kebab-case).
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Inline potential descriptor from a config file.
    #[arg(skip)]
    #[serde(rename = "potential")]
    pub potential_inline: Option<Value>,
    /// Inline matrix from a config file.
    #[arg(skip)]
    #[serde(rename = "matrix")]
    pub matrix_inline: Option<Value>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($field:ident),*) => {
        $( if $dst.$field.is_none() { $dst.$field = $src.$field.clone(); } )*
    };
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{} is not valid JSON: {e}", path.display())))
}

pub enum Source {
    Potential(Potential),
    Basis(Box<DeficiencyBasis>),
}

impl RunConfig {
    /// Merge in values from `--config`, keeping flags that were given.
    pub fn resolve(mut self) -> anyhow::Result<Self> {
        let Some(path) = self.config.clone() else {
            return self.validate();
        };
        let file: RunConfig = serde_json::from_value(read_json(&path)?)
            .map_err(|e| usage(format!("config {}: {e}", path.display())))?;
        overlay!(self, file; a, family, alpha, beta_re, beta_im, gamma, theta, phi,
            direction, emin, emax, grid, out, format, tol, threads, samples,
            potential_inline, matrix_inline);
        self.validate()
    }

    fn validate(self) -> anyhow::Result<Self> {
        let positive = [("tol", self.tol), ("a", self.a)];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(usage(format!("--{name} must be positive, got {v}")));
                }
            }
        }
        if self.threads == Some(0) {
            return Err(usage("--threads must be at least 1"));
        }
        if self.samples == Some(0) {
            return Err(usage("--samples must be at least 1"));
        }
        Ok(self)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    /// The potential (zero potential on `[-a, a]` when none is given) or a
    /// serialized basis.
    pub fn source(&self) -> anyhow::Result<Source> {
        let value = match (&self.potential, &self.potential_inline) {
            (Some(path), _) => Some(read_json(path)?),
            (None, Some(v)) => Some(v.clone()),
            (None, None) => None,
        };
        let Some(mut value) = value else {
            let a = self.a.unwrap_or(1.0);
            return Ok(Source::Potential(Potential::zero(a).map_err(|e| usage(e.to_string()))?));
        };
        if value.get("boundary_table").is_some() {
            let basis = DeficiencyBasis::from_json(value).map_err(|e| usage(format!("basis: {e}")))?;
            if let Some(a) = self.a {
                if a != basis.a() {
                    return Err(usage(format!("--a {a} disagrees with the basis (a = {})", basis.a())));
                }
            }
            return Ok(Source::Basis(Box::new(basis)));
        }
        if let Some(a) = self.a {
            value["a"] = Value::from(a);
        } else if value.get("a").is_none() {
            value["a"] = Value::from(1.0);
        }
        let p: Potential =
            serde_json::from_value(value).map_err(|e| usage(format!("potential: {e}")))?;
        Ok(Source::Potential(p))
    }

    pub fn potential(&self) -> anyhow::Result<Potential> {
        Ok(match self.source()? {
            Source::Potential(p) => p,
            Source::Basis(b) => b.potential.clone(),
        })
    }

    pub fn basis(&self) -> anyhow::Result<DeficiencyBasis> {
        match self.source()? {
            Source::Basis(b) => Ok(*b),
            Source::Potential(p) => deficiency::solve(&p).map_err(|e| usage(e.to_string())),
        }
    }

    /// The matrix given by `--matrix`, if any.
    pub fn matrix(&self) -> anyhow::Result<Option<Mat2>> {
        let value = match (&self.matrix, &self.matrix_inline) {
            (Some(path), _) => read_json(path)?,
            (None, Some(v)) => v.clone(),
            (None, None) => return Ok(None),
        };
        let value = match value.get("matrix") {
            Some(inner) => inner.clone(),
            None => value,
        };
        let m: Mat2 = serde_json::from_value(value).map_err(|e| usage(format!("matrix: {e}")))?;
        Ok(Some(m))
    }

    /// Boundary-condition unitary from `--matrix` or `--family`.
    pub fn boundary_unitary(&self) -> anyhow::Result<Unitary2> {
        let input = match (self.matrix()?, &self.family) {
            (Some(_), Some(_)) => return Err(usage("give either --matrix or --family, not both")),
            (Some(m), None) => BcInput::Matrix { matrix: m },
            (None, Some(name)) => BcInput::Family(self.family_spec(name)?),
            (None, None) => return Err(usage("a boundary condition needs --matrix or --family")),
        };
        input.unitary().map_err(|e| usage(e.to_string()))
    }

    fn family_spec(&self, name: &str) -> anyhow::Result<BcFamily> {
        let beta = C64::new(self.beta_re.unwrap_or(0.0), self.beta_im.unwrap_or(0.0));
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| usage(format!("family {name} needs --{flag}")))
        };
        Ok(match name {
            "dirichlet" => BcFamily::Dirichlet,
            "neumann" => BcFamily::Neumann,
            "periodic" => BcFamily::Periodic,
            "anti-periodic" => BcFamily::AntiPeriodic,
            "dirichlet-at-a-neumann-at-minus-a" => BcFamily::DirichletAtANeumannAtMinusA,
            "neumann-at-a-dirichlet-at-minus-a" => BcFamily::NeumannAtADirichletAtMinusA,
            "robin" => BcFamily::Robin {
                alpha: need(self.alpha, "alpha")?,
                beta,
                gamma: need(self.gamma, "gamma")?,
            },
            "robin-prime" => BcFamily::RobinPrime {
                alpha: need(self.alpha, "alpha")?,
                beta,
                gamma: need(self.gamma, "gamma")?,
            },
            "automorphic" => BcFamily::Automorphic {
                theta: Some(need(self.theta, "theta")?),
                phi: Some(self.phi.unwrap_or(0.0)),
                k: None,
            },
            other => return Err(usage(format!("unknown family {other:?}"))),
        })
    }
}
