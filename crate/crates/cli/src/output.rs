//! Writing reports as canonical JSON or flat CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::Value;

use saext_core::io::{format_float, to_canonical_json_pretty};
use saext_core::SpectrumResult;

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Basis,
    Map,
    Classify,
    Spectrum,
    Verify,
}

pub fn write(
    cfg: &RunConfig,
    kind: Kind,
    body: &Value,
    spectrum: Option<&SpectrumResult>,
) -> anyhow::Result<()> {
    let text = match cfg.format() {
        Format::Json => to_canonical_json_pretty(body)?,
        Format::Csv => match (kind, spectrum) {
            (Kind::Spectrum, Some(r)) => spectrum_table(r),
            _ => flatten_csv(body),
        },
    };
    emit(cfg.out.as_deref(), &text)?;
    if let (Format::Csv, Some(r), Some(out)) = (cfg.format(), spectrum, cfg.out.as_deref()) {
        for (i, modes) in r.eigenfunctions.iter().enumerate() {
            for (j, f) in modes.iter().enumerate() {
                let mut s = String::from("x,re_f,im_f\n");
                for p in &f.samples {
                    let _ = writeln!(
                        s,
                        "{},{},{}",
                        format_float(p.x),
                        format_float(p.f.re),
                        format_float(p.f.im)
                    );
                }
                emit(Some(&mode_path(out, i, j)), &s)?;
            }
        }
    }
    Ok(())
}

/// `dir/stem.csv` becomes `dir/stem_mode<i>_<j>.csv`.
pub fn mode_path(out: &Path, i: usize, j: usize) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("spectrum");
    out.with_file_name(format!("{stem}_mode{i}_{j}.csv"))
}

fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn spectrum_table(r: &SpectrumResult) -> String {
    let mut s = String::from("index,eigenvalue,degeneracy,residual\n");
    for (k, ((e, d), res)) in r
        .eigenvalues
        .iter()
        .zip(&r.degeneracies)
        .zip(&r.residuals)
        .enumerate()
    {
        let _ = writeln!(s, "{k},{},{d},{}", format_float(*e), format_float(*res));
    }
    s
}

/// One `path,value` line per scalar leaf, in key order.
fn flatten_csv(body: &Value) -> String {
    let mut rows = Vec::new();
    flatten(body, String::new(), &mut rows);
    let mut s = String::from("path,value\n");
    for (path, value) in rows {
        let _ = writeln!(s, "{path},{value}");
    }
    s
}

fn flatten(v: &Value, path: String, rows: &mut Vec<(String, String)>) {
    let join = |k: &str| if path.is_empty() { k.to_string() } else { format!("{path}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(child, join(k), rows);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(child, join(&i.to_string()), rows);
            }
        }
        Value::Number(n) => {
            let text = match (n.as_i64(), n.as_u64(), n.as_f64()) {
                (Some(i), _, _) => i.to_string(),
                (_, Some(u), _) => u.to_string(),
                (_, _, Some(f)) => format_float(f),
                _ => n.to_string(),
            };
            rows.push((path, text));
        }
        Value::String(s) => rows.push((path, s.replace(',', ";"))),
        Value::Bool(b) => rows.push((path, b.to_string())),
        Value::Null => rows.push((path, String::new())),
    }
}
