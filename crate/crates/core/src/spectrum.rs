//! Eigenvalues and eigenfunctions of the extension selected by `𝒰`.
//!
//! For real `E` let `u1, u2` be the real solutions with data `(1, 0)` and
//! `(0, 1)` at `x = -a`, and let `B` have columns
//! `(u_k'(a) + i u_k(a), u_k'(-a) - i u_k(-a))`. The boundary condition on
//! `f = c1 u1 + c2 u2` reads `(T(E) - 𝒰) B c = 0` with `T = conj(B) B⁻¹`.
//! `B` is always invertible and `T` is unitary, so `σ_min(T - 𝒰)` lies in
//! `[0, 2]`, vanishes exactly at eigenvalues and has a corner (not a
//! tangency) there, even at double roots. Roots are located on that function.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bcclassify::{bc_residual, BoundaryCondition};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, C64, I, ONE, ZERO};
use crate::odesolve::{
    integrate_pair, l2_inner, l2_norm, propagate_pair, simpson, OdeSolution, Tolerances,
};
use crate::potential::Potential;

pub const MIN_GRID: usize = 16;
/// Root acceptance: `σ_min(T - 𝒰) ≤ ACCEPT_TOL · 2`.
pub const ACCEPT_TOL: f64 = 1e-7;
/// Double root: `σ_max(T - 𝒰) ≤ DEGENERACY_TOL · 2`.
pub const DEGENERACY_TOL: f64 = 1e-5;
/// Gate on the boundary residual of a stored eigenfunction.
pub const RESIDUAL_GATE: f64 = 1e-6;
const UNITARY_SCALE: f64 = 2.0;
const GOLDEN_REL_WIDTH: f64 = 1e-13;
const GOLDEN_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    pub tol: Tolerances,
    /// Worker threads for the scan; `None` uses the global pool.
    pub threads: Option<usize>,
    pub accept_tol: f64,
    pub degeneracy_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            tol: Tolerances::default(),
            threads: None,
            accept_tol: ACCEPT_TOL,
            degeneracy_tol: DEGENERACY_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub bc: BoundaryCondition,
    pub potential: Potential,
    pub e_min: f64,
    pub e_max: f64,
    pub grid: usize,
    pub eigenvalues: Vec<f64>,
    pub degeneracies: Vec<u8>,
    #[serde(skip)]
    pub eigenfunctions: Vec<Vec<OdeSolution>>,
    /// Worst boundary residual over the eigenfunctions of each eigenvalue.
    pub residuals: Vec<f64>,
    /// `(E, |det M(E)|)` at each scan point.
    pub det_trace: Vec<(f64, f64)>,
    /// Candidates that were rejected, with the reason.
    pub diagnostics: Vec<String>,
}

/// Boundary matrix pieces at energy `E`: `B`, `conj(B)` and the raw solution
/// data `[[u_k(a), u_k'(a)]]`.
struct Shooting {
    b: Mat2,
    ends: [[C64; 2]; 2],
}

fn shoot(p: &Potential, e: f64, tol: Tolerances) -> Result<Shooting> {
    let a = p.a();
    let ends = propagate_pair(p, C64::from(e), (-a, a), tol)?;
    // at -a: u1 = 1, u1' = 0, u2 = 0, u2' = 1
    let start = [[ONE, ZERO], [ZERO, ONE]];
    let col = |k: usize| {
        let [fa, dfa] = ends[k];
        let [fm, dfm] = start[k];
        [dfa + I * fa, dfm - I * fm]
    };
    Ok(Shooting {
        b: Mat2::from_columns(col(0), col(1)),
        ends,
    })
}

fn transfer(s: &Shooting) -> Result<Mat2> {
    let inv = s.b.try_inverse(0.0).ok_or_else(|| {
        Error::InternalConsistency("boundary matrix of real solutions is singular".into())
    })?;
    Ok(s.b.conj() * inv)
}

/// The unitary `T(E) = conj(B) B⁻¹`.
pub fn transfer_unitary(p: &Potential, e: f64, tol: Tolerances) -> Result<Mat2> {
    transfer(&shoot(p, e, tol)?)
}

fn column_scaled_det(s: &Shooting, ucal: &Mat2) -> (C64, f64) {
    let mut cols = [[ZERO; 2]; 2];
    let mut scale = 1.0;
    for k in 0..2 {
        let zm = s.b.column(k);
        let zp = [zm[0].conj(), zm[1].conj()];
        let uz = ucal.apply(zm);
        let [fa, dfa] = s.ends[k];
        let norm = fa.norm().max(dfa.norm()).max(1.0);
        cols[k] = [(zp[0] - uz[0]) / norm, (zp[1] - uz[1]) / norm];
        let hz = ((zp[0].norm_sqr() + zp[1].norm_sqr()).sqrt()
            + (uz[0].norm_sqr() + uz[1].norm_sqr()).sqrt())
            / norm;
        scale *= hz;
    }
    (Mat2::from_columns(cols[0], cols[1]).det(), scale)
}

/// `det M(E)` where column `k` of `M` is
/// `(u_k'(a) - i u_k(a), u_k'(-a) + i u_k(-a)) - 𝒰 (u_k'(a) + i u_k(a), u_k'(-a) - i u_k(-a))`,
/// each column divided by the larger boundary magnitude of `u_k`.
pub fn det_function(p: &Potential, bc: &BoundaryCondition, e: f64) -> Result<C64> {
    Ok(det_function_scaled(p, bc, e, Tolerances::default())?.0)
}

/// [`det_function`] together with the Hadamard bound of the normalized
/// columns, the natural scale for `|det|`.
pub fn det_function_scaled(
    p: &Potential,
    bc: &BoundaryCondition,
    e: f64,
    tol: Tolerances,
) -> Result<(C64, f64)> {
    let s = shoot(p, e, tol)?;
    Ok(column_scaled_det(&s, bc.matrix()))
}

/// `(σ_max, σ_min)` of `T(E) - 𝒰`.
pub fn boundary_singular_values(p: &Potential, ucal: &Mat2, e: f64, tol: Tolerances) -> Result<(f64, f64)> {
    let t = transfer_unitary(p, e, tol)?;
    Ok((t - *ucal).singular_values())
}

/// Scan floor `-‖V‖∞ - 1`.
pub fn default_e_min(p: &Potential) -> f64 {
    -p.sup_norm() - 1.0
}

/// Smallest grid with spacing at most `(π / 2a)² / 8`.
pub fn default_grid(p: &Potential, e_min: f64, e_max: f64) -> usize {
    let step = (PI / (2.0 * p.a())).powi(2) / 8.0;
    (((e_max - e_min) / step).ceil() as usize).max(MIN_GRID)
}

pub fn find_eigenvalues(
    p: &Potential,
    bc: &BoundaryCondition,
    e_min: f64,
    e_max: f64,
    grid: usize,
) -> Result<SpectrumResult> {
    find_eigenvalues_with(p, bc, e_min, e_max, grid, &SpectrumOptions::default())
}

pub fn find_eigenvalues_with(
    p: &Potential,
    bc: &BoundaryCondition,
    e_min: f64,
    e_max: f64,
    grid: usize,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    if !(e_min < e_max) || !e_min.is_finite() || !e_max.is_finite() {
        return Err(Error::Parameter(format!(
            "need finite e_min < e_max, got [{e_min}, {e_max}]"
        )));
    }
    if grid < MIN_GRID {
        return Err(Error::Parameter(format!("grid must be at least {MIN_GRID}, got {grid}")));
    }
    match opts.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
            pool.install(|| run(p, bc, e_min, e_max, grid, opts))
        }
        None => run(p, bc, e_min, e_max, grid, opts),
    }
}

struct ScanPoint {
    e: f64,
    sigma: f64,
    det: f64,
}

struct Root {
    e: f64,
    sigma_min: f64,
    degenerate: bool,
}

fn run(
    p: &Potential,
    bc: &BoundaryCondition,
    e_min: f64,
    e_max: f64,
    grid: usize,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    let ucal = *bc.matrix();
    let tol = opts.tol;
    let scan: Vec<ScanPoint> = (0..=grid)
        .into_par_iter()
        .map(|i| {
            let e = if i == grid {
                e_max
            } else {
                e_min + (e_max - e_min) * i as f64 / grid as f64
            };
            let s = shoot(p, e, tol)?;
            let sigma = (transfer(&s)? - ucal).singular_values().1;
            let det = column_scaled_det(&s, &ucal).0.norm();
            Ok(ScanPoint { e, sigma, det })
        })
        .collect::<Result<_>>()?;

    let mut brackets = Vec::new();
    for i in 0..=grid {
        let left = if i > 0 { scan[i - 1].sigma } else { f64::INFINITY };
        let right = if i < grid { scan[i + 1].sigma } else { f64::INFINITY };
        let s = scan[i].sigma;
        if s < left && s <= right {
            let lo = scan[i.saturating_sub(1)].e;
            let hi = scan[(i + 1).min(grid)].e;
            brackets.push((lo, hi, i == 0 || i == grid));
        }
    }

    let sigma_at = |e: f64| -> Result<f64> {
        Ok(boundary_singular_values(p, &ucal, e, tol)?.1)
    };
    let refined: Vec<Result<std::result::Result<Root, String>>> = brackets
        .par_iter()
        .map(|&(lo, hi, edge)| {
            let (e, sigma) = golden_minimize(&sigma_at, lo, hi)?;
            if sigma <= opts.accept_tol * UNITARY_SCALE {
                let smax = boundary_singular_values(p, &ucal, e, tol)?.0;
                Ok(Ok(Root {
                    e,
                    sigma_min: sigma,
                    degenerate: smax <= opts.degeneracy_tol * UNITARY_SCALE,
                }))
            } else if edge {
                Ok(Err(String::new()))
            } else {
                Ok(Err(format!(
                    "candidate near E = {e:.10e} rejected: sigma_min = {sigma:.3e}"
                )))
            }
        })
        .collect();

    let mut diagnostics = Vec::new();
    let mut roots = Vec::new();
    for r in refined {
        match r? {
            Ok(root) => roots.push(root),
            Err(msg) if !msg.is_empty() => diagnostics.push(msg),
            Err(_) => {}
        }
    }
    roots.sort_by(|x, y| x.e.total_cmp(&y.e));
    let dedup_tol = (e_max - e_min) / (10.0 * grid as f64);
    let mut unique: Vec<Root> = Vec::new();
    for r in roots {
        match unique.last_mut() {
            Some(last) if r.e - last.e <= dedup_tol => {
                let degenerate = last.degenerate || r.degenerate;
                if r.sigma_min < last.sigma_min {
                    *last = r;
                }
                last.degenerate = degenerate;
            }
            _ => unique.push(r),
        }
    }

    let mut eigenvalues = Vec::new();
    let mut degeneracies = Vec::new();
    let mut eigenfunctions = Vec::new();
    let mut residuals = Vec::new();
    for root in unique {
        match eigenmodes(p, &ucal, root.e, root.degenerate, tol) {
            Ok(modes) => {
                let worst = modes
                    .iter()
                    .map(|f| boundary_residual(&ucal, f))
                    .fold(0.0, f64::max);
                if worst > RESIDUAL_GATE {
                    diagnostics.push(format!(
                        "eigenvalue {:.10e} dropped: boundary residual {worst:.3e}",
                        root.e
                    ));
                    continue;
                }
                eigenvalues.push(root.e);
                degeneracies.push(modes.len() as u8);
                residuals.push(worst);
                eigenfunctions.push(modes);
            }
            Err(err) => diagnostics.push(format!("eigenvalue {:.10e} dropped: {err}", root.e)),
        }
    }

    Ok(SpectrumResult {
        bc: bc.clone(),
        potential: p.clone(),
        e_min,
        e_max,
        grid,
        eigenvalues,
        degeneracies,
        eigenfunctions,
        residuals,
        det_trace: scan.iter().map(|s| (s.e, s.det)).collect(),
        diagnostics,
    })
}

fn golden_minimize(f: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..GOLDEN_MAX_ITER {
        if (b - a) <= GOLDEN_REL_WIDTH * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for e in [lo, hi] {
        let v = f(e)?;
        if v < best.1 {
            best = (e, v);
        }
    }
    Ok(best)
}

/// L²-normalized eigenfunction(s) at an accepted eigenvalue. A simple mode is
/// rotated so its largest sample is real and positive.
fn eigenmodes(
    p: &Potential,
    ucal: &Mat2,
    e: f64,
    degenerate: bool,
    tol: Tolerances,
) -> Result<Vec<OdeSolution>> {
    let s = shoot(p, e, tol)?;
    let t = transfer(&s)?;
    let b_inv = s.b.try_inverse(0.0).ok_or_else(|| {
        Error::InternalConsistency("boundary matrix of real solutions is singular".into())
    })?;
    let a = p.a();
    let (u1, u2) = integrate_pair(p, C64::from(e), (-a, a), tol)?;
    let build = |w: [C64; 2]| {
        let c = b_inv.apply(w);
        OdeSolution::combine(c[0], &u1, c[1], &u2)
    };
    if degenerate {
        let f1 = build([ONE, ZERO])?;
        let f2 = build([ZERO, ONE])?;
        let g1 = f1.scaled(C64::from(1.0 / l2_norm(&f1)?));
        let proj = l2_inner(&g1, &f2)?;
        let w = OdeSolution::combine(ONE, &f2, -proj, &g1)?;
        let g2 = w.scaled(C64::from(1.0 / l2_norm(&w)?));
        Ok(vec![g1, g2])
    } else {
        let (_, vmin) = (t - *ucal).right_singular_vectors();
        let f = build(vmin)?;
        let peak = f
            .samples
            .iter()
            .map(|s| s.f)
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .unwrap_or(ONE);
        let phase = peak.conj() / peak.norm();
        Ok(vec![f.scaled(phase / l2_norm(&f)?)])
    }
}

fn boundary_residual(ucal: &Mat2, f: &OdeSolution) -> f64 {
    let first = f.first();
    let last = f.last();
    bc_residual(ucal, last.f, first.f, last.df, first.df)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResidual {
    pub eigenvalue: f64,
    /// Index within a degenerate pair.
    pub mode: usize,
    pub boundary: f64,
    pub symmetry: f64,
    pub equation: f64,
    pub norm_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub modes: Vec<ModeResidual>,
    pub worst_boundary: f64,
    pub worst_symmetry: f64,
    pub worst_equation: f64,
    pub worst_norm_defect: f64,
}

/// `|<f, Af> - <Af, f>|` through the boundary form
/// `[conj(f') f - conj(f) f']` from `-a` to `a`.
pub fn symmetry_defect(f: &OdeSolution) -> f64 {
    let form = |f0: C64, df0: C64| df0.conj() * f0 - f0.conj() * df0;
    let (first, last) = (f.first(), f.last());
    (form(last.f, last.df) - form(first.f, first.df)).norm()
}

/// `‖-f'' + V f - E f‖₂` with `f''` from fourth-order differences of `f'`.
pub fn equation_defect(p: &Potential, f: &OdeSolution) -> Result<f64> {
    let d2 = f.second_derivative();
    let n = f.samples.len();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for (k, (s, f2)) in f.samples.iter().zip(&d2).enumerate() {
        let v = if k + 1 == n { p.evaluate_left(s.x)? } else { p.evaluate(s.x)? };
        let r = -*f2 + (C64::from(v) - f.lambda) * s.f;
        xs.push(s.x);
        ys.push(C64::from(r.norm_sqr()));
    }
    Ok(simpson(&xs, &ys).re.abs().sqrt())
}

pub fn eigenfunction_residuals(r: &SpectrumResult) -> Result<ResidualReport> {
    let ucal = *r.bc.matrix();
    let mut modes = Vec::new();
    for (e, fs) in r.eigenvalues.iter().zip(&r.eigenfunctions) {
        for (k, f) in fs.iter().enumerate() {
            modes.push(ModeResidual {
                eigenvalue: *e,
                mode: k,
                boundary: boundary_residual(&ucal, f),
                symmetry: symmetry_defect(f),
                equation: equation_defect(&r.potential, f)?,
                norm_defect: (l2_norm(f)? - 1.0).abs(),
            });
        }
    }
    let worst = |g: fn(&ModeResidual) -> f64| modes.iter().map(g).fold(0.0, f64::max);
    Ok(ResidualReport {
        worst_boundary: worst(|m| m.boundary),
        worst_symmetry: worst(|m| m.symmetry),
        worst_equation: worst(|m| m.equation),
        worst_norm_defect: worst(|m| m.norm_defect),
        modes,
    })
}
