//! Bases of the deficiency subspace `K+ = ker(A† - i)`.
//!
//! For an even potential the basis is the normalized even/odd pair `g+`, `g-`;
//! for a general potential it is a Gram–Schmidt orthonormalized pair `g1`, `g2`.
//! `K-` is spanned by the complex conjugates and is never built explicitly.
//! Only the boundary values of the basis enter the extension map, so those
//! are what gets serialized.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, Mat2, C64, I, ONE, SINGULAR_RATIO, ZERO};
use crate::odesolve::{integrate_pair, l2_inner, l2_norm, OdeSolution, Tolerances};
use crate::potential::Potential;

/// Tolerance for the orthonormality and boundary-form identities.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Parity tolerance required by [`solve_even_odd`].
pub const PARITY_TOL: f64 = 1e-12;
const DEGENERACY_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParityMode {
    EvenPotential,
    General,
}

/// Boundary values `(g'(a), g(a), g'(-a), g(-a))` of one basis function.
pub type BoundaryRow = [C64; 4];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeficiencyBasis {
    pub mode: ParityMode,
    pub potential: Potential,
    /// Row `j` holds `(g_j'(a), g_j(a), g_j'(-a), g_j(-a))`.
    pub boundary_table: [BoundaryRow; 2],
    /// `diag(g+(a), g-(a))`; even-potential mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mat_a: Option<Mat2>,
    /// `diag(g+'(a), g-'(a))`; even-potential mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mat_b: Option<Mat2>,
    /// Coefficients expressing the basis in the raw fundamental solutions:
    /// `g_j = Σ_k n_jk u_k`.
    pub normalization: Mat2,
    #[serde(skip)]
    pub trajectories: Option<[OdeSolution; 2]>,
}

impl DeficiencyBasis {
    pub fn a(&self) -> f64 {
        self.potential.a()
    }

    pub fn g_plus_a(&self) -> C64 {
        self.boundary_table[0][1]
    }

    pub fn dg_plus_a(&self) -> C64 {
        self.boundary_table[0][0]
    }

    pub fn g_minus_a(&self) -> C64 {
        self.boundary_table[1][1]
    }

    pub fn dg_minus_a(&self) -> C64 {
        self.boundary_table[1][0]
    }

    pub(crate) fn require_even(&self) -> Result<(Mat2, Mat2)> {
        match (self.mode, self.mat_a, self.mat_b) {
            (ParityMode::EvenPotential, Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Mode {
                expected: "even-potential",
            }),
        }
    }

    /// The boundary form `<g_j, A g_k> - <A g_j, g_k>` from boundary values;
    /// equals `2i δ_jk` for an orthonormal basis.
    pub fn boundary_form(&self, j: usize, k: usize) -> C64 {
        let (gj, gk) = (&self.boundary_table[j], &self.boundary_table[k]);
        gj[0].conj() * gk[1] - gj[1].conj() * gk[0] - gj[2].conj() * gk[3]
            + gj[3].conj() * gk[2]
    }

    /// The unconjugated counterpart `<conj g_j, A g_k> - <A conj g_j, g_k>`,
    /// which vanishes for any pair of solutions at the same spectral parameter.
    pub fn bilinear_form(&self, j: usize, k: usize) -> C64 {
        let (gj, gk) = (&self.boundary_table[j], &self.boundary_table[k]);
        gj[0] * gk[1] - gj[1] * gk[0] - gj[2] * gk[3] + gj[3] * gk[2]
    }

    /// `g(a) conj(g'(a)) - g'(a) conj(g(a))` for `g+` and `g-`.
    pub fn endpoint_wronskians(&self) -> [C64; 2] {
        self.boundary_table
            .map(|row| row[1] * row[0].conj() - row[0] * row[1].conj())
    }

    /// Gram matrix `<g_j, g_k>` from the stored trajectories.
    pub fn gram(&self) -> Result<Option<Mat2>> {
        let Some([g1, g2]) = &self.trajectories else {
            return Ok(None);
        };
        Ok(Some(Mat2::new(
            l2_inner(g1, g1)?,
            l2_inner(g1, g2)?,
            l2_inner(g2, g1)?,
            l2_inner(g2, g2)?,
        )))
    }

    /// Check every invariant that can be checked on this basis.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InternalConsistency(msg));
        if let Some(gram) = self.gram()? {
            let defect = gram.max_abs_diff(&Mat2::identity());
            if defect > IDENTITY_TOL {
                return fail(format!("basis not orthonormal (defect {defect:e})"));
            }
        }
        for j in 0..2 {
            for k in 0..2 {
                let expect = if j == k { c(0.0, 2.0) } else { ZERO };
                let d = (self.boundary_form(j, k) - expect).norm();
                if d > IDENTITY_TOL {
                    return fail(format!("boundary form ({j},{k}) off by {d:e}"));
                }
                let d = self.bilinear_form(j, k).norm();
                if d > IDENTITY_TOL {
                    return fail(format!("bilinear form ({j},{k}) off by {d:e}"));
                }
            }
        }
        if self.mode == ParityMode::EvenPotential {
            let (ma, mb) = self.require_even()?;
            for (k, w) in self.endpoint_wronskians().iter().enumerate() {
                let d = (w - I).norm();
                if d > IDENTITY_TOL {
                    return fail(format!("endpoint Wronskian of g{k} off by {d:e}"));
                }
            }
            if ma.singular_ratio() <= SINGULAR_RATIO || mb.singular_ratio() <= SINGULAR_RATIO {
                return fail("boundary value matrices are singular".into());
            }
            let parity = [
                (self.boundary_table[0][3] - self.boundary_table[0][1]).norm(),
                (self.boundary_table[0][2] + self.boundary_table[0][0]).norm(),
                (self.boundary_table[1][3] + self.boundary_table[1][1]).norm(),
                (self.boundary_table[1][2] - self.boundary_table[1][0]).norm(),
            ];
            if parity.iter().any(|&d| d > IDENTITY_TOL) {
                return fail("boundary table is not parity-consistent".into());
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(self)?)
    }

    /// Load a serialized basis and re-check its boundary identities.
    pub fn from_json(value: serde_json::Value) -> Result<Self> {
        let basis: DeficiencyBasis = serde_json::from_value(value)?;
        basis.check_invariants()?;
        Ok(basis)
    }
}

fn boundary_row(g: &OdeSolution, a: f64) -> Result<BoundaryRow> {
    let (fa, dfa) = g
        .at(a)
        .ok_or_else(|| Error::InternalConsistency("trajectory misses x = a".into()))?;
    let (fm, dfm) = g
        .at(-a)
        .ok_or_else(|| Error::InternalConsistency("trajectory misses x = -a".into()))?;
    Ok([dfa, fa, dfm, fm])
}

/// Normalized even and odd solutions of `A g = i g` for an even potential.
///
/// Both are integrated from the origin with `(g, g')(0) = (1, 0)` and `(0, 1)`,
/// reflected onto `[-a, a]` and scaled by a positive constant to unit norm,
/// which fixes `g+(0) > 0` and `g-'(0) > 0`.
pub fn solve_even_odd(p: &Potential) -> Result<DeficiencyBasis> {
    solve_even_odd_with(p, Tolerances::default())
}

pub fn solve_even_odd_with(p: &Potential, tol: Tolerances) -> Result<DeficiencyBasis> {
    let defect = p.parity_defect();
    if defect > PARITY_TOL {
        return Err(Error::Parity { defect });
    }
    let a = p.a();
    let (u_even, u_odd) = integrate_pair(p, I, (0.0, a), tol)?;
    let u_even = u_even.reflected(false)?;
    let u_odd = u_odd.reflected(true)?;
    let n_even = 1.0 / l2_norm(&u_even)?;
    let n_odd = 1.0 / l2_norm(&u_odd)?;
    let g_plus = u_even.scaled(C64::from(n_even));
    let g_minus = u_odd.scaled(C64::from(n_odd));

    let row_plus = boundary_row(&g_plus, a)?;
    let row_minus = boundary_row(&g_minus, a)?;
    let basis = DeficiencyBasis {
        mode: ParityMode::EvenPotential,
        potential: p.clone(),
        boundary_table: [row_plus, row_minus],
        mat_a: Some(Mat2::diag(row_plus[1], row_minus[1])),
        mat_b: Some(Mat2::diag(row_plus[0], row_minus[0])),
        normalization: Mat2::diag(C64::from(n_even), C64::from(n_odd)),
        trajectories: Some([g_plus, g_minus]),
    };
    basis.check_invariants()?;
    Ok(basis)
}

/// An L²-orthonormal pair of solutions of `A g = i g` for any bounded potential.
///
/// The fundamental solutions with data `(1, 0)` and `(0, 1)` at `x = -a` are
/// orthonormalized by Gram–Schmidt, the second against the first.
pub fn solve_orthonormal_pair(p: &Potential) -> Result<DeficiencyBasis> {
    solve_orthonormal_pair_with(p, Tolerances::default())
}

pub fn solve_orthonormal_pair_with(p: &Potential, tol: Tolerances) -> Result<DeficiencyBasis> {
    let a = p.a();
    let (u1, u2) = integrate_pair(p, I, (-a, a), tol)?;
    let n1 = l2_norm(&u1)?;
    let g1 = u1.scaled(C64::from(1.0 / n1));
    let proj = l2_inner(&g1, &u2)?;
    let w = OdeSolution::combine(ONE, &u2, -proj, &g1)?;
    let nw = l2_norm(&w)?;
    let ratio = nw / l2_norm(&u2)?;
    if !(ratio > DEGENERACY_RATIO) {
        return Err(Error::Degeneracy { ratio });
    }
    let g2 = w.scaled(C64::from(1.0 / nw));
    // g1 = u1 / n1, g2 = (u2 - proj * u1 / n1) / nw
    let normalization = Mat2::new(
        C64::from(1.0 / n1),
        ZERO,
        -proj / (n1 * nw),
        C64::from(1.0 / nw),
    );
    let basis = DeficiencyBasis {
        mode: ParityMode::General,
        potential: p.clone(),
        boundary_table: [boundary_row(&g1, a)?, boundary_row(&g2, a)?],
        mat_a: None,
        mat_b: None,
        normalization,
        trajectories: Some([g1, g2]),
    };
    basis.check_invariants()?;
    Ok(basis)
}

/// The basis appropriate for the potential: even/odd when it is even,
/// Gram–Schmidt otherwise.
pub fn solve(p: &Potential) -> Result<DeficiencyBasis> {
    if p.is_even(PARITY_TOL) {
        solve_even_odd(p)
    } else {
        solve_orthonormal_pair(p)
    }
}

/// The matrix `W` with `g^to_j = Σ_k W_jk g^from_k`, recovered from the
/// boundary tables (solutions are fixed by their Cauchy data, so the 2×4
/// tables determine `W` exactly).
pub fn change_of_basis(from: &DeficiencyBasis, to: &DeficiencyBasis) -> Result<Mat2> {
    let f = &from.boundary_table;
    let t = &to.boundary_table;
    // W = T F^H (F F^H)^{-1}
    let dot = |x: &BoundaryRow, y: &BoundaryRow| -> C64 {
        x.iter().zip(y).map(|(p, q)| p * q.conj()).sum()
    };
    let ffh = Mat2::new(
        dot(&f[0], &f[0]),
        dot(&f[0], &f[1]),
        dot(&f[1], &f[0]),
        dot(&f[1], &f[1]),
    );
    let tfh = Mat2::new(
        dot(&t[0], &f[0]),
        dot(&t[0], &f[1]),
        dot(&t[1], &f[0]),
        dot(&t[1], &f[1]),
    );
    let inv = ffh.try_inverse(SINGULAR_RATIO).ok_or_else(|| {
        Error::InternalConsistency("boundary table of the source basis is rank deficient".into())
    })?;
    Ok(tfh * inv)
}
