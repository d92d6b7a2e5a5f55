//! Classification of boundary-condition unitaries and synthesis from the
//! familiar families.
//!
//! With `d = (f'(a), f'(-a))` and `v = (f(a), -f(-a))` the boundary condition
//! reads `(I - 𝒰) d = i (I + 𝒰) v`. The four cases follow from which of
//! `I ∓ 𝒰` are singular:
//!
//! | case | `I - 𝒰`  | `I + 𝒰`  | description                        |
//! |------|----------|----------|------------------------------------|
//! | I    | regular  | regular  | `d = H v`, `H` invertible (Robin)  |
//! | II   | regular  | singular | `d = H v`, `H` singular            |
//! | III  | singular | regular  | `v = H' d`, `H'` singular          |
//! | IV   | singular | singular | `𝒰 = n·σ`, automorphic family      |

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Unitary2, C64, I, ONE, UNITARY_OUTPUT_TOL};

pub const DEFAULT_TOL: f64 = 1e-8;
const MAX_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    I,
    II,
    III,
    IV,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
            Case::IV => "IV",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcName {
    Robin,
    GeneralCoupled,
    Neumann,
    Dirichlet,
    Periodic,
    AntiPeriodic,
    Automorphic,
    DirichletAtANeumannAtMinusA,
    NeumannAtADirichletAtMinusA,
    #[serde(rename = "general-case-II")]
    GeneralCaseIi,
    #[serde(rename = "general-case-III")]
    GeneralCaseIii,
}

impl BcName {
    pub fn as_str(&self) -> &'static str {
        match self {
            BcName::Robin => "robin",
            BcName::GeneralCoupled => "general-coupled",
            BcName::Neumann => "neumann",
            BcName::Dirichlet => "dirichlet",
            BcName::Periodic => "periodic",
            BcName::AntiPeriodic => "anti-periodic",
            BcName::Automorphic => "automorphic",
            BcName::DirichletAtANeumannAtMinusA => "dirichlet-at-a-neumann-at-minus-a",
            BcName::NeumannAtADirichletAtMinusA => "neumann-at-a-dirichlet-at-minus-a",
            BcName::GeneralCaseIi => "general-case-II",
            BcName::GeneralCaseIii => "general-case-III",
        }
    }
}

impl fmt::Display for BcName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Entries of `H = [[alpha, beta], [conj beta, -gamma]]`, i.e.
/// `f'(a) = alpha f(a) - beta f(-a)` and `f'(-a) = conj(beta) f(a) + gamma f(-a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobinParams {
    pub alpha: f64,
    pub beta: C64,
    pub gamma: f64,
}

impl RobinParams {
    pub fn h(&self) -> Mat2 {
        Mat2::new(
            C64::from(self.alpha),
            self.beta,
            self.beta.conj(),
            C64::from(-self.gamma),
        )
    }

    fn from_h(h: &Mat2) -> Self {
        RobinParams {
            alpha: h[(0, 0)].re,
            beta: h[(0, 1)],
            gamma: -h[(1, 1)].re,
        }
    }

    /// Entries of `H' = [[alpha', -beta'], [-conj beta', -gamma']]`.
    pub fn h_prime(&self) -> Mat2 {
        Mat2::new(
            C64::from(self.alpha),
            -self.beta,
            -self.beta.conj(),
            C64::from(-self.gamma),
        )
    }

    fn from_h_prime(h: &Mat2) -> Self {
        RobinParams {
            alpha: h[(0, 0)].re,
            beta: -h[(0, 1)],
            gamma: -h[(1, 1)].re,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.alpha.is_finite() && self.gamma.is_finite() && self.beta.is_finite() {
            Ok(())
        } else {
            Err(Error::Parameter("boundary parameters must be finite".into()))
        }
    }

    /// `alpha gamma + |beta|^2`, which is `-det H` (and `-det H'`).
    pub fn discriminant(&self) -> f64 {
        self.alpha * self.gamma + self.beta.norm_sqr()
    }
}

/// `𝒰 = [[cos θ, e^{-iφ} sin θ], [e^{iφ} sin θ, -cos θ]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub theta: f64,
    pub phi: f64,
}

impl Angles {
    pub fn matrix(&self) -> Mat2 {
        let (s, co) = self.theta.sin_cos();
        Mat2::new(
            C64::from(co),
            C64::from_polar(s, -self.phi),
            C64::from_polar(s, self.phi),
            C64::from(-co),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    #[serde(rename = "Ucal")]
    pub ucal: Unitary2,
    pub case: Case,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Mat2>,
    #[serde(rename = "Hprime", default, skip_serializing_if = "Option::is_none")]
    pub h_prime: Option<Mat2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robin: Option<RobinParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robin_prime: Option<RobinParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Angles>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<C64>,
    pub name: BcName,
    /// Singular values `(σ_max, σ_min)` of `I - 𝒰`.
    pub sigma_i_minus_u: (f64, f64),
    /// Singular values `(σ_max, σ_min)` of `I + 𝒰`.
    pub sigma_i_plus_u: (f64, f64),
    pub tol: f64,
}

impl BoundaryCondition {
    pub fn matrix(&self) -> &Mat2 {
        self.ucal.matrix()
    }
}

fn hermitian_part(m: &Mat2) -> Mat2 {
    (*m + m.adjoint()) * 0.5
}

/// Classify `𝒰`. Singularity of `I ∓ 𝒰` is judged by `σ_min ≤ tol · s`, where
/// `s` is the larger of the two spectral norms (at least √2 for a unitary), so
/// that `𝒰 ≈ ±I` does not make the scale collapse.
pub fn classify(ucal: &Unitary2, tol: f64) -> Result<BoundaryCondition> {
    if !(tol > 0.0 && tol <= MAX_TOL) {
        return Err(Error::Parameter(format!("tol must lie in (0, {MAX_TOL:e}], got {tol}")));
    }
    let u = *ucal.matrix();
    let id = Mat2::identity();
    let minus = id - u;
    let plus = id + u;
    let sm = minus.singular_values();
    let sp = plus.singular_values();
    let scale = sm.0.max(sp.0);
    let minus_singular = sm.1 <= tol * scale;
    let plus_singular = sp.1 <= tol * scale;

    let mut bc = BoundaryCondition {
        ucal: *ucal,
        case: Case::I,
        h: None,
        h_prime: None,
        robin: None,
        robin_prime: None,
        angles: None,
        k: None,
        name: BcName::Robin,
        sigma_i_minus_u: sm,
        sigma_i_plus_u: sp,
        tol,
    };
    let near = |m: Mat2| u.max_abs_diff(&m) <= tol;

    match (minus_singular, plus_singular) {
        (false, _) => {
            let inv = minus
                .try_inverse(0.0)
                .ok_or_else(|| Error::InternalConsistency("I - 𝒰 not invertible".into()))?;
            let h = hermitian_part(&(inv * plus).scale(I));
            let robin = RobinParams::from_h(&h);
            bc.h = Some(h);
            bc.robin = Some(robin);
            if plus_singular {
                bc.case = Case::II;
                bc.name = if near(-id) { BcName::Neumann } else { BcName::GeneralCaseIi };
            } else {
                bc.case = Case::I;
                let diagonal = robin.beta.norm() <= tol * h.frobenius().max(1.0);
                bc.name = if diagonal { BcName::Robin } else { BcName::GeneralCoupled };
            }
        }
        (true, false) => {
            let inv = plus
                .try_inverse(0.0)
                .ok_or_else(|| Error::InternalConsistency("I + 𝒰 not invertible".into()))?;
            let hp = hermitian_part(&(inv * minus).scale(-I));
            bc.case = Case::III;
            bc.h_prime = Some(hp);
            bc.robin_prime = Some(RobinParams::from_h_prime(&hp));
            bc.name = if near(id) { BcName::Dirichlet } else { BcName::GeneralCaseIii };
        }
        (true, true) => {
            bc.case = Case::IV;
            let nx = (u[(0, 1)] + u[(1, 0)]).re / 2.0;
            let ny = (u[(1, 0)] - u[(0, 1)]).im / 2.0;
            let nz = (u[(0, 0)] - u[(1, 1)]).re / 2.0;
            let norm = (nx * nx + ny * ny + nz * nz).sqrt();
            let (nx, ny, nz) = (nx / norm, ny / norm, nz / norm);
            let theta = nz.clamp(-1.0, 1.0).acos();
            let sin_theta = (nx * nx + ny * ny).sqrt();
            let phi = if sin_theta <= tol {
                0.0
            } else {
                ny.atan2(nx).rem_euclid(TAU)
            };
            let angles = Angles { theta, phi };
            bc.angles = Some(angles);
            if sin_theta > tol {
                bc.k = Some(C64::from_polar(1.0 / (theta / 2.0).tan(), phi));
            }
            let target = |t: f64, p: f64| near(Angles { theta: t, phi: p }.matrix());
            bc.name = if target(0.0, 0.0) {
                BcName::DirichletAtANeumannAtMinusA
            } else if target(PI, 0.0) {
                BcName::NeumannAtADirichletAtMinusA
            } else if target(FRAC_PI_2, 0.0) {
                BcName::Periodic
            } else if target(FRAC_PI_2, PI) {
                BcName::AntiPeriodic
            } else {
                BcName::Automorphic
            };
        }
    }
    Ok(bc)
}

/// Named boundary-condition families with their parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum BcFamily {
    Dirichlet,
    Neumann,
    Periodic,
    AntiPeriodic,
    DirichletAtANeumannAtMinusA,
    NeumannAtADirichletAtMinusA,
    /// Case I: `d = H v` with `H` invertible.
    Robin {
        alpha: f64,
        #[serde(default)]
        beta: C64,
        gamma: f64,
    },
    /// Case III: `v = H' d` with `H'` singular.
    RobinPrime {
        alpha: f64,
        #[serde(default)]
        beta: C64,
        gamma: f64,
    },
    /// Case IV, given either by `(theta, phi)` or by the constant `K`.
    Automorphic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<f64>,
        #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
        k: Option<C64>,
    },
}

/// Relative threshold on `alpha gamma + |beta|^2` separating Case I from II/III.
const DISCRIMINANT_TOL: f64 = 1e-12;

pub fn synthesize(family: &BcFamily) -> Result<Unitary2> {
    let id = Mat2::identity();
    let m = match family {
        BcFamily::Dirichlet => id,
        BcFamily::Neumann => -id,
        BcFamily::Periodic => Angles { theta: FRAC_PI_2, phi: 0.0 }.matrix(),
        BcFamily::AntiPeriodic => Angles { theta: FRAC_PI_2, phi: PI }.matrix(),
        BcFamily::DirichletAtANeumannAtMinusA => Mat2::diag(ONE, -ONE),
        BcFamily::NeumannAtADirichletAtMinusA => Mat2::diag(-ONE, ONE),
        BcFamily::Robin { alpha, beta, gamma } => {
            let p = RobinParams { alpha: *alpha, beta: *beta, gamma: *gamma };
            p.validate()?;
            let scale = alpha.abs().max(gamma.abs()).max(beta.norm()).powi(2);
            if p.discriminant().abs() <= DISCRIMINANT_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Parameter(
                    "robin requires alpha*gamma + |beta|^2 != 0".into(),
                ));
            }
            let h = p.h();
            // 𝒰 = (H + iI)^{-1} (H - iI); H + iI is invertible for Hermitian H
            let inv = (h + id.scale(I)).try_inverse(0.0).ok_or_else(|| {
                Error::Parameter("H + iI is not invertible".into())
            })?;
            inv * (h - id.scale(I))
        }
        BcFamily::RobinPrime { alpha, beta, gamma } => {
            let p = RobinParams { alpha: *alpha, beta: *beta, gamma: *gamma };
            p.validate()?;
            let scale = alpha.abs().max(gamma.abs()).max(beta.norm()).powi(2).max(1.0);
            if p.discriminant().abs() > DISCRIMINANT_TOL * scale {
                return Err(Error::Parameter(
                    "robin-prime requires alpha'*gamma' + |beta'|^2 = 0; use robin otherwise"
                        .into(),
                ));
            }
            let hp = p.h_prime();
            // 𝒰 = -(H' - iI)^{-1} (H' + iI)
            let inv = (hp - id.scale(I)).try_inverse(0.0).ok_or_else(|| {
                Error::Parameter("H' - iI is not invertible".into())
            })?;
            -(inv * (hp + id.scale(I)))
        }
        BcFamily::Automorphic { theta, phi, k } => {
            let angles = match (theta, phi, k) {
                (Some(t), p, None) => {
                    let p = p.unwrap_or(0.0);
                    if !(0.0..=PI).contains(t) || !p.is_finite() {
                        return Err(Error::Parameter(format!(
                            "automorphic requires theta in [0, pi] and finite phi, got {t}, {p}"
                        )));
                    }
                    Angles { theta: *t, phi: p }
                }
                (None, None, Some(k)) => {
                    if !(k.norm() > 0.0) || !k.is_finite() {
                        return Err(Error::Parameter("automorphic K must be finite and non-zero".into()));
                    }
                    Angles { theta: 2.0 * (1.0 / k.norm()).atan(), phi: k.arg().rem_euclid(TAU) }
                }
                _ => {
                    return Err(Error::Parameter(
                        "automorphic takes either theta (and phi) or K".into(),
                    ))
                }
            };
            angles.matrix()
        }
    };
    Unitary2::certify(m, UNITARY_OUTPUT_TOL)
}

/// Family reproducing a classified condition, when the classification carries
/// enough parameters to determine `𝒰` (Cases I, III and IV).
pub fn family_of(bc: &BoundaryCondition) -> Option<BcFamily> {
    match bc.case {
        Case::I => bc.robin.map(|p| BcFamily::Robin { alpha: p.alpha, beta: p.beta, gamma: p.gamma }),
        Case::III => bc
            .robin_prime
            .map(|p| BcFamily::RobinPrime { alpha: p.alpha, beta: p.beta, gamma: p.gamma }),
        Case::IV => bc.angles.map(|a| BcFamily::Automorphic {
            theta: Some(a.theta),
            phi: Some(a.phi),
            k: None,
        }),
        Case::II => None,
    }
}

/// `‖(f'(a) - i f(a), f'(-a) + i f(-a)) - 𝒰 (f'(a) + i f(a), f'(-a) - i f(-a))‖`.
pub fn apply_bc(bc: &BoundaryCondition, fa: C64, fma: C64, dfa: C64, dfma: C64) -> f64 {
    bc_residual(bc.matrix(), fa, fma, dfa, dfma)
}

pub fn bc_residual(ucal: &Mat2, fa: C64, fma: C64, dfa: C64, dfma: C64) -> f64 {
    let lhs = [dfa - I * fa, dfma + I * fma];
    let rhs = ucal.apply([dfa + I * fa, dfma - I * fma]);
    ((lhs[0] - rhs[0]).norm_sqr() + (lhs[1] - rhs[1]).norm_sqr()).sqrt()
}

/// Boundary-condition input: an explicit matrix or a named family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BcInput {
    Matrix { matrix: Mat2 },
    Family(BcFamily),
}

impl BcInput {
    pub fn unitary(&self) -> Result<Unitary2> {
        match self {
            BcInput::Matrix { matrix } => Unitary2::new(*matrix),
            BcInput::Family(f) => synthesize(f),
        }
    }
}

#[doc(hidden)]
pub fn scalar_h(chi: f64) -> f64 {
    -1.0 / (chi / 2.0).tan()
}
