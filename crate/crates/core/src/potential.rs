//! Real bounded potentials on the symmetric interval `[-a, a]`.
//!
//! Units are fixed to `ħ = 2m = 1`, so the operator is `-d²/dx² + V(x)`.
//! Piecewise potentials are right-continuous at their breakpoints.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Number of uniform points used by [`Potential::is_even`] for sampled kinds.
pub const PARITY_GRID: usize = 1001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub from: f64,
    pub to: f64,
    /// Polynomial coefficients in ascending powers of `x`.
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    Zero,
    /// `V = depth` on `[-half_width, half_width)`, zero elsewhere.
    FiniteWell { depth: f64, half_width: f64 },
    /// `V = coefficient * x²`.
    Harmonic { coefficient: f64 },
    /// `V = amplitude * cos(wavenumber * x)`.
    Cosine { amplitude: f64, wavenumber: f64 },
    /// `V = Σ c_k x^k`.
    Polynomial { coefficients: Vec<f64> },
    Piecewise { pieces: Vec<Piece> },
}

impl PotentialKind {
    pub fn name(&self) -> &'static str {
        match self {
            PotentialKind::Zero => "zero",
            PotentialKind::FiniteWell { .. } => "finite-well",
            PotentialKind::Harmonic { .. } => "harmonic",
            PotentialKind::Cosine { .. } => "cosine",
            PotentialKind::Polynomial { .. } => "polynomial",
            PotentialKind::Piecewise { .. } => "piecewise",
        }
    }

    /// Kinds that are even for every admissible parameter choice.
    fn even_by_construction(&self) -> bool {
        matches!(
            self,
            PotentialKind::Zero
                | PotentialKind::FiniteWell { .. }
                | PotentialKind::Harmonic { .. }
                | PotentialKind::Cosine { .. }
        )
    }
}

/// A validated potential together with the half-width `a` of its domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Descriptor", into = "Descriptor")]
pub struct Potential {
    kind: PotentialKind,
    a: f64,
}

/// JSON descriptor `{"kind": ..., "a": ..., "params": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Descriptor {
    pub kind: String,
    pub a: f64,
    #[serde(default)]
    pub params: Value,
}

impl Potential {
    pub fn new(kind: PotentialKind, a: f64) -> Result<Self> {
        let p = Potential { kind, a };
        p.validate()?;
        Ok(p)
    }

    pub fn zero(a: f64) -> Result<Self> {
        Self::new(PotentialKind::Zero, a)
    }

    pub fn harmonic(coefficient: f64, a: f64) -> Result<Self> {
        Self::new(PotentialKind::Harmonic { coefficient }, a)
    }

    pub fn cosine(amplitude: f64, wavenumber: f64, a: f64) -> Result<Self> {
        Self::new(
            PotentialKind::Cosine {
                amplitude,
                wavenumber,
            },
            a,
        )
    }

    pub fn finite_well(depth: f64, half_width: f64, a: f64) -> Result<Self> {
        Self::new(PotentialKind::FiniteWell { depth, half_width }, a)
    }

    pub fn polynomial(coefficients: Vec<f64>, a: f64) -> Result<Self> {
        Self::new(PotentialKind::Polynomial { coefficients }, a)
    }

    pub fn piecewise(pieces: Vec<Piece>, a: f64) -> Result<Self> {
        Self::new(PotentialKind::Piecewise { pieces }, a)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Same potential on a different half-width.
    pub fn with_a(&self, a: f64) -> Result<Self> {
        Self::new(self.kind.clone(), a)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPotential(msg));
        if !(self.a.is_finite() && self.a > 0.0) {
            return bad(format!("half-width a must be positive and finite, got {}", self.a));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match &self.kind {
            PotentialKind::Zero => {}
            PotentialKind::FiniteWell { depth, half_width } => {
                if !finite(&[*depth, *half_width]) {
                    return bad("finite-well parameters must be finite".into());
                }
                if !(*half_width > 0.0 && *half_width < self.a) {
                    return bad(format!(
                        "finite-well half_width must lie in (0, a), got {half_width}"
                    ));
                }
            }
            PotentialKind::Harmonic { coefficient } => {
                if !coefficient.is_finite() {
                    return bad("harmonic coefficient must be finite".into());
                }
            }
            PotentialKind::Cosine {
                amplitude,
                wavenumber,
            } => {
                if !finite(&[*amplitude, *wavenumber]) {
                    return bad("cosine parameters must be finite".into());
                }
            }
            PotentialKind::Polynomial { coefficients } => {
                if coefficients.is_empty() || !finite(coefficients) {
                    return bad("polynomial needs a non-empty list of finite coefficients".into());
                }
            }
            PotentialKind::Piecewise { pieces } => {
                if pieces.is_empty() {
                    return bad("piecewise potential needs at least one piece".into());
                }
                let slack = 1e-12 * self.a;
                if (pieces[0].from + self.a).abs() > slack
                    || (pieces[pieces.len() - 1].to - self.a).abs() > slack
                {
                    return bad("pieces must cover exactly [-a, a]".into());
                }
                for (k, piece) in pieces.iter().enumerate() {
                    if !(piece.from < piece.to) {
                        return bad(format!("piece {k} has an empty interval"));
                    }
                    if piece.coefficients.is_empty() || !finite(&piece.coefficients) {
                        return bad(format!("piece {k} needs finite coefficients"));
                    }
                    if k > 0 && (pieces[k - 1].to - piece.from).abs() > slack {
                        return bad(format!("piece {k} does not start where piece {} ends", k - 1));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let slack = 1e-12 * self.a;
        if x.is_finite() && x >= -self.a - slack && x <= self.a + slack {
            Ok(())
        } else {
            Err(Error::Domain { x, a: self.a })
        }
    }

    /// `V(x)`, taking the right limit at breakpoints.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.eval_unchecked(x, Side::Right))
    }

    /// `V(x)` with the left limit at breakpoints; identical to [`evaluate`](Self::evaluate)
    /// wherever the potential is continuous.
    pub fn evaluate_left(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.eval_unchecked(x, Side::Left))
    }

    fn eval_unchecked(&self, x: f64, side: Side) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::FiniteWell { depth, half_width } => {
                let inside = match side {
                    Side::Right => x >= -half_width && x < *half_width,
                    Side::Left => x > -half_width && x <= *half_width,
                };
                if inside {
                    *depth
                } else {
                    0.0
                }
            }
            PotentialKind::Harmonic { coefficient } => coefficient * x * x,
            PotentialKind::Cosine {
                amplitude,
                wavenumber,
            } => amplitude * (wavenumber * x).cos(),
            PotentialKind::Polynomial { coefficients } => horner(coefficients, x),
            PotentialKind::Piecewise { pieces } => {
                let piece = match side {
                    Side::Right => pieces
                        .iter()
                        .find(|p| x < p.to)
                        .unwrap_or(&pieces[pieces.len() - 1]),
                    Side::Left => pieces
                        .iter()
                        .find(|p| x <= p.to)
                        .unwrap_or(&pieces[pieces.len() - 1]),
                };
                horner(&piece.coefficients, x)
            }
        }
    }

    /// Interior points where `V` may be discontinuous, ascending.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            PotentialKind::FiniteWell { half_width, .. } => vec![-half_width, *half_width],
            PotentialKind::Piecewise { pieces } => {
                pieces[..pieces.len() - 1].iter().map(|p| p.to).collect()
            }
            _ => Vec::new(),
        }
    }

    /// The smooth formula that `V` follows on the open interval between
    /// `lo` and `hi`, which must not straddle a breakpoint.
    pub(crate) fn formula_on(&self, lo: f64, hi: f64) -> Formula<'_> {
        let mid = 0.5 * (lo + hi);
        match &self.kind {
            PotentialKind::FiniteWell { depth, half_width } => {
                if mid.abs() < *half_width {
                    Formula::Constant(*depth)
                } else {
                    Formula::Constant(0.0)
                }
            }
            PotentialKind::Piecewise { pieces } => {
                let piece = pieces
                    .iter()
                    .find(|p| mid < p.to)
                    .unwrap_or(&pieces[pieces.len() - 1]);
                Formula::Polynomial(&piece.coefficients)
            }
            _ => Formula::Analytic(self),
        }
    }

    /// Parity test: analytic even kinds return `true` directly, the rest are
    /// compared against their mirror image on a [`PARITY_GRID`]-point grid.
    pub fn is_even(&self, tol: f64) -> bool {
        self.parity_defect() <= tol
    }

    /// `max |V(x) - V(-x)|` over the parity grid (0 for even-by-construction kinds).
    pub fn parity_defect(&self) -> f64 {
        if self.kind.even_by_construction() {
            return 0.0;
        }
        let n = PARITY_GRID - 1;
        (0..=n)
            .map(|k| {
                let x = -self.a + 2.0 * self.a * k as f64 / n as f64;
                // the mirror of a right limit is a left limit
                (self.eval_unchecked(x, Side::Right) - self.eval_unchecked(-x, Side::Left)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Estimate of `sup |V|` on the domain (grid maximum, breakpoints included).
    pub fn sup_norm(&self) -> f64 {
        let n = 4000;
        let mut best = 0.0f64;
        for k in 0..=n {
            let x = -self.a + 2.0 * self.a * k as f64 / n as f64;
            best = best
                .max(self.eval_unchecked(x, Side::Right).abs())
                .max(self.eval_unchecked(x, Side::Left).abs());
        }
        for b in self.breakpoints() {
            best = best
                .max(self.eval_unchecked(b, Side::Right).abs())
                .max(self.eval_unchecked(b, Side::Left).abs());
        }
        best
    }

    pub fn descriptor(&self) -> Descriptor {
        Descriptor::from(self.clone())
    }
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy)]
pub(crate) enum Formula<'a> {
    Analytic(&'a Potential),
    Polynomial(&'a [f64]),
    Constant(f64),
}

impl Formula<'_> {
    #[inline]
    pub(crate) fn eval(&self, x: f64) -> f64 {
        match self {
            Formula::Analytic(p) => p.eval_unchecked(x, Side::Right),
            Formula::Polynomial(c) => horner(c, x),
            Formula::Constant(v) => *v,
        }
    }
}

fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn param(params: &Value, name: &str, kind: &str) -> Result<f64> {
    params
        .get(name)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::InvalidPotential(format!("{kind} requires numeric params.{name}")))
}

impl TryFrom<Descriptor> for Potential {
    type Error = Error;

    fn try_from(d: Descriptor) -> Result<Self> {
        let p = &d.params;
        let kind = match d.kind.as_str() {
            "zero" => PotentialKind::Zero,
            "finite-well" => PotentialKind::FiniteWell {
                depth: param(p, "depth", "finite-well")?,
                half_width: param(p, "half_width", "finite-well")?,
            },
            "harmonic" => PotentialKind::Harmonic {
                coefficient: param(p, "coefficient", "harmonic")?,
            },
            "cosine" => PotentialKind::Cosine {
                amplitude: param(p, "amplitude", "cosine")?,
                wavenumber: param(p, "wavenumber", "cosine")?,
            },
            "polynomial" => PotentialKind::Polynomial {
                coefficients: serde_json::from_value(
                    p.get("coefficients").cloned().unwrap_or(Value::Null),
                )
                .map_err(|e| Error::InvalidPotential(format!("polynomial coefficients: {e}")))?,
            },
            "piecewise" => PotentialKind::Piecewise {
                pieces: serde_json::from_value(p.get("pieces").cloned().unwrap_or(Value::Null))
                    .map_err(|e| Error::InvalidPotential(format!("piecewise pieces: {e}")))?,
            },
            "delta" | "dirac" | "delta-function" => {
                return Err(Error::InvalidPotential(
                    "distributional potentials are not bounded and cannot be represented".into(),
                ))
            }
            other => return Err(Error::InvalidPotential(format!("unknown kind {other:?}"))),
        };
        Potential::new(kind, d.a)
    }
}

impl From<Potential> for Descriptor {
    fn from(p: Potential) -> Self {
        let params = match &p.kind {
            PotentialKind::Zero => json!({}),
            PotentialKind::FiniteWell { depth, half_width } => {
                json!({ "depth": depth, "half_width": half_width })
            }
            PotentialKind::Harmonic { coefficient } => json!({ "coefficient": coefficient }),
            PotentialKind::Cosine {
                amplitude,
                wavenumber,
            } => json!({ "amplitude": amplitude, "wavenumber": wavenumber }),
            PotentialKind::Polynomial { coefficients } => json!({ "coefficients": coefficients }),
            PotentialKind::Piecewise { pieces } => json!({ "pieces": pieces }),
        };
        Descriptor {
            kind: p.kind.name().to_string(),
            a: p.a,
            params,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_examples() {
        assert_eq!(Potential::zero(1.0).unwrap().evaluate(0.5).unwrap(), 0.0);
        assert_eq!(Potential::harmonic(1.0, 1.0).unwrap().evaluate(0.5).unwrap(), 0.25);
        let well = Potential::finite_well(-10.0, 0.5, 1.0).unwrap();
        assert_eq!(well.evaluate(0.75).unwrap(), 0.0);
        assert_eq!(well.evaluate(0.25).unwrap(), -10.0);
    }

    #[test]
    fn breakpoints_are_right_continuous() {
        let well = Potential::finite_well(-10.0, 0.5, 1.0).unwrap();
        assert_eq!(well.evaluate(0.5).unwrap(), 0.0);
        assert_eq!(well.evaluate(-0.5).unwrap(), -10.0);
        assert_eq!(well.evaluate_left(0.5).unwrap(), -10.0);
        let pw = Potential::piecewise(
            vec![
                Piece { from: -1.0, to: 0.0, coefficients: vec![1.0] },
                Piece { from: 0.0, to: 1.0, coefficients: vec![2.0, 1.0] },
            ],
            1.0,
        )
        .unwrap();
        assert_eq!(pw.evaluate(0.0).unwrap(), 2.0);
        assert_eq!(pw.evaluate(1.0).unwrap(), 3.0);
        assert_eq!(pw.evaluate(-1.0).unwrap(), 1.0);
    }

    #[test]
    fn out_of_domain_is_an_error() {
        let p = Potential::zero(1.0).unwrap();
        assert!(matches!(p.evaluate(1.5), Err(Error::Domain { .. })));
        assert!(matches!(p.evaluate(f64::NAN), Err(Error::Domain { .. })));
    }

    #[test]
    fn parity_examples() {
        assert!(Potential::harmonic(1.0, 1.0).unwrap().is_even(1e-12));
        assert!(!Potential::polynomial(vec![0.0, 1.0], 1.0).unwrap().is_even(1e-12));
        assert!(Potential::zero(2.0).unwrap().is_even(0.0));
        assert!(Potential::polynomial(vec![1.0, 0.0, -3.0, 0.0, 0.5], 1.0)
            .unwrap()
            .is_even(1e-12));
    }

    #[test]
    fn symmetric_piecewise_well_is_even() {
        let pw = Potential::piecewise(
            vec![
                Piece { from: -1.0, to: -0.5, coefficients: vec![0.0] },
                Piece { from: -0.5, to: 0.5, coefficients: vec![-4.0, 0.0, 1.0] },
                Piece { from: 0.5, to: 1.0, coefficients: vec![0.0] },
            ],
            1.0,
        )
        .unwrap();
        assert!(pw.is_even(1e-12));
    }

    #[test]
    fn rejects_invalid_descriptors() {
        let bad = [
            r#"{"kind":"zero","a":0.0,"params":{}}"#,
            r#"{"kind":"delta","a":1.0,"params":{"strength":1.0}}"#,
            r#"{"kind":"finite-well","a":1.0,"params":{"depth":-1.0,"half_width":2.0}}"#,
            r#"{"kind":"harmonic","a":1.0,"params":{}}"#,
            r#"{"kind":"piecewise","a":1.0,"params":{"pieces":[{"from":-1.0,"to":0.5,"coefficients":[1.0]}]}}"#,
        ];
        for s in bad {
            assert!(serde_json::from_str::<Potential>(s).is_err(), "{s}");
        }
    }

    #[test]
    fn descriptor_round_trip() {
        let p = Potential::cosine(1.0, std::f64::consts::PI, 2.0).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains(r#""kind":"cosine""#));
        let back: Potential = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn evaluate_is_pure() {
        let p = Potential::cosine(1.3, 2.7, 1.0).unwrap();
        for k in 0..50 {
            let x = -1.0 + 0.04 * k as f64;
            assert_eq!(p.evaluate(x).unwrap().to_bits(), p.evaluate(x).unwrap().to_bits());
        }
    }
}
