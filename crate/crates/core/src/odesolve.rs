//! Complex shooting engine for `-f'' + V(x) f = λ f`.
//!
//! The second-order equation is integrated as the first-order system
//! `(f, f')` with an embedded Dormand–Prince 5(4) pair. Dense output is
//! produced on a fixed grid: every grid node is hit exactly by the stepper,
//! so two solutions integrated over the same span share bit-identical
//! abscissae and can be paired in quadrature. The grid is split at the
//! potential's breakpoints and each piece carries an even number of uniform
//! intervals, so composite Simpson never straddles a discontinuity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};
use crate::potential::{Formula, Potential};

/// Dense-output intervals across `[-a, a]`; shorter spans get a proportional share.
pub const DENSE_INTERVALS: usize = 1024;
/// Lower bound on intervals in any single smooth piece.
pub const MIN_SEGMENT_INTERVALS: usize = 8;
const MAX_STEPS: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerances {
    pub const fn new(rtol: f64, atol: f64) -> Self {
        Tolerances { rtol, atol }
    }

    fn validate(&self) -> Result<()> {
        if self.rtol > 0.0 && self.atol > 0.0 && self.rtol.is_finite() && self.atol.is_finite() {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "tolerances must be positive, got rtol={} atol={}",
                self.rtol, self.atol
            )))
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances::new(1e-10, 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub x: f64,
    pub f: C64,
    pub df: C64,
}

/// A dense trajectory of one solution.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub lambda: C64,
    pub x0: f64,
    pub x1: f64,
    pub f0: C64,
    pub df0: C64,
    pub samples: Vec<Sample>,
    pub f1: C64,
    pub df1: C64,
    /// Index of the first sample of each smooth piece; always starts with 0.
    pub segment_starts: Vec<usize>,
}

impl OdeSolution {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn abscissae(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.x)
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        &self.samples[self.samples.len() - 1]
    }

    /// `c * self`.
    pub fn scaled(&self, c: C64) -> OdeSolution {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.f *= c;
            s.df *= c;
        }
        out.refresh_endpoints();
        out
    }

    /// `c1 * u + c2 * w` for solutions on the same grid.
    pub fn combine(c1: C64, u: &OdeSolution, c2: C64, w: &OdeSolution) -> Result<OdeSolution> {
        check_same_grid(u, w)?;
        let mut out = u.clone();
        for (s, t) in out.samples.iter_mut().zip(&w.samples) {
            s.f = c1 * s.f + c2 * t.f;
            s.df = c1 * s.df + c2 * t.df;
        }
        out.refresh_endpoints();
        Ok(out)
    }

    fn refresh_endpoints(&mut self) {
        let first = self.samples[0];
        let last = self.samples[self.samples.len() - 1];
        self.f0 = first.f;
        self.df0 = first.df;
        self.f1 = last.f;
        self.df1 = last.df;
    }

    /// Value and derivative at the sample whose abscissa is exactly `x`.
    pub fn at(&self, x: f64) -> Option<(C64, C64)> {
        self.samples
            .iter()
            .find(|s| s.x == x)
            .map(|s| (s.f, s.df))
    }

    /// Extend a solution computed on `[0, a]` to `[-a, a]` assuming it is
    /// even (`odd = false`) or odd (`odd = true`) about the origin.
    pub fn reflected(&self, odd: bool) -> Result<OdeSolution> {
        if self.x0 != 0.0 || self.x1 <= 0.0 {
            return Err(Error::Parameter(
                "reflection needs a solution integrated from 0 to a positive endpoint".into(),
            ));
        }
        let n = self.samples.len() - 1;
        let (fs, dfs) = if odd { (-1.0, 1.0) } else { (1.0, -1.0) };
        let mut samples = Vec::with_capacity(2 * n + 1);
        for s in self.samples[1..].iter().rev() {
            samples.push(Sample {
                x: -s.x,
                f: s.f * fs,
                df: s.df * dfs,
            });
        }
        samples.extend_from_slice(&self.samples);

        let mut starts: Vec<usize> = vec![0];
        for &b in self.segment_starts.iter().skip(1).rev() {
            starts.push(n - b);
        }
        starts.push(n);
        starts.extend(self.segment_starts.iter().skip(1).map(|&b| n + b));

        let mut out = OdeSolution {
            lambda: self.lambda,
            x0: -self.x1,
            x1: self.x1,
            f0: ZERO,
            df0: ZERO,
            samples,
            f1: ZERO,
            df1: ZERO,
            segment_starts: starts,
        };
        out.refresh_endpoints();
        Ok(out)
    }

    /// Unconjugated Wronskian `u w' - u' w` at each sample.
    pub fn wronskian_with(&self, other: &OdeSolution) -> Result<Vec<C64>> {
        check_same_grid(self, other)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(u, w)| u.f * w.df - u.df * w.f)
            .collect())
    }

    /// `f''` at each sample by fourth-order differences of `f'` within each
    /// smooth piece. Breakpoint samples take the value from the piece on their
    /// right, except the final sample.
    pub fn second_derivative(&self) -> Vec<C64> {
        let mut out = vec![ZERO; self.samples.len()];
        for (lo, hi) in self.segment_bounds() {
            let g: Vec<C64> = self.samples[lo..=hi].iter().map(|s| s.df).collect();
            let h = (self.samples[hi].x - self.samples[lo].x) / (hi - lo) as f64;
            let d = differentiate_uniform(&g, h);
            out[lo..=hi].copy_from_slice(&d);
        }
        out
    }

    /// Inclusive `(first, last)` sample indices of each smooth piece.
    pub fn segment_bounds(&self) -> Vec<(usize, usize)> {
        let last = self.samples.len() - 1;
        let mut bounds = Vec::with_capacity(self.segment_starts.len());
        for (k, &s) in self.segment_starts.iter().enumerate() {
            let e = self.segment_starts.get(k + 1).copied().unwrap_or(last);
            bounds.push((s, e));
        }
        bounds
    }
}

fn differentiate_uniform(g: &[C64], h: f64) -> Vec<C64> {
    let n = g.len();
    let mut d = vec![ZERO; n];
    if n < 5 {
        // too short for the 5-point stencils; second-order fallback
        for i in 0..n {
            let (a, b) = if i == 0 {
                (0, 1.min(n - 1))
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            d[i] = (g[b] - g[a]) / (h * (b - a) as f64);
        }
        return d;
    }
    let s = 1.0 / (12.0 * h);
    d[0] = (g[0] * -25.0 + g[1] * 48.0 - g[2] * 36.0 + g[3] * 16.0 - g[4] * 3.0) * s;
    d[1] = (g[0] * -3.0 - g[1] * 10.0 + g[2] * 18.0 - g[3] * 6.0 + g[4]) * s;
    for i in 2..n - 2 {
        d[i] = (-g[i + 2] + g[i + 1] * 8.0 - g[i - 1] * 8.0 + g[i - 2]) * s;
    }
    let m = n - 1;
    d[m] = (g[m] * 25.0 - g[m - 1] * 48.0 + g[m - 2] * 36.0 - g[m - 3] * 16.0 + g[m - 4] * 3.0) * s;
    d[m - 1] =
        (g[m] * 3.0 + g[m - 1] * 10.0 - g[m - 2] * 18.0 + g[m - 3] * 6.0 - g[m - 4]) * s;
    d
}

fn check_same_grid(u: &OdeSolution, w: &OdeSolution) -> Result<()> {
    if u.samples.len() != w.samples.len() {
        return Err(Error::GridMismatch(format!(
            "{} vs {} samples",
            u.samples.len(),
            w.samples.len()
        )));
    }
    let tol = 1e-13 * (u.x1 - u.x0).abs().max(1.0);
    for (k, (s, t)) in u.samples.iter().zip(&w.samples).enumerate() {
        if (s.x - t.x).abs() > tol {
            return Err(Error::GridMismatch(format!(
                "abscissa {k} differs: {} vs {}",
                s.x, t.x
            )));
        }
    }
    Ok(())
}

/// `∫ conj(u) w dx` by composite Simpson on the shared dense grid.
pub fn l2_inner(u: &OdeSolution, w: &OdeSolution) -> Result<C64> {
    check_same_grid(u, w)?;
    let xs: Vec<f64> = u.samples.iter().map(|s| s.x).collect();
    let ys: Vec<C64> = u
        .samples
        .iter()
        .zip(&w.samples)
        .map(|(a, b)| a.f.conj() * b.f)
        .collect();
    let total = simpson(&xs, &ys);
    // orientation: the inner product integrates from left to right
    Ok(if xs[xs.len() - 1] < xs[0] { -total } else { total })
}

pub fn l2_norm(u: &OdeSolution) -> Result<f64> {
    Ok(l2_inner(u, u)?.re.max(0.0).sqrt())
}

/// Composite Simpson over consecutive interval pairs; handles unequal
/// spacing within a pair and an odd trailing interval.
pub(crate) fn simpson(xs: &[f64], ys: &[C64]) -> C64 {
    let n = xs.len();
    if n < 2 {
        return ZERO;
    }
    if n == 2 {
        return (ys[0] + ys[1]) * (0.5 * (xs[1] - xs[0]));
    }
    let mut acc = ZERO;
    let mut i = 0;
    while i + 2 < n {
        acc += simpson_pair(xs[i], xs[i + 1], xs[i + 2], ys[i], ys[i + 1], ys[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        // last interval alone: integrate the parabola through the final three points
        let (x0, x1, x2) = (xs[n - 3], xs[n - 2], xs[n - 1]);
        let (y0, y1, y2) = (ys[n - 3], ys[n - 2], ys[n - 1]);
        let h0 = x1 - x0;
        let h1 = x2 - x1;
        let w2 = h1 * (2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1));
        let w1 = h1 * (h1 + 3.0 * h0) / (6.0 * h0);
        let w0 = -h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
        acc += y0 * w0 + y1 * w1 + y2 * w2;
    }
    acc
}

fn simpson_pair(x0: f64, x1: f64, x2: f64, y0: C64, y1: C64, y2: C64) -> C64 {
    let h0 = x1 - x0;
    let h1 = x2 - x1;
    let s = h0 + h1;
    (y0 * (2.0 - h1 / h0) + y1 * (s * s / (h0 * h1)) + y2 * (2.0 - h0 / h1)) * (s / 6.0)
}

/// Smooth pieces of `[x0, x1]` (in travel direction) cut at the potential's breakpoints.
fn pieces(p: &Potential, x0: f64, x1: f64) -> Vec<(f64, f64)> {
    let (lo, hi) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
    let mut cuts: Vec<f64> = p
        .breakpoints()
        .into_iter()
        .filter(|&b| b > lo && b < hi)
        .collect();
    if x0 > x1 {
        cuts.reverse();
    }
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut start = x0;
    for b in cuts {
        out.push((start, b));
        start = b;
    }
    out.push((start, x1));
    out
}

fn check_span(p: &Potential, x0: f64, x1: f64) -> Result<()> {
    if x0 == x1 || !x0.is_finite() || !x1.is_finite() {
        return Err(Error::Parameter(format!(
            "integration span must be non-empty, got [{x0}, {x1}]"
        )));
    }
    p.evaluate(x0)?;
    p.evaluate(x1)?;
    Ok(())
}

/// Integrate `-f'' + V f = λ f` from `x0` to `x1` with `(f, f')(x0) = initial`.
pub fn integrate(
    p: &Potential,
    lambda: C64,
    span: (f64, f64),
    initial: (C64, C64),
    tol: Tolerances,
) -> Result<OdeSolution> {
    let (x0, x1) = span;
    check_span(p, x0, x1)?;
    tol.validate()?;
    let (xs, starts) = dense_grid(p, x0, x1);
    let states = march(p, lambda, &xs, &starts, [initial.0, initial.1], tol)?;
    Ok(build_solution(lambda, &xs, &starts, states.iter().map(|s| (s[0], s[1]))))
}

/// The fundamental pair with `(u1, u1') = (1, 0)` and `(u2, u2') = (0, 1)` at
/// `x0`, integrated in lockstep on one grid.
pub fn integrate_pair(
    p: &Potential,
    lambda: C64,
    span: (f64, f64),
    tol: Tolerances,
) -> Result<(OdeSolution, OdeSolution)> {
    let (x0, x1) = span;
    check_span(p, x0, x1)?;
    tol.validate()?;
    let (xs, starts) = dense_grid(p, x0, x1);
    let one = C64::new(1.0, 0.0);
    let states = march(p, lambda, &xs, &starts, [one, ZERO, ZERO, one], tol)?;
    let u1 = build_solution(lambda, &xs, &starts, states.iter().map(|s| (s[0], s[1])));
    let u2 = build_solution(lambda, &xs, &starts, states.iter().map(|s| (s[2], s[3])));
    Ok((u1, u2))
}

/// Terminal values `[[u1, u1'], [u2, u2']]` at `x1` of the fundamental pair
/// started at `x0`, without dense output.
pub fn propagate_pair(
    p: &Potential,
    lambda: C64,
    span: (f64, f64),
    tol: Tolerances,
) -> Result<[[C64; 2]; 2]> {
    let (x0, x1) = span;
    check_span(p, x0, x1)?;
    tol.validate()?;
    let one = C64::new(1.0, 0.0);
    let mut y = [one, ZERO, ZERO, one];
    let mut h = (x1 - x0) / 64.0;
    for (a, b) in pieces(p, x0, x1) {
        let formula = p.formula_on(a, b);
        y = dp5(&system::<4>(formula, lambda), a, b, y, tol, &mut h)?;
    }
    Ok([[y[0], y[1]], [y[2], y[3]]])
}

fn dense_grid(p: &Potential, x0: f64, x1: f64) -> (Vec<f64>, Vec<usize>) {
    // density is fixed relative to the full interval so that a half-span
    // solution reflected about the origin lands on the same nodes
    let total = 2.0 * p.a();
    let mut xs = vec![x0];
    let mut starts = Vec::new();
    for (a, b) in pieces(p, x0, x1) {
        starts.push(xs.len() - 1);
        let share = (b - a).abs() / total * DENSE_INTERVALS as f64;
        let mut n = (share / 2.0).ceil() as usize * 2;
        n = n.max(MIN_SEGMENT_INTERVALS);
        for k in 1..n {
            xs.push(a + (b - a) * k as f64 / n as f64);
        }
        xs.push(b);
    }
    (xs, starts)
}

fn march<const N: usize>(
    p: &Potential,
    lambda: C64,
    xs: &[f64],
    starts: &[usize],
    y0: [C64; N],
    tol: Tolerances,
) -> Result<Vec<[C64; N]>> {
    let mut states = Vec::with_capacity(xs.len());
    states.push(y0);
    let mut y = y0;
    let mut h = xs[1] - xs[0];
    let last = xs.len() - 1;
    for (k, &s) in starts.iter().enumerate() {
        let e = starts.get(k + 1).copied().unwrap_or(last);
        let formula = p.formula_on(xs[s], xs[e]);
        let rhs = system::<N>(formula, lambda);
        for i in s..e {
            y = dp5(&rhs, xs[i], xs[i + 1], y, tol, &mut h)?;
            states.push(y);
        }
    }
    Ok(states)
}

fn build_solution(
    lambda: C64,
    xs: &[f64],
    starts: &[usize],
    values: impl Iterator<Item = (C64, C64)>,
) -> OdeSolution {
    let samples: Vec<Sample> = xs
        .iter()
        .zip(values)
        .map(|(&x, (f, df))| Sample { x, f, df })
        .collect();
    let first = samples[0];
    let last = samples[samples.len() - 1];
    OdeSolution {
        lambda,
        x0: first.x,
        x1: last.x,
        f0: first.f,
        df0: first.df,
        samples,
        f1: last.f,
        df1: last.df,
        segment_starts: starts.to_vec(),
    }
}

/// Right-hand side for `N / 2` independent copies of the system `(f, f')`.
fn system<const N: usize>(formula: Formula<'_>, lambda: C64) -> impl Fn(f64, &[C64; N]) -> [C64; N] + '_ {
    move |x, y| {
        let q = C64::from(formula.eval(x)) - lambda;
        let mut dy = [ZERO; N];
        for k in (0..N).step_by(2) {
            dy[k] = y[k + 1];
            dy[k + 1] = q * y[k];
        }
        dy
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy<const N: usize>(y: &[C64; N], h: f64, terms: &[(f64, &[C64; N])]) -> [C64; N] {
    let mut out = *y;
    for (w, k) in terms {
        let hw = h * w;
        for i in 0..N {
            out[i] += k[i] * hw;
        }
    }
    out
}

/// Adaptive integration from `x0` to exactly `x1`. `h` carries the step size
/// between calls and is updated to the last accepted proposal.
fn dp5<const N: usize>(
    rhs: &impl Fn(f64, &[C64; N]) -> [C64; N],
    x0: f64,
    x1: f64,
    y0: [C64; N],
    tol: Tolerances,
    h: &mut f64,
) -> Result<[C64; N]> {
    let dir = (x1 - x0).signum();
    let span = (x1 - x0).abs();
    let mut x = x0;
    let mut y = y0;
    let mut step = h.abs().min(span).max(span * 1e-12) * dir;
    let mut k1 = rhs(x, &y);
    let mut proposal = step.abs();
    let mut count = 0usize;
    loop {
        let remaining = x1 - x;
        let mut last = false;
        if step.abs() >= remaining.abs() * (1.0 - 1e-12) {
            step = remaining;
            last = true;
        }
        let floor = 1e-14 * x.abs().max(span).max(1.0);
        if step.abs() < floor {
            return Err(Error::IntegrationFailure {
                x,
                reason: format!("step size underflow (h = {step:e})"),
            });
        }
        count += 1;
        if count > MAX_STEPS {
            return Err(Error::IntegrationFailure {
                x,
                reason: "step budget exhausted".into(),
            });
        }

        let k2 = rhs(x + C2 * step, &axpy(&y, step, &[(A21, &k1)]));
        let k3 = rhs(x + C3 * step, &axpy(&y, step, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(
            x + C4 * step,
            &axpy(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = rhs(
            x + C5 * step,
            &axpy(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            x + step,
            &axpy(
                &y,
                step,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            step,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let x_new = if last { x1 } else { x + step };
        let k7 = rhs(x_new, &y_new);

        let mut err2 = 0.0;
        for i in 0..N {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                * step;
            let sc = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
            err2 += (e.norm() / sc).powi(2);
        }
        let err = (err2 / N as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            // overflow or NaN: shrink hard and retry
            step *= 0.1;
            continue;
        }

        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            x = x_new;
            y = y_new;
            k1 = k7;
            if !last {
                proposal = step.abs() * factor;
            }
            if last {
                *h = proposal.max(step.abs());
                return Ok(y);
            }
            step = proposal * dir;
        } else {
            step *= factor.min(1.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn zero() -> Potential {
        Potential::zero(1.0).unwrap()
    }

    #[test]
    fn cosh_closed_form() {
        // f'' = f with f(-1)=1, f'(-1)=0 gives cosh(x+1)
        let sol = integrate(
            &zero(),
            c(-1.0, 0.0),
            (-1.0, 1.0),
            (c(1.0, 0.0), ZERO),
            Tolerances::default(),
        )
        .unwrap();
        assert!((sol.f1 - c(2f64.cosh(), 0.0)).norm() < 1e-9);
        assert!((sol.df1 - c(2f64.sinh(), 0.0)).norm() < 1e-9);
        assert_eq!(sol.samples[0].x, -1.0);
        assert_eq!(sol.last().x, 1.0);
        assert_eq!(sol.f1, sol.last().f);
    }

    #[test]
    fn zero_initial_data_stays_zero() {
        let sol = integrate(
            &zero(),
            c(3.0, -2.0),
            (-1.0, 1.0),
            (ZERO, ZERO),
            Tolerances::default(),
        )
        .unwrap();
        assert!(sol.samples.iter().all(|s| s.f == ZERO && s.df == ZERO));
    }

    #[test]
    fn complex_cosine_closed_form() {
        // g'' = -i g: cos(kx) with k = e^{i pi/4}
        let k = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let sol = integrate(
            &zero(),
            c(0.0, 1.0),
            (0.0, 1.0),
            (c(1.0, 0.0), ZERO),
            Tolerances::default(),
        )
        .unwrap();
        let expect = k.cos();
        assert!((sol.f1 - expect).norm() < 1e-9, "{} vs {}", sol.f1, expect);
        assert!((expect - c(0.958358132833007, -0.498611386672833)).norm() < 1e-12);
    }

    #[test]
    fn dense_spacing_bound() {
        let p = Potential::finite_well(-3.0, 0.3, 1.0).unwrap();
        let sol = integrate(&p, c(1.0, 0.0), (-1.0, 1.0), (c(1.0, 0.0), ZERO), Tolerances::default())
            .unwrap();
        let max_gap = sol
            .samples
            .windows(2)
            .map(|w| w[1].x - w[0].x)
            .fold(0.0, f64::max);
        assert!(max_gap <= 2.0 / 256.0);
        assert!(sol.samples.windows(2).all(|w| w[1].x > w[0].x));
        // the breakpoints are grid nodes
        assert!(sol.samples.iter().any(|s| s.x == -0.3));
        assert!(sol.samples.iter().any(|s| s.x == 0.3));
        assert_eq!(sol.segment_starts.len(), 3);
    }

    #[test]
    fn backward_integration_matches_forward() {
        let p = Potential::harmonic(2.0, 1.0).unwrap();
        let fwd = integrate(&p, c(0.5, 0.0), (-1.0, 1.0), (c(1.0, 0.0), c(0.3, 0.0)), Tolerances::default())
            .unwrap();
        let back = integrate(&p, c(0.5, 0.0), (1.0, -1.0), (fwd.f1, fwd.df1), Tolerances::default())
            .unwrap();
        assert!((back.f1 - c(1.0, 0.0)).norm() < 1e-8);
        assert!((back.df1 - c(0.3, 0.0)).norm() < 1e-8);
        assert!(l2_norm(&back).unwrap() > 0.0);
        assert!((l2_norm(&back).unwrap() - l2_norm(&fwd).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn inner_product_examples() {
        let one = integrate(&zero(), ZERO, (-1.0, 1.0), (c(1.0, 0.0), ZERO), Tolerances::default())
            .unwrap();
        assert!((l2_inner(&one, &one).unwrap() - c(2.0, 0.0)).norm() < 1e-12);

        // cos(pi x / 2) solves -f'' = (pi/2)^2 f; its L2 norm on [-1,1] is 1
        let k = std::f64::consts::FRAC_PI_2;
        let cos = integrate(&zero(), c(k * k, 0.0), (0.0, 1.0), (c(1.0, 0.0), ZERO), Tolerances::default())
            .unwrap()
            .reflected(false)
            .unwrap();
        assert!((l2_inner(&cos, &cos).unwrap() - c(1.0, 0.0)).norm() < 1e-10);

        let sin = integrate(&zero(), c(k * k, 0.0), (0.0, 1.0), (ZERO, c(1.0, 0.0)), Tolerances::default())
            .unwrap()
            .reflected(true)
            .unwrap();
        assert!(l2_inner(&cos, &sin).unwrap().norm() < 1e-12);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let u = integrate(&zero(), ZERO, (-1.0, 1.0), (c(1.0, 0.0), ZERO), Tolerances::default()).unwrap();
        let w = integrate(&zero(), ZERO, (-1.0, 0.5), (c(1.0, 0.0), ZERO), Tolerances::default()).unwrap();
        assert!(matches!(l2_inner(&u, &w), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn invalid_spans_and_tolerances() {
        let p = zero();
        let run = |span, tol| integrate(&p, ZERO, span, (c(1.0, 0.0), ZERO), tol);
        assert!(run((0.0, 0.0), Tolerances::default()).is_err());
        assert!(matches!(run((0.0, 2.0), Tolerances::default()), Err(Error::Domain { .. })));
        assert!(run((0.0, 1.0), Tolerances::new(0.0, 1e-12)).is_err());
    }

    #[test]
    fn simpson_exactness() {
        let xs: Vec<f64> = (0..=8).map(|k| k as f64 * 0.25).collect();
        let ys: Vec<C64> = xs.iter().map(|x| c(x * x * x - x, 0.0)).collect();
        let exact = 2f64.powi(4) / 4.0 - 2f64.powi(2) / 2.0;
        assert!((simpson(&xs, &ys).re - exact).abs() < 1e-13);

        // odd interval count: the trailing interval is still exact for quadratics
        let xs: Vec<f64> = (0..=7).map(|k| k as f64 * 0.25).collect();
        let ys: Vec<C64> = xs.iter().map(|x| c(x * x - x, 0.0)).collect();
        let exact = 1.75f64.powi(3) / 3.0 - 1.75f64.powi(2) / 2.0;
        assert!((simpson(&xs, &ys).re - exact).abs() < 1e-13);
    }

    #[test]
    fn second_derivative_is_fourth_order() {
        let k = 3.0;
        let sol = integrate(&zero(), c(k * k, 0.0), (-1.0, 1.0), (c(1.0, 0.0), ZERO), Tolerances::default())
            .unwrap();
        let d2 = sol.second_derivative();
        for (s, d) in sol.samples.iter().zip(&d2) {
            assert!((d + s.f * (k * k)).norm() < 1e-8);
        }
    }

    #[test]
    fn step_underflow_reports_abscissa() {
        // absurd accuracy demand forces the step below the floor
        let p = Potential::cosine(1e6, 1e3, 1.0).unwrap();
        let err = propagate_pair(&p, c(0.0, 0.0), (-1.0, 1.0), Tolerances::new(1e-300, 1e-300));
        match err {
            Err(Error::IntegrationFailure { x, .. }) => assert!((-1.0..=1.0).contains(&x)),
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
