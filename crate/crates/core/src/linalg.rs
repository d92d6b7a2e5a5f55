//! Fixed-size complex 2×2 linear algebra.
//!
//! Everything in the extension machinery lives in C² ⊗ C², so a hand-rolled
//! `Mat2` with closed-form inverse, determinant and singular values is both
//! faster and easier to reason about than a general dense matrix type.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Vec2 = [C64; 2];

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Relative singular-value threshold below which a 2×2 matrix is treated as
/// singular for inversion.
pub const SINGULAR_RATIO: f64 = 1e-8;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A complex 2×2 matrix, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn from_real(rows: [[f64; 2]; 2]) -> Self {
        Mat2([
            [C64::from(rows[0][0]), C64::from(rows[0][1])],
            [C64::from(rows[1][0]), C64::from(rows[1][1])],
        ])
    }

    pub const fn identity() -> Self {
        Mat2([[ONE, ZERO], [ZERO, ONE]])
    }

    pub const fn zero() -> Self {
        Mat2([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn diag(a: C64, d: C64) -> Self {
        Mat2([[a, ZERO], [ZERO, d]])
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(c0: Vec2, c1: Vec2) -> Self {
        Mat2([[c0[0], c1[0]], [c0[1], c1[1]]])
    }

    pub fn column(&self, k: usize) -> Vec2 {
        [self.0[0][k], self.0[1][k]]
    }

    pub fn row(&self, k: usize) -> Vec2 {
        self.0[k]
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        let m = &self.0;
        Mat2([[f(m[0][0]), f(m[0][1])], [f(m[1][0]), f(m[1][1])]])
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn det(&self) -> C64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn frobenius(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Singular values `(sigma_max, sigma_min)`.
    ///
    /// `sigma_min` is recovered as `|det| / sigma_max`, which keeps full
    /// relative accuracy for nearly singular matrices.
    pub fn singular_values(&self) -> (f64, f64) {
        let fro2 = self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>();
        let det = self.det().norm();
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
        let smax = ((fro2 + disc) / 2.0).sqrt();
        let smin = if smax > 0.0 { det / smax } else { 0.0 };
        (smax, smin)
    }

    /// `sigma_min / sigma_max`, with the zero matrix reported as 0.
    pub fn singular_ratio(&self) -> f64 {
        let (smax, smin) = self.singular_values();
        if smax > 0.0 {
            smin / smax
        } else {
            0.0
        }
    }

    /// Closed-form adjugate inverse, refused when `sigma_min/sigma_max <= threshold`.
    pub fn try_inverse(&self, threshold: f64) -> Option<Mat2> {
        if self.singular_ratio() <= threshold {
            return None;
        }
        let m = &self.0;
        let inv_det = self.det().inv();
        Some(Mat2([
            [m[1][1] * inv_det, -m[0][1] * inv_det],
            [-m[1][0] * inv_det, m[0][0] * inv_det],
        ]))
    }

    /// Right singular vectors `(v_max, v_min)` of unit length.
    pub fn right_singular_vectors(&self) -> (Vec2, Vec2) {
        let (_, _, vmin, vmax) = hermitian_eigen(&(self.adjoint() * *self));
        (vmax, vmin)
    }

    /// `||self^H self - I||_F`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self - Mat2::identity()).frobenius()
    }

    /// `||self - self^H||_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.adjoint()).frobenius()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Eigen-decomposition of a Hermitian 2×2 matrix: `(lambda_min, lambda_max, v_min, v_max)`.
pub fn hermitian_eigen(h: &Mat2) -> (f64, f64, Vec2, Vec2) {
    let p = h.0[0][0].re;
    let r = h.0[1][1].re;
    let q = (h.0[0][1] + h.0[1][0].conj()) * 0.5;
    let mean = 0.5 * (p + r);
    let half = 0.5 * (p - r);
    let rad = (half * half + q.norm_sqr()).sqrt();
    let lmin = mean - rad;
    let lmax = mean + rad;
    if q.norm() <= f64::EPSILON * rad.max(f64::MIN_POSITIVE) {
        // diagonal to working precision
        let e0 = [ONE, ZERO];
        let e1 = [ZERO, ONE];
        return if p <= r {
            (lmin, lmax, e0, e1)
        } else {
            (lmin, lmax, e1, e0)
        };
    }
    let vmin = eigvec(p, r, q, lmin);
    // orthogonal complement
    let vmax = [-vmin[1].conj(), vmin[0].conj()];
    (lmin, lmax, vmin, vmax)
}

fn eigvec(p: f64, r: f64, q: C64, lambda: f64) -> Vec2 {
    // (H - lambda) v = 0 has two candidate solutions; take the better-scaled one
    let a = [q, C64::from(lambda - p)];
    let b = [C64::from(lambda - r), q.conj()];
    let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    let nb = (b[0].norm_sqr() + b[1].norm_sqr()).sqrt();
    if na >= nb {
        [a[0] / na, a[1] / na]
    } else {
        [b[0] / nb, b[1] / nb]
    }
}

impl Index<(usize, usize)> for Mat2 {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat2 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        self + (-rhs)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.map(|z| -z)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Mul<C64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: C64) -> Mat2 {
        self.scale(s)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        self.scale(C64::from(s))
    }
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            m[0][0], m[0][1], m[1][0], m[1][1]
        )
    }
}

/// Wire form `{"rows": [[[re,im],[re,im]],[[re,im],[re,im]]]}`.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: [[[f64; 2]; 2]; 2],
}

impl Serialize for Mat2 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows = self.0.map(|row| row.map(|z| [z.re, z.im]));
        MatrixJson { rows }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mat2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = MatrixJson::deserialize(d)?;
        Ok(Mat2(json.rows.map(|row| row.map(|[re, im]| C64::new(re, im)))))
    }
}

/// Certification threshold for user-supplied unitaries.
pub const UNITARY_INPUT_TOL: f64 = 1e-10;
/// Certification threshold for computed unitaries.
pub const UNITARY_OUTPUT_TOL: f64 = 1e-9;

/// A 2×2 matrix certified unitary at construction.
#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
#[serde(transparent)]
pub struct Unitary2(Mat2);

impl Unitary2 {
    pub fn certify(m: Mat2, tol: f64) -> Result<Self> {
        let defect = m.unitarity_defect();
        if defect.is_finite() && defect <= tol {
            Ok(Unitary2(m))
        } else {
            Err(Error::NotUnitary { defect, tol })
        }
    }

    /// Certify at the input threshold.
    pub fn new(m: Mat2) -> Result<Self> {
        Self::certify(m, UNITARY_INPUT_TOL)
    }

    pub fn identity() -> Self {
        Unitary2(Mat2::identity())
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn into_inner(self) -> Mat2 {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Unitary2(self.0.adjoint())
    }
}

impl<'de> Deserialize<'de> for Unitary2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = Mat2::deserialize(d)?;
        Unitary2::new(m).map_err(serde::de::Error::custom)
    }
}

/// Matrix of independent standard complex Gaussians (`E|z|^2 = 1`).
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let mut g = || {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    };
    Mat2::new(g(), g(), g(), g())
}

/// Haar-distributed unitary via Gram-Schmidt QR of a complex Gaussian matrix,
/// with the phases of R's diagonal folded back into Q.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R) -> Unitary2 {
    loop {
        let z = gaussian_matrix(rng);
        let c0 = z.column(0);
        let c1 = z.column(1);
        let r00 = (c0[0].norm_sqr() + c0[1].norm_sqr()).sqrt();
        if r00 < 1e-12 {
            continue;
        }
        let q0 = [c0[0] / r00, c0[1] / r00];
        let r01 = q0[0].conj() * c1[0] + q0[1].conj() * c1[1];
        let w = [c1[0] - r01 * q0[0], c1[1] - r01 * q0[1]];
        let r11 = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
        if r11 < 1e-12 {
            continue;
        }
        // r00 and r11 are real positive here, so the phase correction is trivial
        let q1 = [w[0] / r11, w[1] / r11];
        let q = Mat2::from_columns(q0, q1);
        // re-orthonormalize once to drive the defect to rounding level
        return Unitary2(polish_unitary(&q));
    }
}

/// One Newton step toward the polar factor, `(Q + Q^{-H}) / 2`.
pub fn polish_unitary(q: &Mat2) -> Mat2 {
    match q.adjoint().try_inverse(1e-12) {
        Some(inv_h) => (*q + inv_h) * 0.5,
        None => *q,
    }
}

pub fn vec_norm(v: &Vec2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn singular_values_of_diagonal() {
        let m = Mat2::diag(c(3.0, 0.0), c(0.0, -0.5));
        let (smax, smin) = m.singular_values();
        assert!((smax - 3.0).abs() < 1e-15);
        assert!((smin - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rank_one_has_zero_sigma_min() {
        let m = Mat2::new(c(1.0, 1.0), c(2.0, 0.0), c(2.0, 2.0), c(4.0, 0.0));
        assert!(m.singular_values().1 < 1e-15);
        assert!(m.try_inverse(SINGULAR_RATIO).is_none());
        let (_, vmin) = m.right_singular_vectors();
        let mv = m.apply(vmin);
        assert!(vec_norm(&mv) < 1e-14);
    }

    #[test]
    fn inverse_round_trip() {
        let m = Mat2::new(c(1.0, 2.0), c(-0.3, 0.1), c(0.5, 0.0), c(2.0, -1.0));
        let inv = m.try_inverse(SINGULAR_RATIO).unwrap();
        assert!((m * inv).max_abs_diff(&Mat2::identity()) < 1e-14);
    }

    #[test]
    fn haar_samples_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let u = haar_unitary(&mut rng);
            assert!(u.matrix().unitarity_defect() < 1e-14);
        }
    }

    #[test]
    fn certify_rejects_non_unitary() {
        let m = Mat2::diag(c(2.0, 0.0), ONE);
        assert!(matches!(Unitary2::new(m), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn hermitian_eigen_matches_definition() {
        let h = Mat2::new(c(1.0, 0.0), c(0.3, -0.7), c(0.3, 0.7), c(-2.0, 0.0));
        let (lmin, lmax, vmin, vmax) = hermitian_eigen(&h);
        for (l, v) in [(lmin, vmin), (lmax, vmax)] {
            let hv = h.apply(v);
            assert!((hv[0] - v[0] * l).norm() < 1e-14);
            assert!((hv[1] - v[1] * l).norm() < 1e-14);
        }
    }

    #[test]
    fn matrix_json_shape() {
        let m = Mat2::new(c(1.0, 0.5), ZERO, ZERO, c(0.0, -1.0));
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"rows":[[[1.0,0.5],[0.0,0.0]],[[0.0,0.0],[0.0,-1.0]]]}"#);
        let back: Mat2 = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
