//! The bijection between the von Neumann parameter `U` (a unitary map from
//! `K+` to `K-`, written in the basis `g_j -> Σ_k u_jk conj(g_k)`) and the
//! boundary-condition unitary `𝒰` relating
//! `(f'(a) - i f(a), f'(-a) + i f(-a))` to `(f'(a) + i f(a), f'(-a) - i f(-a))`.

use nalgebra::{Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deficiency::{BoundaryRow, DeficiencyBasis};
use crate::error::{Error, Result};
use crate::linalg::{
    gaussian_matrix, haar_unitary, Mat2, Unitary2, Vec2, C64, I, ONE, SINGULAR_RATIO,
    UNITARY_OUTPUT_TOL,
};

/// Relative singular-value floor of the 4×4 inverse system.
pub const UNIQUENESS_RATIO: f64 = 1e-10;
/// Absolute singular-value floor used by [`check_identities`].
pub const SAMPLED_SIGMA_FLOOR: f64 = 1e-6;
/// Relative tolerance of the `VV† - ṼṼ†` identity.
pub const IDENTITY_TOL: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 0x5eed;

const P: Mat2 = Mat2::new(ONE, ONE, C64::new(-1.0, 0.0), ONE);
const Q: Mat2 = Mat2::new(ONE, C64::new(-1.0, 0.0), ONE, ONE);

/// `𝒰 = ½ P 𝒰̃ Q`.
pub fn ucal_from_utilde(utilde: &Mat2) -> Mat2 {
    (P * *utilde * Q) * 0.5
}

/// `𝒰̃ = ½ Q 𝒰 P`, the exact inverse of [`ucal_from_utilde`].
pub fn utilde_from_ucal(ucal: &Mat2) -> Mat2 {
    (Q * *ucal * P) * 0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapPair {
    pub basis: DeficiencyBasis,
    #[serde(rename = "U")]
    pub u: Unitary2,
    #[serde(rename = "Utilde")]
    pub utilde: Unitary2,
    #[serde(rename = "Ucal")]
    pub ucal: Unitary2,
    #[serde(rename = "V")]
    pub v: Mat2,
    #[serde(rename = "Vtilde")]
    pub vtilde: Mat2,
}

/// `V = conj𝒜 - i conjℬ + conj(U)(𝒜 - iℬ)` and
/// `Ṽ = -[conj𝒜 + i conjℬ + conj(U)(𝒜 + iℬ)]`. `U` need not be unitary.
pub fn build_v_vtilde(basis: &DeficiencyBasis, u: &Mat2) -> Result<(Mat2, Mat2)> {
    let (ma, mb) = basis.require_even()?;
    let uc = u.conj();
    let v = ma.conj() - mb.conj().scale(I) + uc * (ma - mb.scale(I));
    let vtilde = -(ma.conj() + mb.conj().scale(I) + uc * (ma + mb.scale(I)));
    Ok((v, vtilde))
}

pub fn forward_map(basis: &DeficiencyBasis, u: &Unitary2) -> Result<MapPair> {
    let (v, vtilde) = build_v_vtilde(basis, u.matrix())?;
    let v_inv = v.try_inverse(SINGULAR_RATIO).ok_or_else(|| {
        Error::InternalConsistency(format!(
            "V is singular (ratio {:e}) for a unitary U",
            v.singular_ratio()
        ))
    })?;
    let utilde = v_inv * vtilde;
    let ucal = ucal_from_utilde(&utilde);
    Ok(MapPair {
        basis: basis.clone(),
        u: *u,
        utilde: Unitary2::certify(utilde, UNITARY_OUTPUT_TOL)?,
        ucal: Unitary2::certify(ucal, UNITARY_OUTPUT_TOL)?,
        v,
        vtilde,
    })
}

/// The 4×4 matrix acting on row-major `vec(conj U)` in
/// `conj(U) [(𝒜 - iℬ)𝒰̃ + (𝒜 + iℬ)] = -(conj𝒜 - i conjℬ)𝒰̃ - (conj𝒜 + i conjℬ)`,
/// together with the right-hand side.
pub fn inverse_system(basis: &DeficiencyBasis, ucal: &Mat2) -> Result<(Matrix4<C64>, Vector4<C64>)> {
    let (ma, mb) = basis.require_even()?;
    let ut = utilde_from_ucal(ucal);
    let m = (ma - mb.scale(I)) * ut + (ma + mb.scale(I));
    let r = -((ma.conj() - mb.conj().scale(I)) * ut) - (ma.conj() + mb.conj().scale(I));
    let mut s = Matrix4::<C64>::zeros();
    let mut rhs = Vector4::<C64>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                s[(2 * i + j, 2 * i + k)] = m[(k, j)];
            }
            rhs[2 * i + j] = r[(i, j)];
        }
    }
    Ok((s, rhs))
}

fn singular_extremes(s: &Matrix4<C64>) -> (f64, f64) {
    let sv = s.singular_values();
    (sv.max(), sv.min())
}

pub fn inverse_map(basis: &DeficiencyBasis, ucal: &Unitary2) -> Result<Unitary2> {
    let (s, rhs) = inverse_system(basis, ucal.matrix())?;
    let (smax, smin) = singular_extremes(&s);
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if !(ratio > UNIQUENESS_RATIO) {
        return Err(Error::Uniqueness { ratio });
    }
    let x = s
        .full_piv_lu()
        .solve(&rhs)
        .ok_or(Error::Uniqueness { ratio })?;
    let u_conj = Mat2::new(x[0], x[1], x[2], x[3]);
    Unitary2::certify(u_conj.conj(), UNITARY_OUTPUT_TOL)
}

/// Boundary rows `(G_j'(a), G_j(a), G_j'(-a), G_j(-a))` of
/// `G_j = g_j + Σ_k u_jk conj(g_k)`, which span the extension domain modulo
/// the closure.
pub fn extension_boundary_rows(basis: &DeficiencyBasis, u: &Mat2) -> [BoundaryRow; 2] {
    let t = &basis.boundary_table;
    std::array::from_fn(|j| {
        std::array::from_fn(|m| t[j][m] + u[(j, 0)] * t[0][m].conj() + u[(j, 1)] * t[1][m].conj())
    })
}

/// `(f'(a) - i f(a), f'(-a) + i f(-a))` for a boundary row.
pub fn z_plus(row: &BoundaryRow) -> Vec2 {
    [row[0] - I * row[1], row[2] + I * row[3]]
}

/// `(f'(a) + i f(a), f'(-a) - i f(-a))` for a boundary row.
pub fn z_minus(row: &BoundaryRow) -> Vec2 {
    [row[0] + I * row[1], row[2] - I * row[3]]
}

/// `𝒰 = (Z⁻ (Z⁺)⁻¹)†` from the extension functions `G_j`. Works for any
/// orthonormal basis; the even/odd one gives the same `𝒰` as [`forward_map`].
pub fn forward_map_general(basis: &DeficiencyBasis, u: &Unitary2) -> Result<Unitary2> {
    let rows = extension_boundary_rows(basis, u.matrix());
    let zp = Mat2::from_columns(z_plus(&rows[0]), z_plus(&rows[1]));
    let zm = Mat2::from_columns(z_minus(&rows[0]), z_minus(&rows[1]));
    let zp_inv = zp.try_inverse(SINGULAR_RATIO).ok_or(Error::LinearIndependence {
        ratio: zp.singular_ratio(),
    })?;
    Unitary2::certify((zm * zp_inv).adjoint(), UNITARY_OUTPUT_TOL)
}

/// Inverse of [`forward_map_general`]: solves `N Uᵀ = [𝒰 r_1 - p_1, 𝒰 r_2 - p_2]`
/// where `N` has columns `q_k - 𝒰 s_k`, with `p, r` the `z±` vectors of `g_j`
/// and `q, s` those of `conj(g_k)`.
pub fn inverse_map_general(basis: &DeficiencyBasis, ucal: &Unitary2) -> Result<Unitary2> {
    let m = ucal.matrix();
    let t = &basis.boundary_table;
    let conj_row = |row: &BoundaryRow| row.map(|v| v.conj());
    let col = |k: usize| {
        let g = conj_row(&t[k]);
        let q = z_plus(&g);
        let s = m.apply(z_minus(&g));
        [q[0] - s[0], q[1] - s[1]]
    };
    let rhs = |j: usize| {
        let p = z_plus(&t[j]);
        let r = m.apply(z_minus(&t[j]));
        [r[0] - p[0], r[1] - p[1]]
    };
    let n = Mat2::from_columns(col(0), col(1));
    let n_inv = n.try_inverse(SINGULAR_RATIO).ok_or(Error::Uniqueness {
        ratio: n.singular_ratio(),
    })?;
    let ut = n_inv * Mat2::from_columns(rhs(0), rhs(1));
    Unitary2::certify(ut.transpose(), UNITARY_OUTPUT_TOL)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckSummary {
    pub passed: usize,
    pub failed: usize,
    /// Largest defect for upper-bound checks, smallest value for lower-bound checks.
    pub worst: f64,
    pub threshold: f64,
}

impl CheckSummary {
    fn upper(values: &[f64], threshold: f64) -> Self {
        let passed = values.iter().filter(|&&v| v <= threshold).count();
        CheckSummary {
            passed,
            failed: values.len() - passed,
            worst: values.iter().copied().fold(0.0, f64::max),
            threshold,
        }
    }

    fn lower(values: &[f64], threshold: f64) -> Self {
        let passed = values.iter().filter(|&&v| v > threshold).count();
        CheckSummary {
            passed,
            failed: values.len() - passed,
            worst: values.iter().copied().fold(f64::INFINITY, f64::min),
            threshold,
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IdentityReport {
    pub samples: usize,
    pub seed: u64,
    /// `VV† - ṼṼ† = 2(I - conj(U) conj(U)†)`, relative defect, all inputs.
    pub gram_identity: CheckSummary,
    /// `min(σ_min(V), σ_min(Ṽ))` over unitary inputs.
    pub v_nonsingular: CheckSummary,
    /// `σ_min` of the 4×4 inverse system over random `𝒰`.
    pub inverse_system: CheckSummary,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.gram_identity.ok() && self.v_nonsingular.ok() && self.inverse_system.ok()
    }
}

/// Relative defect of `VV† - ṼṼ† = 2(I - conj(U) conj(U)†)`.
pub fn gram_identity_defect(basis: &DeficiencyBasis, u: &Mat2) -> Result<f64> {
    let (v, vt) = build_v_vtilde(basis, u)?;
    let lhs = v * v.adjoint() - vt * vt.adjoint();
    let uc = u.conj();
    let rhs = (Mat2::identity() - uc * uc.adjoint()) * 2.0;
    let scale = v.frobenius().powi(2).max(vt.frobenius().powi(2)).max(1.0);
    Ok(lhs.max_abs_diff(&rhs) / scale)
}

pub fn check_identities(basis: &DeficiencyBasis, samples: usize) -> Result<IdentityReport> {
    check_identities_seeded(basis, samples, DEFAULT_SEED)
}

pub fn check_identities_seeded(
    basis: &DeficiencyBasis,
    samples: usize,
    seed: u64,
) -> Result<IdentityReport> {
    basis.require_even()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unitaries: Vec<Mat2> = (0..samples).map(|_| haar_unitary(&mut rng).into_inner()).collect();
    let generic: Vec<Mat2> = (0..samples)
        .map(|_| {
            let scale = 0.1 + 3.0 * rand::Rng::random::<f64>(&mut rng);
            gaussian_matrix(&mut rng) * scale
        })
        .collect();
    let ucals: Vec<Mat2> = (0..samples).map(|_| haar_unitary(&mut rng).into_inner()).collect();

    let gram: Vec<f64> = unitaries
        .par_iter()
        .chain(generic.par_iter())
        .map(|u| gram_identity_defect(basis, u))
        .collect::<Result<_>>()?;
    let sigmas: Vec<f64> = unitaries
        .par_iter()
        .map(|u| {
            let (v, vt) = build_v_vtilde(basis, u)?;
            Ok(v.singular_values().1.min(vt.singular_values().1))
        })
        .collect::<Result<_>>()?;
    let system: Vec<f64> = ucals
        .par_iter()
        .map(|m| Ok(singular_extremes(&inverse_system(basis, m)?.0).1))
        .collect::<Result<_>>()?;

    Ok(IdentityReport {
        samples,
        seed,
        gram_identity: CheckSummary::upper(&gram, IDENTITY_TOL),
        v_nonsingular: CheckSummary::lower(&sigmas, SAMPLED_SIGMA_FLOOR),
        inverse_system: CheckSummary::lower(&system, SAMPLED_SIGMA_FLOOR),
    })
}

/// `U` whose boundary unitary is the Dirichlet one, `-𝒜 conj(𝒜)⁻¹`.
pub fn dirichlet_u(basis: &DeficiencyBasis) -> Result<Unitary2> {
    let (ma, _) = basis.require_even()?;
    let inv = ma.conj().try_inverse(SINGULAR_RATIO).ok_or_else(|| {
        Error::InternalConsistency("boundary value matrix is singular".into())
    })?;
    Unitary2::certify(-(ma * inv), UNITARY_OUTPUT_TOL)
}

/// `U` whose boundary unitary is the Neumann one, `-ℬ conj(ℬ)⁻¹`.
pub fn neumann_u(basis: &DeficiencyBasis) -> Result<Unitary2> {
    let (_, mb) = basis.require_even()?;
    let inv = mb.conj().try_inverse(SINGULAR_RATIO).ok_or_else(|| {
        Error::InternalConsistency("boundary derivative matrix is singular".into())
    })?;
    Unitary2::certify(-(mb * inv), UNITARY_OUTPUT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deficiency::{change_of_basis, solve_even_odd, solve_orthonormal_pair};
    use crate::linalg::c;
    use crate::potential::Potential;

    fn zero_basis() -> DeficiencyBasis {
        solve_even_odd(&Potential::zero(1.0).unwrap()).unwrap()
    }

    #[test]
    fn p_q_change_of_basis_is_invertible() {
        let m = Mat2::new(c(1.0, 2.0), c(0.5, -1.0), c(-3.0, 0.25), c(0.0, 1.0));
        assert!(utilde_from_ucal(&ucal_from_utilde(&m)).max_abs_diff(&m) < 1e-15);
        assert!(ucal_from_utilde(&utilde_from_ucal(&m)).max_abs_diff(&m) < 1e-15);
    }

    #[test]
    fn dirichlet_choice_makes_v_equal_vtilde() {
        let basis = zero_basis();
        let u = dirichlet_u(&basis).unwrap();
        let (v, vt) = build_v_vtilde(&basis, u.matrix()).unwrap();
        assert!(v.max_abs_diff(&vt) < 1e-12);
    }

    #[test]
    fn zero_u_leaves_first_terms() {
        let basis = zero_basis();
        let (ma, mb) = basis.require_even().unwrap();
        let (v, _) = build_v_vtilde(&basis, &Mat2::zero()).unwrap();
        assert!(v.max_abs_diff(&(ma.conj() - mb.conj().scale(I))) < 1e-15);
    }

    #[test]
    fn dirichlet_and_neumann_images() {
        let basis = zero_basis();
        let d = forward_map(&basis, &dirichlet_u(&basis).unwrap()).unwrap();
        assert!(d.ucal.matrix().max_abs_diff(&Mat2::identity()) < 1e-12);
        let n = forward_map(&basis, &neumann_u(&basis).unwrap()).unwrap();
        assert!(n.ucal.matrix().max_abs_diff(&(-Mat2::identity())) < 1e-12);
    }

    #[test]
    fn inverse_of_dirichlet_and_neumann() {
        let basis = zero_basis();
        let u = inverse_map(&basis, &Unitary2::identity()).unwrap();
        assert!(u.matrix().max_abs_diff(dirichlet_u(&basis).unwrap().matrix()) < 1e-10);
        let minus = Unitary2::new(-Mat2::identity()).unwrap();
        let u = inverse_map(&basis, &minus).unwrap();
        assert!(u.matrix().max_abs_diff(neumann_u(&basis).unwrap().matrix()) < 1e-10);
    }

    #[test]
    fn identity_spot_checks() {
        let basis = zero_basis();
        let (v, vt) = build_v_vtilde(&basis, &Mat2::identity()).unwrap();
        assert!((v * v.adjoint()).max_abs_diff(&(vt * vt.adjoint())) < 1e-10);
        let u = Mat2::from_real([[2.0, 0.0], [0.0, 1.0]]);
        let (v, vt) = build_v_vtilde(&basis, &u).unwrap();
        let lhs = v * v.adjoint() - vt * vt.adjoint();
        assert!(lhs.max_abs_diff(&Mat2::from_real([[-6.0, 0.0], [0.0, 0.0]])) < 1e-8);
    }

    #[test]
    fn general_construction_agrees_with_even_one() {
        let p = Potential::harmonic(1.0, 1.0).unwrap();
        let even = solve_even_odd(&p).unwrap();
        let general = solve_orthonormal_pair(&p).unwrap();
        let w = change_of_basis(&even, &general).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let u = haar_unitary(&mut rng);
            let ucal = forward_map(&even, &u).unwrap().ucal;
            let same_basis = forward_map_general(&even, &u).unwrap();
            assert!(same_basis.matrix().max_abs_diff(ucal.matrix()) < 1e-9);
            let u_gen = Unitary2::certify(w * *u.matrix() * w.transpose(), 1e-7).unwrap();
            let other = forward_map_general(&general, &u_gen).unwrap();
            assert!(other.matrix().max_abs_diff(ucal.matrix()) < 1e-7);
        }
    }

    #[test]
    fn general_inverse_round_trip() {
        let basis = solve_orthonormal_pair(&Potential::polynomial(vec![0.0, 1.0], 1.0).unwrap())
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let u = haar_unitary(&mut rng);
            let ucal = forward_map_general(&basis, &u).unwrap();
            let back = inverse_map_general(&basis, &ucal).unwrap();
            assert!(back.matrix().max_abs_diff(u.matrix()) < 1e-8);
        }
    }

    #[test]
    fn sampled_identities_pass_and_are_reproducible() {
        let basis = zero_basis();
        let r1 = check_identities_seeded(&basis, 100, 9).unwrap();
        let r2 = check_identities_seeded(&basis, 100, 9).unwrap();
        assert!(r1.all_passed(), "{r1:?}");
        assert_eq!(r1, r2);
        assert_eq!(r1.gram_identity.passed, 200);
    }

    #[test]
    fn general_basis_is_rejected_by_even_operations() {
        let basis = solve_orthonormal_pair(&Potential::zero(1.0).unwrap()).unwrap();
        assert!(matches!(
            forward_map(&basis, &Unitary2::identity()),
            Err(Error::Mode { .. })
        ));
        assert!(matches!(check_identities(&basis, 1), Err(Error::Mode { .. })));
    }
}
