//! Batch invariant checks across all modules, reported rather than thrown.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bcclassify::{classify, family_of, synthesize, BcFamily, BcName, Case, DEFAULT_TOL};
use crate::deficiency::{change_of_basis, solve_even_odd, solve_orthonormal_pair};
use crate::error::Result;
use crate::extmap::{check_identities_seeded, forward_map, forward_map_general, inverse_map};
use crate::linalg::{c, haar_unitary, Unitary2, I};
use crate::potential::Potential;
use crate::spectrum::{eigenfunction_residuals, find_eigenvalues};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed value; compared against `threshold` in the direction
    /// given by `bound`.
    pub value: f64,
    pub threshold: f64,
    pub bound: Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    AtMost,
    Above,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
            bound: Bound::AtMost,
        }
    }

    fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            passed: value > threshold,
            value,
            threshold,
            bound: Bound::Above,
        }
    }

    fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            passed: ok,
            value: if ok { 0.0 } else { 1.0 },
            threshold: 0.0,
            bound: Bound::AtMost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// The even potentials used throughout the checks, at half-width `a`.
pub fn test_potentials(a: f64) -> Result<Vec<Potential>> {
    Ok(vec![
        Potential::zero(a)?,
        Potential::harmonic(1.0, a)?,
        Potential::cosine(1.0, PI, a)?,
        Potential::finite_well(-5.0, a / 2.0, a)?,
    ])
}

fn label(p: &Potential) -> String {
    format!("{}@a={}", p.kind().name(), p.a())
}

pub fn run_all(samples: usize, seed: u64) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for a in [0.5, 1.0, 2.0] {
        for p in test_potentials(a)? {
            let basis = solve_even_odd(&p)?;
            let w = basis
                .endpoint_wronskians()
                .iter()
                .map(|w| (w - I).norm())
                .fold(0.0, f64::max);
            checks.push(Check::at_most(format!("wronskian/{}", label(&p)), w, 1e-8));
        }
    }

    for p in test_potentials(1.0)? {
        let basis = solve_even_odd(&p)?;
        let rep = check_identities_seeded(&basis, samples, seed)?;
        let name = label(&p);
        checks.push(Check::at_most(
            format!("gram-identity/{name}"),
            rep.gram_identity.worst,
            rep.gram_identity.threshold,
        ));
        checks.push(Check::above(
            format!("v-nonsingular/{name}"),
            rep.v_nonsingular.worst,
            rep.v_nonsingular.threshold,
        ));
        checks.push(Check::above(
            format!("inverse-system/{name}"),
            rep.inverse_system.worst,
            rep.inverse_system.threshold,
        ));
        let mut unitarity = 0.0_f64;
        let mut round_trip = 0.0_f64;
        for _ in 0..samples {
            let u = haar_unitary(&mut rng);
            let pair = forward_map(&basis, &u)?;
            unitarity = unitarity.max(pair.ucal.matrix().unitarity_defect());
            let back = inverse_map(&basis, &pair.ucal)?;
            round_trip = round_trip.max(back.matrix().max_abs_diff(u.matrix()));
        }
        checks.push(Check::at_most(format!("forward-unitary/{name}"), unitarity, 1e-9));
        checks.push(Check::at_most(format!("round-trip/{name}"), round_trip, 1e-8));
    }

    for p in [Potential::polynomial(vec![0.0, 1.0], 1.0)?, Potential::zero(1.0)?] {
        let basis = solve_orthonormal_pair(&p)?;
        let mut othg = 0.0_f64;
        let mut othg2 = 0.0_f64;
        for j in 0..2 {
            for k in 0..2 {
                let expect = if j == k { c(0.0, 2.0) } else { c(0.0, 0.0) };
                othg = othg.max((basis.boundary_form(j, k) - expect).norm());
                othg2 = othg2.max(basis.bilinear_form(j, k).norm());
            }
        }
        let name = label(&p);
        checks.push(Check::at_most(format!("boundary-form/{name}"), othg, 1e-8));
        checks.push(Check::at_most(format!("bilinear-form/{name}"), othg2, 1e-8));
        let mut unitarity = 0.0_f64;
        for _ in 0..samples {
            let ucal = forward_map_general(&basis, &haar_unitary(&mut rng))?;
            unitarity = unitarity.max(ucal.matrix().unitarity_defect());
        }
        checks.push(Check::at_most(format!("general-unitary/{name}"), unitarity, 1e-8));
    }

    {
        let p = Potential::harmonic(1.0, 1.0)?;
        let even = solve_even_odd(&p)?;
        let general = solve_orthonormal_pair(&p)?;
        let w = change_of_basis(&even, &general)?;
        let mut diff = 0.0_f64;
        for _ in 0..samples {
            let u = haar_unitary(&mut rng);
            let ucal = forward_map(&even, &u)?.ucal;
            let u_gen = Unitary2::certify(w * *u.matrix() * w.transpose(), 1e-7)?;
            let other = forward_map_general(&general, &u_gen)?;
            diff = diff.max(other.matrix().max_abs_diff(ucal.matrix()));
        }
        checks.push(Check::at_most("even-vs-general/harmonic@a=1", diff, 1e-7));
    }

    let table = [
        (synthesize(&BcFamily::Dirichlet)?, BcName::Dirichlet),
        (synthesize(&BcFamily::Neumann)?, BcName::Neumann),
        (synthesize(&BcFamily::Periodic)?, BcName::Periodic),
        (synthesize(&BcFamily::AntiPeriodic)?, BcName::AntiPeriodic),
        (
            synthesize(&BcFamily::Automorphic { theta: Some(0.0), phi: Some(0.0), k: None })?,
            BcName::DirichletAtANeumannAtMinusA,
        ),
    ];
    for (u, name) in table {
        let got = classify(&u, DEFAULT_TOL)?.name;
        checks.push(Check::flag(format!("classify/{name}"), got == name));
    }
    let mut worst = 0.0_f64;
    let mut hermiticity = 0.0_f64;
    for _ in 0..samples.saturating_mul(20) {
        let u = haar_unitary(&mut rng);
        let bc = classify(&u, DEFAULT_TOL)?;
        if let Some(h) = bc.h {
            hermiticity = hermiticity.max(h.hermiticity_defect());
        }
        if matches!(bc.case, Case::I | Case::IV) {
            if let Some(f) = family_of(&bc) {
                worst = worst.max(synthesize(&f)?.matrix().max_abs_diff(u.matrix()));
            }
        }
    }
    checks.push(Check::at_most("classify-round-trip", worst, 1e-7));
    checks.push(Check::at_most("h-hermitian", hermiticity, 1e-10));

    let zero = Potential::zero(1.0)?;
    let spectra = [
        (BcFamily::Dirichlet, vec![(FRAC_PI_2).powi(2), PI * PI, (3.0 * FRAC_PI_2).powi(2)]),
        (
            BcFamily::Neumann,
            vec![0.0, (FRAC_PI_2).powi(2), PI * PI, (3.0 * FRAC_PI_2).powi(2)],
        ),
    ];
    for (fam, expect) in spectra {
        let bc = classify(&synthesize(&fam)?, DEFAULT_TOL)?;
        let r = find_eigenvalues(&zero, &bc, -0.5, 25.0, 400)?;
        let err = if r.eigenvalues.len() == expect.len() {
            r.eigenvalues
                .iter()
                .zip(&expect)
                .map(|(e, x)| (e - x).abs() / x.abs().max(1.0))
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        checks.push(Check::at_most(format!("spectrum/{}", bc.name), err, 1e-6));
        let res = eigenfunction_residuals(&r)?;
        checks.push(Check::at_most(
            format!("boundary-residual/{}", bc.name),
            res.worst_boundary,
            1e-6,
        ));
        checks.push(Check::at_most(
            format!("symmetry-defect/{}", bc.name),
            res.worst_symmetry,
            1e-6,
        ));
    }

    let passed = checks.iter().filter(|c| c.passed).count();
    Ok(VerifyReport {
        samples,
        seed,
        failed: checks.len() - passed,
        passed,
        checks,
    })
}
