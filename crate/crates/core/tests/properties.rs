use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use saext_core::bcclassify::{classify, family_of, synthesize, BcFamily, Case, DEFAULT_TOL};
use saext_core::deficiency::solve_even_odd;
use saext_core::extmap::{extension_boundary_rows, forward_map, inverse_map};
use saext_core::io::to_canonical_json;
use saext_core::linalg::{haar_unitary, C64};
use saext_core::odesolve::{integrate, integrate_pair, Tolerances};
use saext_core::potential::{Piece, Potential};
use saext_core::{apply_bc, Unitary2};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn potential_strategy() -> impl Strategy<Value = Potential> {
    prop_oneof![
        (0.3f64..2.5).prop_map(|a| Potential::zero(a).unwrap()),
        (-3.0f64..3.0, 0.3f64..2.0).prop_map(|(k, a)| Potential::harmonic(k, a).unwrap()),
        (-2.0f64..2.0, 0.5f64..4.0, 0.3f64..2.0)
            .prop_map(|(amp, w, a)| Potential::cosine(amp, w, a).unwrap()),
        (-8.0f64..8.0, 0.1f64..0.9, 0.3f64..2.0)
            .prop_map(|(d, frac, a)| Potential::finite_well(d, frac * a, a).unwrap()),
        (prop::collection::vec(-2.0f64..2.0, 1..5), 0.3f64..1.5)
            .prop_map(|(cs, a)| Potential::polynomial(cs, a).unwrap()),
    ]
}

fn symmetric_piecewise() -> impl Strategy<Value = Potential> {
    (prop::collection::vec(-5.0f64..5.0, 1..4), 0.5f64..2.0).prop_map(|(levels, a)| {
        let n = levels.len();
        let mut pieces = Vec::new();
        // mirror the levels about the origin with breakpoints at ±k a/(n+1)
        let edge = |k: usize| a * k as f64 / n as f64;
        for k in (0..n).rev() {
            pieces.push(Piece { from: -edge(k + 1), to: -edge(k), coefficients: vec![levels[k]] });
        }
        for k in 0..n {
            pieces.push(Piece { from: edge(k), to: edge(k + 1), coefficients: vec![levels[k]] });
        }
        Potential::piecewise(pieces, a).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evaluate_is_pure(p in potential_strategy(), t in -1.0f64..1.0) {
        let x = t * p.a();
        prop_assert_eq!(p.evaluate(x).unwrap().to_bits(), p.evaluate(x).unwrap().to_bits());
    }

    #[test]
    fn even_kinds_report_even(p in symmetric_piecewise()) {
        prop_assert!(p.is_even(1e-12));
    }

    #[test]
    fn solutions_are_linear_in_initial_data(
        p in potential_strategy(),
        lam_re in -5.0f64..20.0,
        lam_im in -2.0f64..2.0,
        (ar, ai, br, bi) in (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0),
    ) {
        let a = p.a();
        let lam = c(lam_re, lam_im);
        let (alpha, beta) = (c(ar, ai), c(br, bi));
        let tol = Tolerances::default();
        let (u1, u2) = integrate_pair(&p, lam, (-a, a), tol).unwrap();
        let f = integrate(&p, lam, (-a, a), (alpha, beta), tol).unwrap();
        let scale = f.samples.iter().map(|s| s.f.norm().max(s.df.norm())).fold(1.0, f64::max);
        for ((s, x), y) in f.samples.iter().zip(&u1.samples).zip(&u2.samples) {
            let want = alpha * x.f + beta * y.f;
            let dwant = alpha * x.df + beta * y.df;
            prop_assert!((s.f - want).norm() <= 1e-10 * scale * 10.0_f64.max(1.0));
            prop_assert!((s.df - dwant).norm() <= 1e-10 * scale * 10.0_f64.max(1.0));
        }
    }

    #[test]
    fn wronskian_is_constant(
        p in potential_strategy(),
        lam_re in -5.0f64..20.0,
        lam_im in -2.0f64..2.0,
    ) {
        let a = p.a();
        let (u1, u2) = integrate_pair(&p, c(lam_re, lam_im), (-a, a), Tolerances::default()).unwrap();
        let w = u1.wronskian_with(&u2).unwrap();
        let scale = u1.samples.iter().zip(&u2.samples)
            .map(|(x, y)| (x.f * y.df).norm().max((x.df * y.f).norm()))
            .fold(1.0, f64::max);
        for v in &w {
            prop_assert!((v - w[0]).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn halving_tolerances_converges(
        p in potential_strategy(),
        lam_re in -5.0f64..20.0,
    ) {
        let a = p.a();
        let coarse = Tolerances::default();
        let fine = Tolerances::new(coarse.rtol / 2.0, coarse.atol / 2.0);
        let init = (c(1.0, 0.0), c(0.0, 1.0));
        let x = integrate(&p, c(lam_re, 1.0), (-a, a), init, coarse).unwrap();
        let y = integrate(&p, c(lam_re, 1.0), (-a, a), init, fine).unwrap();
        let scale = x.f1.norm().max(x.df1.norm()).max(1.0);
        prop_assert!((x.f1 - y.f1).norm() <= coarse.rtol * scale * 100.0);
        prop_assert!((x.df1 - y.df1).norm() <= coarse.rtol * scale * 100.0);
    }

    #[test]
    fn extension_functions_satisfy_their_condition(seed in any::<u64>()) {
        let basis = solve_even_odd(&Potential::harmonic(1.0, 1.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = haar_unitary(&mut rng);
        let pair = forward_map(&basis, &u).unwrap();
        let bc = classify(&pair.ucal, DEFAULT_TOL).unwrap();
        for row in extension_boundary_rows(&basis, u.matrix()) {
            prop_assert!(apply_bc(&bc, row[1], row[3], row[0], row[2]) <= 1e-8);
        }
        let back = inverse_map(&basis, &pair.ucal).unwrap();
        prop_assert!(back.matrix().max_abs_diff(u.matrix()) <= 1e-8);
    }

    #[test]
    fn robin_family_round_trips(
        alpha in -10.0f64..10.0,
        gamma in -10.0f64..10.0,
        br in -3.0f64..3.0,
        bi in -3.0f64..3.0,
    ) {
        prop_assume!((alpha * gamma + br * br + bi * bi).abs() > 1e-3);
        let fam = BcFamily::Robin { alpha, beta: c(br, bi), gamma };
        let u = synthesize(&fam).unwrap();
        let bc = classify(&u, DEFAULT_TOL).unwrap();
        prop_assert_eq!(bc.case, Case::I);
        let r = bc.robin.unwrap();
        let scale = alpha.abs().max(gamma.abs()).max(1.0);
        prop_assert!((r.alpha - alpha).abs() <= 1e-9 * scale * scale);
        prop_assert!((r.gamma - gamma).abs() <= 1e-9 * scale * scale);
        prop_assert!((r.beta - c(br, bi)).norm() <= 1e-9 * scale * scale);
    }

    #[test]
    fn automorphic_family_round_trips(theta in 0.0f64..std::f64::consts::PI, phi in 0.0f64..std::f64::consts::TAU) {
        let u = synthesize(&BcFamily::Automorphic { theta: Some(theta), phi: Some(phi), k: None }).unwrap();
        let bc = classify(&u, DEFAULT_TOL).unwrap();
        prop_assert_eq!(bc.case, Case::IV);
        let back = synthesize(&family_of(&bc).unwrap()).unwrap();
        prop_assert!(back.matrix().max_abs_diff(u.matrix()) <= 1e-9);
    }

    #[test]
    fn case_iv_iff_traceless_with_det_minus_one(seed in any::<u64>(), flip in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = if flip {
            let theta = rand::Rng::random_range(&mut rng, 0.0..std::f64::consts::PI);
            synthesize(&BcFamily::Automorphic { theta: Some(theta), phi: Some(1.0), k: None }).unwrap()
        } else {
            haar_unitary(&mut rng)
        };
        let bc = classify(&u, DEFAULT_TOL).unwrap();
        let m = u.matrix();
        let structural = m.trace().norm() <= DEFAULT_TOL && (m.det() + 1.0).norm() <= DEFAULT_TOL;
        prop_assert_eq!(bc.case == Case::IV, structural);
    }

    #[test]
    fn canonical_json_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Unitary2 = haar_unitary(&mut rng);
        let bc = classify(&u, DEFAULT_TOL).unwrap();
        prop_assert_eq!(to_canonical_json(&bc).unwrap(), to_canonical_json(&bc.clone()).unwrap());
        let back: saext_core::BoundaryCondition =
            serde_json::from_str(&to_canonical_json(&bc).unwrap()).unwrap();
        prop_assert_eq!(back, bc);
    }
}
