use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;

use saext_core::bcclassify::{classify, synthesize, BcFamily, DEFAULT_TOL};
use saext_core::deficiency::{solve_even_odd, solve_orthonormal_pair};
use saext_core::extmap::{forward_map, inverse_map};
use saext_core::linalg::haar_unitary;
use saext_core::odesolve::{integrate_pair, Tolerances};
use saext_core::spectrum::{find_eigenvalues_with, SpectrumOptions};
use saext_core::{Potential, C64};

fn ode(c: &mut Criterion) {
    let p = Potential::harmonic(1.0, 1.0).unwrap();
    c.bench_function("integrate_pair/harmonic", |b| {
        b.iter(|| integrate_pair(&p, black_box(C64::new(3.0, 1.0)), (-1.0, 1.0), Tolerances::default()))
    });
}

fn deficiency(c: &mut Criterion) {
    let p = Potential::finite_well(-5.0, 0.5, 1.0).unwrap();
    c.bench_function("deficiency/even", |b| b.iter(|| solve_even_odd(black_box(&p)).unwrap()));
    c.bench_function("deficiency/general", |b| {
        b.iter(|| solve_orthonormal_pair(black_box(&p)).unwrap())
    });
}

fn maps(c: &mut Criterion) {
    let basis = solve_even_odd(&Potential::harmonic(1.0, 1.0).unwrap()).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let u = haar_unitary(&mut rng);
    let ucal = forward_map(&basis, &u).unwrap().ucal;
    c.bench_function("extmap/forward", |b| b.iter(|| forward_map(&basis, black_box(&u)).unwrap()));
    c.bench_function("extmap/inverse", |b| b.iter(|| inverse_map(&basis, black_box(&ucal)).unwrap()));
    c.bench_function("bcclassify/classify", |b| {
        b.iter(|| classify(black_box(&ucal), DEFAULT_TOL).unwrap())
    });
}

fn spectrum(c: &mut Criterion) {
    let p = Potential::zero(1.0).unwrap();
    let robin = BcFamily::Robin { alpha: 1.0, beta: C64::new(0.5, 0.0), gamma: 2.0 };
    let bc = classify(&synthesize(&robin).unwrap(), DEFAULT_TOL).unwrap();
    let opts = SpectrumOptions { threads: Some(1), ..SpectrumOptions::default() };
    let mut g = c.benchmark_group("spectrum");
    g.sample_size(10);
    g.bench_function("robin/zero/400", |b| {
        b.iter(|| find_eigenvalues_with(&p, &bc, -5.0, 50.0, 400, &opts).unwrap())
    });
    g.finish();
}

criterion_group!(benches, ode, deficiency, maps, spectrum);
criterion_main!(benches);
